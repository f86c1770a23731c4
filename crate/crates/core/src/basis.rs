//! Piecewise-linear radial finite elements with a Dirichlet condition at
//! `r_max`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Regular,
    Custom,
}

/// Boundary condition at `r = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    /// A half hat sits on the first node, so `f(0)` is free.
    #[default]
    Free,
    /// No basis function at the first node, `f(0) = 0`.
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    kind: GridKind,
    origin: Origin,
}

impl RadialGrid {
    /// Equally spaced nodes on `[0, r_max]` carrying `n_basis` hats: spacing
    /// `r_max / n_basis` with a free origin, `r_max / (n_basis + 1)` otherwise.
    pub fn regular(r_max: f64, n_basis: usize) -> Result<Self> {
        Self::regular_with(r_max, n_basis, Origin::Free)
    }

    pub fn regular_with(r_max: f64, n_basis: usize, origin: Origin) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(invalid(format!("r_max must be positive, got {r_max}")));
        }
        if n_basis == 0 {
            return Err(invalid("basis size must be at least 1"));
        }
        let intervals = match origin {
            Origin::Free => n_basis,
            Origin::Dirichlet => n_basis + 1,
        };
        let step = r_max / intervals as f64;
        let mut nodes: Vec<f64> = (0..intervals).map(|i| i as f64 * step).collect();
        nodes.push(r_max);
        Ok(Self { nodes, kind: GridKind::Regular, origin })
    }

    /// Arbitrary node list; must start at 0 and increase strictly.
    pub fn custom(nodes: Vec<f64>) -> Result<Self> {
        Self::custom_with(nodes, Origin::Free)
    }

    pub fn custom_with(nodes: Vec<f64>, origin: Origin) -> Result<Self> {
        let min_len = match origin {
            Origin::Free => 2,
            Origin::Dirichlet => 3,
        };
        if nodes.len() < min_len {
            return Err(invalid("a grid needs at least one interior node"));
        }
        if nodes[0] != 0.0 {
            return Err(invalid("first grid node must be 0"));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("grid nodes must be finite and strictly increasing"));
        }
        Ok(Self { nodes, kind: GridKind::Custom, origin })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn n_basis(&self) -> usize {
        self.nodes.len() - 1 - self.offset()
    }

    fn offset(&self) -> usize {
        match self.origin {
            Origin::Free => 0,
            Origin::Dirichlet => 1,
        }
    }

    /// Basis index of the hat centered on node `j`, if any.
    pub fn basis_of_node(&self, j: usize) -> Option<usize> {
        j.checked_sub(self.offset()).filter(|&i| i < self.n_basis())
    }

    /// Node carrying basis function `i`.
    pub fn node_of_basis(&self, i: usize) -> usize {
        i + self.offset()
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Left end and width of cell `k`.
    pub fn cell(&self, k: usize) -> (f64, f64) {
        (self.nodes[k], self.nodes[k + 1] - self.nodes[k])
    }

    /// Value of basis function `i` at `r`.
    pub fn hat(&self, i: usize, r: f64) -> f64 {
        let j = self.node_of_basis(i);
        let c = self.nodes[j];
        let h = self.nodes[j + 1];
        if j == 0 {
            return if (0.0..h).contains(&r) { (h - r) / h } else { 0.0 };
        }
        let l = self.nodes[j - 1];
        if r <= l || r >= h {
            0.0
        } else if r <= c {
            (r - l) / (c - l)
        } else {
            (h - r) / (h - c)
        }
    }
}

/// Products of the two linear shapes living on one cell, in local coordinate
/// `x ∈ [0, 1]`: `x^right (1 − x)^left` with `left + right = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum CellProduct {
    LeftLeft,
    LeftRight,
    RightRight,
}

impl CellProduct {
    pub(crate) const ALL: [CellProduct; 3] =
        [CellProduct::LeftLeft, CellProduct::LeftRight, CellProduct::RightRight];

    /// Exponents `(p, q)` of `x^p (1 − x)^q`.
    pub(crate) fn exponents(self) -> (i32, i32) {
        match self {
            CellProduct::LeftLeft => (0, 2),
            CellProduct::LeftRight => (1, 1),
            CellProduct::RightRight => (2, 0),
        }
    }

    pub(crate) fn eval(self, x: f64) -> f64 {
        match self {
            CellProduct::LeftLeft => (1.0 - x) * (1.0 - x),
            CellProduct::LeftRight => x * (1.0 - x),
            CellProduct::RightRight => x * x,
        }
    }

    /// Basis index pair `(i, j)`, `i ≤ j`, carried by this product on cell
    /// `k`, or `None` when one factor is a boundary node.
    pub(crate) fn basis_pair(self, k: usize, grid: &RadialGrid) -> Option<(usize, usize)> {
        let left = grid.basis_of_node(k);
        let right = grid.basis_of_node(k + 1);
        match self {
            CellProduct::LeftLeft => left.map(|i| (i, i)),
            CellProduct::LeftRight => left.zip(right),
            CellProduct::RightRight => right.map(|i| (i, i)),
        }
    }
}

/// `∫₀¹ x^p (1 − x)^q dx` for non-negative integers.
pub(crate) fn beta_int(p: i32, q: i32) -> f64 {
    debug_assert!(p >= 0 && q >= 0);
    // p! q! / (p + q + 1)!
    let mut v = 1.0;
    for k in 1..=q {
        v *= k as f64 / (p + k) as f64;
    }
    v / (p + q + 1) as f64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialBasis {
    grid: RadialGrid,
    overlap: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    centrifugal: DMatrix<f64>,
}

impl RadialBasis {
    pub fn new(grid: RadialGrid) -> Self {
        let n = grid.n_basis();
        let mut overlap = DMatrix::zeros(n, n);
        let mut stiffness = DMatrix::zeros(n, n);
        let mut centrifugal = DMatrix::zeros(n, n);
        for k in 0..grid.n_cells() {
            let (a, h) = grid.cell(k);
            // r² = a² + 2ahx + h²x² on the cell.
            let weight = [a * a, 2.0 * a * h, h * h];
            for prod in CellProduct::ALL {
                let Some((i, j)) = prod.basis_pair(k, &grid) else {
                    continue;
                };
                let (p, q) = prod.exponents();
                let s: f64 = weight
                    .iter()
                    .enumerate()
                    .map(|(c, w)| w * beta_int(p + c as i32, q))
                    .sum::<f64>()
                    * h;
                let grad_sign = if prod == CellProduct::LeftRight { -1.0 } else { 1.0 };
                let d = grad_sign * (a * a + a * h + h * h / 3.0) / h;
                let m = h * beta_int(p, q);
                for (mat, v) in [(&mut overlap, s), (&mut stiffness, d), (&mut centrifugal, m)] {
                    mat[(i, j)] += v;
                    if i != j {
                        mat[(j, i)] += v;
                    }
                }
            }
        }
        Self { grid, overlap, stiffness, centrifugal }
    }

    pub fn regular(r_max: f64, n_basis: usize) -> Result<Self> {
        Ok(Self::new(RadialGrid::regular(r_max, n_basis)?))
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.n_basis()
    }

    /// `∫ χ_i χ_j r² dr`
    pub fn overlap(&self) -> &DMatrix<f64> {
        &self.overlap
    }

    /// `∫ χ_i' χ_j' r² dr`
    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// `∫ χ_i χ_j dr`
    pub fn centrifugal(&self) -> &DMatrix<f64> {
        &self.centrifugal
    }

    /// Kinetic matrix of angular momentum `l` for the operator `−Δ`.
    pub fn kinetic(&self, l: usize) -> DMatrix<f64> {
        if l == 0 {
            return self.stiffness.clone();
        }
        let c = (l * (l + 1)) as f64;
        &self.stiffness + &self.centrifugal * c
    }
}
