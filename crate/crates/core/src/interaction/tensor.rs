use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Index of the banded pair `(i, j)`, `|i − j| ≤ 1`, in tensor blocks.
pub fn pair_index(i: usize, j: usize) -> Option<usize> {
    match i.abs_diff(j) {
        0 => Some(2 * i),
        1 => Some(2 * i.min(j) + 1),
        _ => None,
    }
}

/// Inverse of [`pair_index`], returning `(i, j)` with `i ≤ j`.
pub fn pair_of(p: usize) -> (usize, usize) {
    (p / 2, p / 2 + p % 2)
}

/// Two-body integrals `(ij|mn)_{l,l'}` over hat functions.
///
/// Products `χ_i χ_j` vanish unless `|i − j| ≤ 1`, so each `(l, l')` block is
/// a symmetric matrix over the `2 n_basis − 1` banded pairs. Blocks are stored
/// for `l ≤ l'`; the kernel is symmetric in `(l, l')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyTensor {
    n_basis: usize,
    l_max: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl TwoBodyTensor {
    pub fn zeros(n_basis: usize, l_max: usize) -> Self {
        let np = Self::pair_count_for(n_basis);
        let blocks = (0..(l_max + 1) * (l_max + 2) / 2)
            .map(|_| DMatrix::zeros(np, np))
            .collect();
        Self { n_basis, l_max, blocks }
    }

    /// Builds a tensor from one block per `(l, l')`, `l ≤ l'`, in row-major
    /// order of the upper triangle.
    pub fn from_blocks(n_basis: usize, l_max: usize, blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let np = Self::pair_count_for(n_basis);
        if blocks.len() != (l_max + 1) * (l_max + 2) / 2 {
            return Err(invalid("wrong number of tensor blocks"));
        }
        if blocks.iter().any(|b| b.nrows() != np || b.ncols() != np) {
            return Err(invalid("tensor block has the wrong shape"));
        }
        let blocks = blocks.iter().map(crate::linalg::symmetrize).collect();
        Ok(Self { n_basis, l_max, blocks })
    }

    fn pair_count_for(n_basis: usize) -> usize {
        2 * n_basis - 1
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn pair_count(&self) -> usize {
        Self::pair_count_for(self.n_basis)
    }

    /// Number of stored doubles.
    pub fn stored_len(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    fn slot(&self, l: usize, l2: usize) -> usize {
        let (a, b) = if l <= l2 { (l, l2) } else { (l2, l) };
        a * (2 * self.l_max + 3 - a) / 2 + (b - a)
    }

    pub fn block(&self, l: usize, l2: usize) -> &DMatrix<f64> {
        &self.blocks[self.slot(l, l2)]
    }

    pub fn block_mut(&mut self, l: usize, l2: usize) -> &mut DMatrix<f64> {
        let s = self.slot(l, l2);
        &mut self.blocks[s]
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// `(ij|mn)_{l,l'}`, zero outside the band.
    pub fn entry(&self, l: usize, l2: usize, i: usize, j: usize, m: usize, n: usize) -> f64 {
        match (pair_index(i, j), pair_index(m, n)) {
            (Some(p), Some(q)) => self.block(l, l2)[(p, q)],
            _ => 0.0,
        }
    }

    /// `self + c · other`.
    pub fn add_scaled(&mut self, c: f64, other: &TwoBodyTensor) {
        assert_eq!(self.n_basis, other.n_basis);
        assert_eq!(self.l_max, other.l_max);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b * c;
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut t = self.clone();
        for b in &mut t.blocks {
            *b *= c;
        }
        t
    }

    fn check_dim(&self, m: &DMatrix<f64>) -> Result<()> {
        if m.nrows() != self.n_basis || m.ncols() != self.n_basis {
            return Err(invalid(format!(
                "matrix is {}x{}, tensor expects {}",
                m.nrows(),
                m.ncols(),
                self.n_basis
            )));
        }
        Ok(())
    }

    /// Direct term `J(G)_{ij} = Σ_{mn} (ij|mn)_{0,0} G_{mn}`.
    pub fn contract_direct(&self, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(g)?;
        let nb = self.n_basis;
        let np = self.pair_count();
        let folded = nalgebra::DVector::from_fn(np, |q, _| {
            let (m, n) = pair_of(q);
            if m == n {
                g[(m, m)]
            } else {
                g[(m, n)] + g[(n, m)]
            }
        });
        let jp = self.block(0, 0) * folded;
        let mut out = DMatrix::zeros(nb, nb);
        for p in 0..np {
            let (i, j) = pair_of(p);
            out[(i, j)] = jp[p];
            out[(j, i)] = jp[p];
        }
        Ok(out)
    }

    /// Exchange-type term `K^{l l'}(M)_{ij} = Σ_{mn} (im|jn)_{l,l'} M_{mn}`.
    pub fn contract_exchange(&self, l: usize, l2: usize, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(m)?;
        let nb = self.n_basis;
        let v = self.block(l, l2);
        let mut out = DMatrix::zeros(nb, nb);
        for i in 0..nb {
            let mi = i.saturating_sub(1)..=(i + 1).min(nb - 1);
            for j in i..nb {
                let mut acc = 0.0;
                for a in mi.clone() {
                    let p = pair_index(i, a).unwrap();
                    for b in j.saturating_sub(1)..=(j + 1).min(nb - 1) {
                        let q = pair_index(j, b).unwrap();
                        acc += v[(p, q)] * m[(a, b)];
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        Ok(out)
    }
}
