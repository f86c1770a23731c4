//! Integrals of the multipole kernels `min(r,s)^n / max(r,s)^(n+1)` against
//! products of hat functions, in closed form.

use nalgebra::DMatrix;

use super::moments::{ordered_moment, weighted_beta};
use super::tensor::{pair_index, TwoBodyTensor};
use super::wigner::multipole_terms;
use crate::basis::{CellProduct, RadialBasis};
use crate::error::{HfbError, Result};

pub const MAX_L: usize = 2;

/// Pair-space matrix of `∬ min^n/max^(n+1) χ_iχ_j(r) χ_mχ_n(s) r²s² dr ds`.
#[allow(clippy::needless_range_loop)]
pub fn multipole_block(basis: &RadialBasis, n: u32) -> DMatrix<f64> {
    let grid = basis.grid();
    let nb = basis.dim();
    let cells = grid.n_cells();
    let n = n as i32;
    let np = 2 * nb - 1;

    // Cell factors when the cell lies entirely below (inner) or above (outer)
    // the other variable.
    let mut inner = vec![[0.0; 3]; cells];
    let mut outer = vec![[0.0; 3]; cells];
    for k in 0..cells {
        let (a, h) = grid.cell(k);
        for (t, prod) in CellProduct::ALL.iter().enumerate() {
            let (p, q) = prod.exponents();
            inner[k][t] = h * weighted_beta(a, h, n + 2, p, q);
            if k > 0 {
                outer[k][t] = h * weighted_beta(a, h, 1 - n, p, q);
            }
        }
    }

    let mut out = DMatrix::zeros(np, np);
    for k in 0..cells {
        let (a, h) = grid.cell(k);
        for (t, pt) in CellProduct::ALL.iter().enumerate() {
            let Some((i, j)) = pt.basis_pair(k, grid) else {
                continue;
            };
            let p = pair_index(i, j).unwrap();
            for k2 in k..cells {
                for (t2, pt2) in CellProduct::ALL.iter().enumerate() {
                    let Some((m, mm)) = pt2.basis_pair(k2, grid) else {
                        continue;
                    };
                    let q = pair_index(m, mm).unwrap();
                    let v = if k2 > k {
                        inner[k][t] * outer[k2][t2]
                    } else {
                        h * h
                            * (ordered_moment(a, h, n, *pt, *pt2)
                                + ordered_moment(a, h, n, *pt2, *pt))
                    };
                    out[(p, q)] += v;
                    if k2 > k {
                        out[(q, p)] += v;
                    }
                }
            }
        }
    }
    crate::linalg::symmetrize(&out)
}

/// Tensor for the kernel `coupling / |x − y|`, projected on angular momenta
/// `0..=l_max`.
pub fn coulomb_tensor(basis: &RadialBasis, l_max: usize, coupling: f64) -> Result<TwoBodyTensor> {
    if l_max > MAX_L {
        return Err(HfbError::Unsupported(format!(
            "l_max = {l_max}, multipole tensors support l_max <= {MAX_L}"
        )));
    }
    let unit: Vec<DMatrix<f64>> = (0..=2 * l_max as u32).map(|n| multipole_block(basis, n)).collect();
    let mut t = TwoBodyTensor::zeros(basis.dim(), l_max);
    for l in 0..=l_max {
        for l2 in l..=l_max {
            let block = t.block_mut(l, l2);
            for (n, w) in multipole_terms(l as u32, l2 as u32) {
                *block += &unit[n as usize] * (coupling * w);
            }
        }
    }
    Ok(t)
}

/// Tensor of the attractive Newtonian kernel `−g / |x − y|`.
pub fn newton_tensor(basis: &RadialBasis, l_max: usize, g: f64) -> Result<TwoBodyTensor> {
    if !(g > 0.0) {
        return Err(HfbError::InvalidArgument(format!("coupling g must be positive, got {g}")));
    }
    coulomb_tensor(basis, l_max, -g)
}
