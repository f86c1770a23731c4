//! Effective nuclear force: Coulomb repulsion plus a difference of Gaussians.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::moments::unit_rule;
use super::multipole::coulomb_tensor;
use super::tensor::{pair_index, TwoBodyTensor};
use super::wigner::multipole_terms;
use crate::basis::{CellProduct, RadialBasis};
use crate::error::{invalid, HfbError, Result};

/// `κ/|x| − a₁ exp(−b₁|x|²) + a₂ exp(−b₂|x|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuclearKernel {
    pub kappa: f64,
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

impl NuclearKernel {
    /// One-parameter family with `b₁ = 1`, `b₂ = 4`, `a₂ = 3a/2`.
    pub fn with_strength(kappa: f64, a: f64) -> Self {
        Self { kappa, a1: a, b1: 1.0, a2: 1.5 * a, b2: 4.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b1 > 0.0 && self.b2 > 0.0) {
            return Err(invalid("Gaussian ranges b1, b2 must be positive"));
        }
        if !(self.b1 < self.b2) {
            return Err(invalid("the attractive range b1 must be smaller than b2"));
        }
        if self.kappa < 0.0 || self.a1 < 0.0 || self.a2 < 0.0 {
            return Err(invalid("kernel amplitudes must be non-negative"));
        }
        Ok(())
    }
}

/// `exp(−z) i_n(z)` for the modified spherical Bessel function `i_n`.
pub fn scaled_bessel_i(n_max: usize, z: f64) -> Vec<f64> {
    if z < 10.0 {
        bessel_series(n_max, z)
    } else {
        bessel_recurrence(n_max, z)
    }
}

// i_n(z) = z^n Σ_k (z²/2)^k / (k! (2n+2k+1)!!), all terms positive.
fn bessel_series(n_max: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    let e = (-z).exp();
    let half = 0.5 * z * z;
    let mut lead = 1.0;
    for (n, slot) in out.iter_mut().enumerate() {
        lead /= (2 * n + 1) as f64;
        let mut term = lead;
        let mut sum = term;
        for k in 1..400 {
            term *= half / (k as f64 * (2 * n + 2 * k + 1) as f64);
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        *slot = e * sum;
        lead *= z;
    }
    out
}

// Closed forms for n = 0, 1 and upward recurrence; stable for z > n.
fn bessel_recurrence(n_max: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    let e2 = (-2.0 * z).exp();
    out[0] = (1.0 - e2) / (2.0 * z);
    if n_max >= 1 {
        out[1] = (1.0 + e2) / (2.0 * z) - (1.0 - e2) / (2.0 * z * z);
    }
    for n in 1..n_max {
        out[n + 1] = out[n - 1] - (2 * n + 1) as f64 / z * out[n];
    }
    out
}

/// `½∫₋₁¹ P_n(t) exp(−b(r² + s² − 2rst)) dt` for `n = 0..=n_max`.
fn gaussian_projections(n_max: usize, b: f64, r: f64, s: f64) -> Vec<f64> {
    let d = r - s;
    let g = (-b * d * d).exp();
    scaled_bessel_i(n_max, 2.0 * b * r * s).into_iter().map(|v| g * v).collect()
}

/// Angular projection `½∫₋₁¹ P_l P_l' W(r² + s² − 2rst) dt` of the kernel.
pub fn nuclear_kernel_w(l: u32, l2: u32, r: f64, s: f64, kernel: &NuclearKernel) -> Result<f64> {
    if r < 0.0 || s < 0.0 {
        return Err(invalid("radii must be non-negative"));
    }
    if kernel.kappa != 0.0 && r == 0.0 && s == 0.0 {
        return Err(HfbError::SingularPoint);
    }
    let terms = multipole_terms(l, l2);
    let n_max = (l + l2) as usize;
    let (lo, hi) = if r < s { (r, s) } else { (s, r) };
    let g1 = gaussian_projections(n_max, kernel.b1, r, s);
    let g2 = gaussian_projections(n_max, kernel.b2, r, s);
    let mut w = 0.0;
    for (n, c) in terms {
        let n = n as usize;
        if kernel.kappa != 0.0 {
            w += kernel.kappa * c * lo.powi(n as i32) / hi.powi(n as i32 + 1);
        }
        w += (2 * n + 1) as f64 * c * (-kernel.a1 * g1[n] + kernel.a2 * g2[n]);
    }
    Ok(w)
}

/// Tensor of the unit Gaussian kernel `exp(−b|x − y|²)`, integrated with a
/// tensor-product Gauss-Legendre rule of `quad_order` points per cell.
pub fn gaussian_tensor(basis: &RadialBasis, l_max: usize, b: f64, quad_order: usize) -> Result<TwoBodyTensor> {
    if quad_order < 4 {
        return Err(invalid(format!("quadrature order must be at least 4, got {quad_order}")));
    }
    if !(b > 0.0) {
        return Err(invalid("Gaussian range must be positive"));
    }
    let grid = basis.grid();
    let nb = basis.dim();
    let np = 2 * nb - 1;
    let rule = unit_rule(quad_order);
    let n_max = 2 * l_max;

    // Quadrature points per cell: radius, weight·r², and the three shapes.
    let cells: Vec<Vec<(f64, f64, [f64; 3])>> = (0..grid.n_cells())
        .map(|k| {
            let (a, h) = grid.cell(k);
            rule.iter()
                .map(|&(x, w)| {
                    let r = a + h * x;
                    (r, h * w * r * r, CellProduct::ALL.map(|p| p.eval(x)))
                })
                .collect()
        })
        .collect();

    let mut unit = vec![DMatrix::<f64>::zeros(np, np); n_max + 1];
    let mut local = vec![[[0.0; 3]; 3]; n_max + 1];
    for k in 0..cells.len() {
        for k2 in k..cells.len() {
            for blk in local.iter_mut() {
                *blk = [[0.0; 3]; 3];
            }
            for &(r, wr, ref pr) in &cells[k] {
                for &(s, ws, ref ps) in &cells[k2] {
                    let g = gaussian_projections(n_max, b, r, s);
                    let w = wr * ws;
                    for n in 0..=n_max {
                        let gw = g[n] * w;
                        for t in 0..3 {
                            for t2 in 0..3 {
                                local[n][t][t2] += gw * pr[t] * ps[t2];
                            }
                        }
                    }
                }
            }
            for (t, pt) in CellProduct::ALL.iter().enumerate() {
                let Some((i, j)) = pt.basis_pair(k, grid) else { continue };
                let p = pair_index(i, j).unwrap();
                for (t2, pt2) in CellProduct::ALL.iter().enumerate() {
                    let Some((m, mm)) = pt2.basis_pair(k2, grid) else { continue };
                    let q = pair_index(m, mm).unwrap();
                    for n in 0..=n_max {
                        let v = local[n][t][t2];
                        unit[n][(p, q)] += v;
                        if k2 > k {
                            unit[n][(q, p)] += v;
                        }
                    }
                }
            }
        }
    }

    let mut t = TwoBodyTensor::zeros(nb, l_max);
    for l in 0..=l_max {
        for l2 in l..=l_max {
            let block = t.block_mut(l, l2);
            for (n, c) in multipole_terms(l as u32, l2 as u32) {
                *block += &unit[n as usize] * ((2 * n + 1) as f64 * c);
            }
            *block = crate::linalg::symmetrize(block);
        }
    }
    Ok(t)
}

/// Full nuclear tensor; the Coulomb part is integrated in closed form.
pub fn nuclear_tensor(
    basis: &RadialBasis,
    l_max: usize,
    kernel: &NuclearKernel,
    quad_order: usize,
) -> Result<TwoBodyTensor> {
    kernel.validate()?;
    let mut t = coulomb_tensor(basis, l_max, kernel.kappa)?;
    if kernel.a1 != 0.0 {
        t.add_scaled(-kernel.a1, &gaussian_tensor(basis, l_max, kernel.b1, quad_order)?);
    }
    if kernel.a2 != 0.0 {
        t.add_scaled(kernel.a2, &gaussian_tensor(basis, l_max, kernel.b2, quad_order)?);
    }
    Ok(t)
}
