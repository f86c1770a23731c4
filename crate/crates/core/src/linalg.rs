//! Dense kernels shared by the solver: symmetric eigendecomposition, Cholesky
//! frames and a few norms.

use nalgebra::{DMatrix, DVector};

use crate::error::{HfbError, Result};

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    match a.self_adjoint_eigen(faer::Side::Lower) {
        Ok(eig) => {
            let s = eig.S().column_vector();
            let u = eig.U();
            let values = DVector::from_fn(n, |i, _| s[i]);
            let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
            (values, vectors)
        }
        // faer only fails on non-finite input; let nalgebra report the same data.
        Err(_) => {
            let e = nalgebra::SymmetricEigen::new(m.clone());
            sort_pairs(e.eigenvalues, e.eigenvectors)
        }
    }
}

/// Eigenvalues only, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    if n == 0 {
        return DVector::zeros(0);
    }
    let a = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    match a.self_adjoint_eigenvalues(faer::Side::Lower) {
        Ok(v) => DVector::from_vec(v),
        Err(_) => sort_pairs(m.clone().symmetric_eigenvalues(), DMatrix::zeros(n, 0)).0,
    }
}

fn sort_pairs(values: DVector<f64>, vectors: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let v = DVector::from_iterator(order.len(), order.iter().map(|&i| values[i]));
    let u = if vectors.ncols() == values.len() {
        DMatrix::from_fn(vectors.nrows(), order.len(), |r, c| vectors[(r, order[c])])
    } else {
        vectors
    };
    (v, u)
}

/// Lower Cholesky factor and its inverse.
#[derive(Debug, Clone)]
pub struct CholeskyFrame {
    pub l: DMatrix<f64>,
    pub l_inv: DMatrix<f64>,
}

impl CholeskyFrame {
    pub fn new(s: &DMatrix<f64>) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(s.clone()).ok_or_else(|| {
            HfbError::NumericalBreakdown("overlap matrix is not positive definite".into())
        })?;
        let l = chol.l();
        let n = l.nrows();
        let l_inv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| HfbError::NumericalBreakdown("singular Cholesky factor".into()))?;
        Ok(Self { l, l_inv })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `Lᵀ X L`: density-like matrices into the orthonormal frame.
    pub fn density_in(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(self.l.transpose() * x * &self.l))
    }

    /// `L⁻ᵀ X L⁻¹`: inverse of [`density_in`](Self::density_in).
    pub fn density_out(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(self.l_inv.transpose() * x * &self.l_inv))
    }

    /// `L⁻¹ X L⁻ᵀ`: operator-like matrices into the orthonormal frame.
    pub fn operator_in(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        symmetrize(&(&self.l_inv * x * self.l_inv.transpose()))
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Spectral norm of a symmetric or antisymmetric matrix.
pub fn spectral_norm_normal(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    // For normal M, ‖M‖₂² = λ_max(MᵀM).
    let g = m.transpose() * m;
    sym_eigenvalues(&g).max().max(0.0).sqrt()
}

pub fn block2(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(c);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

/// The particle-number metric `diag(I, −I)` of size `2n`.
pub fn number_metric(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(2 * n, 2 * n, |i, j| match (i == j, i < n) {
        (true, true) => 1.0,
        (true, false) => -1.0,
        _ => 0.0,
    })
}
