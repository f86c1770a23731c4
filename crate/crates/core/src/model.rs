//! The discrete problem: overlap, kinetic matrices per angular momentum and
//! the two-body tensor.

use nalgebra::DMatrix;

use crate::basis::RadialBasis;
use crate::error::{invalid, Result};
use crate::interaction::TwoBodyTensor;
use crate::linalg::CholeskyFrame;

#[derive(Debug, Clone)]
pub struct Model {
    overlap: DMatrix<f64>,
    kinetic: Vec<DMatrix<f64>>,
    tensor: TwoBodyTensor,
    frame: CholeskyFrame,
}

impl Model {
    /// `kinetic[l]` is the one-body matrix of sector `l`; the tensor must cover
    /// the same sectors.
    pub fn new(overlap: DMatrix<f64>, kinetic: Vec<DMatrix<f64>>, tensor: TwoBodyTensor) -> Result<Self> {
        let n = overlap.nrows();
        if overlap.ncols() != n || n == 0 {
            return Err(invalid("overlap must be square and non-empty"));
        }
        if kinetic.is_empty() || kinetic.len() != tensor.l_max() + 1 {
            return Err(invalid("one kinetic matrix per sector of the tensor is required"));
        }
        if kinetic.iter().any(|h| h.shape() != (n, n)) || tensor.n_basis() != n {
            return Err(invalid("kinetic matrices and tensor must match the overlap dimension"));
        }
        let overlap = crate::linalg::symmetrize(&overlap);
        let kinetic = kinetic.iter().map(crate::linalg::symmetrize).collect();
        let frame = CholeskyFrame::new(&overlap)?;
        Ok(Self { overlap, kinetic, tensor, frame })
    }

    pub fn from_basis(basis: &RadialBasis, tensor: TwoBodyTensor) -> Result<Self> {
        let kinetic = (0..=tensor.l_max()).map(|l| basis.kinetic(l)).collect();
        Self::new(basis.overlap().clone(), kinetic, tensor)
    }

    pub fn dim(&self) -> usize {
        self.overlap.nrows()
    }

    pub fn l_max(&self) -> usize {
        self.kinetic.len() - 1
    }

    pub fn sectors(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.l_max()
    }

    /// Degeneracy `2l + 1` of sector `l` (spin not included).
    pub fn weight(l: usize) -> f64 {
        (2 * l + 1) as f64
    }

    pub fn overlap(&self) -> &DMatrix<f64> {
        &self.overlap
    }

    pub fn kinetic(&self, l: usize) -> &DMatrix<f64> {
        &self.kinetic[l]
    }

    pub fn tensor(&self) -> &TwoBodyTensor {
        &self.tensor
    }

    pub fn frame(&self) -> &CholeskyFrame {
        &self.frame
    }

    /// Largest reachable value of `Σ_l (2l+1) tr(S G^l)`.
    pub fn capacity(&self) -> f64 {
        self.sectors().map(|l| Self::weight(l) * self.dim() as f64).sum()
    }

    /// Same model with a different tensor.
    pub fn with_tensor(&self, tensor: TwoBodyTensor) -> Result<Self> {
        Self::new(self.overlap.clone(), self.kinetic.clone(), tensor)
    }
}
