//! Symmetry-reduced HFB states, the energy functional and its gradient.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{block2, sym_eigenvalues, symmetrize};
use crate::model::Model;

/// Density matrices `G^l` and pairing matrices `A^l`, one pair per sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HfbState {
    density: Vec<DMatrix<f64>>,
    pairing: Vec<DMatrix<f64>>,
}

impl HfbState {
    /// Symmetrizes the inputs.
    pub fn new(density: Vec<DMatrix<f64>>, pairing: Vec<DMatrix<f64>>) -> Result<Self> {
        if density.is_empty() || density.len() != pairing.len() {
            return Err(invalid("density and pairing need one matrix per sector"));
        }
        let n = density[0].nrows();
        if density.iter().chain(&pairing).any(|m| m.shape() != (n, n)) {
            return Err(invalid("all sector matrices must be square of equal size"));
        }
        Ok(Self {
            density: density.iter().map(symmetrize).collect(),
            pairing: pairing.iter().map(symmetrize).collect(),
        })
    }

    pub fn zeros(n_basis: usize, l_max: usize) -> Self {
        let z = DMatrix::zeros(n_basis, n_basis);
        Self { density: vec![z.clone(); l_max + 1], pairing: vec![z; l_max + 1] }
    }

    pub fn l_max(&self) -> usize {
        self.density.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.density[0].nrows()
    }

    pub fn density(&self, l: usize) -> &DMatrix<f64> {
        &self.density[l]
    }

    pub fn pairing(&self, l: usize) -> &DMatrix<f64> {
        &self.pairing[l]
    }

    pub fn densities(&self) -> &[DMatrix<f64>] {
        &self.density
    }

    pub fn pairings(&self) -> &[DMatrix<f64>] {
        &self.pairing
    }

    /// Pairing matrices set to zero.
    pub fn without_pairing(&self) -> Self {
        let z = DMatrix::zeros(self.dim(), self.dim());
        Self { density: self.density.clone(), pairing: vec![z; self.density.len()] }
    }

    /// `(1 − t)·self + t·other`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        let mix = |a: &[DMatrix<f64>], b: &[DMatrix<f64>]| -> Vec<DMatrix<f64>> {
            a.iter().zip(b).map(|(x, y)| x * (1.0 - t) + y * t).collect()
        };
        Self { density: mix(&self.density, &other.density), pairing: mix(&self.pairing, &other.pairing) }
    }

    /// `self − other` component-wise; the result is generally not a state but
    /// carries the same layout.
    pub fn difference(&self, other: &Self) -> Self {
        let sub = |a: &[DMatrix<f64>], b: &[DMatrix<f64>]| -> Vec<DMatrix<f64>> {
            a.iter().zip(b).map(|(x, y)| x - y).collect()
        };
        Self { density: sub(&self.density, &other.density), pairing: sub(&self.pairing, &other.pairing) }
    }

    fn check(&self, model: &Model) -> Result<()> {
        if self.dim() != model.dim() || self.l_max() != model.l_max() {
            return Err(invalid(format!(
                "state has {} sectors of size {}, model has {} of size {}",
                self.l_max() + 1,
                self.dim(),
                model.l_max() + 1,
                model.dim()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub direct: f64,
    pub exchange: f64,
    pub pairing: f64,
    pub total: f64,
}

/// Mean-field blocks of one sector: `F = [[mean, pairing], [pairing, −mean]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockSector {
    pub mean: DMatrix<f64>,
    pub pairing: DMatrix<f64>,
}

impl FockSector {
    pub fn matrix(&self) -> DMatrix<f64> {
        block2(&self.mean, &self.pairing, &self.pairing, &(-&self.mean))
    }
}

/// One Fock matrix per sector, the energy gradient with respect to the
/// weighted blocks: `dℰ = Σ_l (2l+1) (tr(F₁₁ δG^l) + tr(F₁₂ δA^l))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockFamily {
    pub sectors: Vec<FockSector>,
}

impl FockFamily {
    pub fn l_max(&self) -> usize {
        self.sectors.len() - 1
    }

    /// Largest absolute entry over all sectors.
    pub fn scale(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| s.mean.amax().max(s.pairing.amax()))
            .fold(0.0, f64::max)
    }
}

/// Interaction fields generated by a state, per sector `l`:
/// `direct = 2 J(Σ w G)`, `exchange = Σ_{l'} w' K^{ll'}(G^{l'})`,
/// `pairing = Σ_{l'} w' K^{ll'}(A^{l'})`.
struct Fields {
    direct: DMatrix<f64>,
    exchange: Vec<DMatrix<f64>>,
    pairing: Vec<DMatrix<f64>>,
}

fn fields(state: &HfbState, model: &Model) -> Result<Fields> {
    state.check(model)?;
    let t = model.tensor();
    let n = model.dim();
    let mut rho = DMatrix::zeros(n, n);
    for l in model.sectors() {
        rho += state.density(l) * Model::weight(l);
    }
    let direct = t.contract_direct(&rho)? * 2.0;
    let mut exchange = vec![DMatrix::zeros(n, n); model.l_max() + 1];
    let mut pairing = vec![DMatrix::zeros(n, n); model.l_max() + 1];
    for l in model.sectors() {
        for l2 in model.sectors() {
            let w2 = Model::weight(l2);
            exchange[l] += t.contract_exchange(l, l2, state.density(l2))? * w2;
            if state.pairing(l2).amax() != 0.0 {
                pairing[l] += t.contract_exchange(l, l2, state.pairing(l2))? * w2;
            }
        }
    }
    Ok(Fields { direct, exchange, pairing })
}

pub fn energy(state: &HfbState, model: &Model) -> Result<EnergyBreakdown> {
    let f = fields(state, model)?;
    let mut e = EnergyBreakdown::default();
    for l in model.sectors() {
        let w = Model::weight(l);
        let g = state.density(l);
        e.kinetic += 2.0 * w * g.dot(model.kinetic(l));
        e.direct += w * g.dot(&f.direct);
        e.exchange -= w * g.dot(&f.exchange[l]);
        e.pairing += w * state.pairing(l).dot(&f.pairing[l]);
    }
    e.total = e.kinetic + e.direct + e.exchange + e.pairing;
    Ok(e)
}

/// Interaction energy alone, a quadratic form in the state.
pub fn interaction_energy(state: &HfbState, model: &Model) -> Result<f64> {
    let e = energy(state, model)?;
    Ok(e.direct + e.exchange + e.pairing)
}

pub fn fock(state: &HfbState, model: &Model) -> Result<FockFamily> {
    let f = fields(state, model)?;
    let sectors = model
        .sectors()
        .map(|l| FockSector {
            mean: (model.kinetic(l) + &f.direct - &f.exchange[l]) * 2.0,
            pairing: &f.pairing[l] * 2.0,
        })
        .collect();
    Ok(FockFamily { sectors })
}

/// Bivariate energy with `Ẽ(Υ, Υ) = ℰ(Υ)` and `Ẽ(Υ, Υ') = Ẽ(Υ', Υ)`.
pub fn auxiliary_energy(first: &HfbState, second: &HfbState, model: &Model) -> Result<f64> {
    first.check(model)?;
    let f = fields(second, model)?;
    let mut e = 0.0;
    for l in model.sectors() {
        let w = Model::weight(l);
        let h = model.kinetic(l);
        e += w * (first.density(l).dot(h) + second.density(l).dot(h));
        e += w * first.density(l).dot(&(&f.direct - &f.exchange[l]));
        e += w * first.pairing(l).dot(&f.pairing[l]);
    }
    Ok(e)
}

/// `Σ_l (2l+1) tr(S G^l)`, half the particle number.
pub fn particle_number(state: &HfbState, model: &Model) -> f64 {
    model
        .sectors()
        .map(|l| Model::weight(l) * model.overlap().dot(state.density(l)))
        .sum()
}

/// `sqrt(Σ_l (2l+1) tr(S A^l S A^l))`.
pub fn pairing_norm(state: &HfbState, model: &Model) -> f64 {
    let s = model.overlap();
    model
        .sectors()
        .map(|l| {
            let sa = s * state.pairing(l);
            Model::weight(l) * sa.dot(&sa.transpose())
        })
        .sum::<f64>()
        .max(0.0)
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub min_eig: f64,
    pub max_eig: f64,
    pub ok: bool,
}

/// Spectrum of the generalized density matrix in the orthonormal frame; it
/// must lie in `[0, 1]`.
pub fn admissibility_report(state: &HfbState, model: &Model, tol: f64) -> Result<AdmissibilityReport> {
    state.check(model)?;
    let frame = to_frame(state, model);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for l in model.sectors() {
        let ev = sym_eigenvalues(&frame.generalized(l));
        lo = lo.min(ev.min());
        hi = hi.max(ev.max());
    }
    Ok(AdmissibilityReport { min_eig: lo, max_eig: hi, ok: lo >= -tol && hi <= 1.0 + tol })
}

/// A state expressed in the orthonormal frame `G' = Lᵀ G L`, `A' = Lᵀ A L`,
/// where `S = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameState {
    pub density: Vec<DMatrix<f64>>,
    pub pairing: Vec<DMatrix<f64>>,
}

impl FrameState {
    /// `[[G', A'], [A', I − G']]`.
    pub fn generalized(&self, l: usize) -> DMatrix<f64> {
        let n = self.density[l].nrows();
        let g = &self.density[l];
        let a = &self.pairing[l];
        block2(g, a, a, &(DMatrix::identity(n, n) - g))
    }

    /// Splits generalized matrices back into blocks.
    pub fn from_generalized(mats: &[DMatrix<f64>]) -> Self {
        let n = mats[0].nrows() / 2;
        let density = mats.iter().map(|m| symmetrize(&m.view((0, 0), (n, n)).into_owned())).collect();
        let pairing = mats
            .iter()
            .map(|m| {
                let a = m.view((0, n), (n, n)) + m.view((n, 0), (n, n)).transpose();
                symmetrize(&(a * 0.5))
            })
            .collect();
        Self { density, pairing }
    }

    /// `sqrt(Σ w (2‖ΔG'‖² + 2‖ΔA'‖²))`, the Frobenius distance of generalized
    /// matrices with sector weights.
    pub fn distance(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for l in 0..self.density.len() {
            let w = Model::weight(l);
            s += 2.0 * w * (&self.density[l] - &other.density[l]).norm_squared();
            s += 2.0 * w * (&self.pairing[l] - &other.pairing[l]).norm_squared();
        }
        s.sqrt()
    }
}

pub fn to_frame(state: &HfbState, model: &Model) -> FrameState {
    let f = model.frame();
    FrameState {
        density: state.densities().iter().map(|g| f.density_in(g)).collect(),
        pairing: state.pairings().iter().map(|a| f.density_in(a)).collect(),
    }
}

pub fn from_frame(frame: &FrameState, model: &Model) -> HfbState {
    let f = model.frame();
    HfbState {
        density: frame.density.iter().map(|g| f.density_out(g)).collect(),
        pairing: frame.pairing.iter().map(|a| f.density_out(a)).collect(),
    }
}

/// Occupation numbers per sector: eigenvalues of `G'` times `2(2l+1)`,
/// sorted in decreasing order.
pub fn occupation_report(state: &HfbState, model: &Model) -> Vec<Vec<f64>> {
    let frame = to_frame(state, model);
    model
        .sectors()
        .map(|l| {
            let mut v: Vec<f64> =
                sym_eigenvalues(&frame.density[l]).iter().map(|x| x * 2.0 * Model::weight(l)).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        })
        .collect()
}
