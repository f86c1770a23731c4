//! Chemical potential: for a fixed Fock family, find `μ` such that the
//! negative spectral subspace of `F − μN` holds the requested particle number.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, HfbError, Result};
use crate::linalg::{block2, number_metric, sym_eigen, CholeskyFrame};
use crate::model::Model;
use crate::state::{FockFamily, FockSector, FrameState};

/// Eigenpairs of one sector pencil `(F − μN, S)`, with `S`-orthonormal
/// eigenvectors in the original basis.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

/// Full spectrum of the pencil `(F − μ·diag(S, −S), diag(S, S))`.
pub fn sector_eigensolve(f: &FockSector, mu: f64, overlap: &DMatrix<f64>) -> Result<SectorSpectrum> {
    let n = overlap.nrows();
    if f.mean.shape() != (n, n) || f.pairing.shape() != (n, n) {
        return Err(invalid("Fock blocks and overlap differ in size"));
    }
    let frame = CholeskyFrame::new(overlap)?;
    let op = frame_operator(f, &frame);
    let (values, y) = sym_eigen(&(op - number_metric(n) * mu));
    let z = DMatrix::zeros(n, n);
    let lt_inv = frame.l_inv.transpose();
    let back = block2(&lt_inv, &z, &z, &lt_inv);
    Ok(SectorSpectrum { values, vectors: back * y })
}

fn frame_operator(f: &FockSector, frame: &CholeskyFrame) -> DMatrix<f64> {
    let h = frame.operator_in(&f.mean);
    let p = frame.operator_in(&f.pairing);
    block2(&h, &p, &p, &(-&h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuStrategy {
    Bisection,
    Newton,
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuOptions {
    pub strategy: MuStrategy,
    /// Accepted `|ν − target|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Hybrid mode switches to Newton once the pairing norm exceeds this.
    pub newton_switch: f64,
    /// Hybrid mode uses Newton from the start.
    pub force_newton: bool,
    /// Previous multiplier, used to seed a narrow bracket.
    pub guess: Option<f64>,
}

impl Default for MuOptions {
    fn default() -> Self {
        Self {
            strategy: MuStrategy::Hybrid,
            tol: 1e-10,
            max_iter: 200,
            newton_switch: 0.05,
            force_newton: false,
            guess: None,
        }
    }
}

/// Eigenpairs of `F̃ − μJ` in the orthonormal frame, ascending.
#[derive(Debug, Clone)]
pub struct FrameSpectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct MuSolution {
    pub mu: f64,
    pub nu: f64,
    /// Smallest `|ε|` over all sectors at `μ`.
    pub gap: f64,
    pub used_fractional: bool,
    /// Occupation given to the frontier modes when `used_fractional`.
    pub frontier_occupation: Option<f64>,
    pub state: FrameState,
    pub iterations: usize,
    /// Every `μ` at which `ν` was evaluated, in order.
    pub trace: Vec<f64>,
}

/// Per-sector Fock matrices in the orthonormal frame, `F̃ = [[h̃, p̃], [p̃, −h̃]]`.
#[derive(Debug, Clone)]
pub struct Pencil {
    mean: Vec<DMatrix<f64>>,
    pairing: Vec<DMatrix<f64>>,
    full: Vec<DMatrix<f64>>,
    scale: f64,
}

impl Pencil {
    pub fn new(fock: &FockFamily, model: &Model) -> Self {
        let frame = model.frame();
        let mean = fock.sectors.iter().map(|s| frame.operator_in(&s.mean)).collect();
        let pairing = fock.sectors.iter().map(|s| frame.operator_in(&s.pairing)).collect();
        Self::from_frame(mean, pairing)
    }

    /// Builds a pencil directly from orthonormal-frame blocks (`S = I`).
    pub fn from_frame(mean: Vec<DMatrix<f64>>, pairing: Vec<DMatrix<f64>>) -> Self {
        let full: Vec<DMatrix<f64>> = mean.iter().zip(&pairing).map(|(h, p)| block2(h, p, p, &(-h))).collect();
        let scale = full.iter().map(|m| m.norm()).fold(0.0, f64::max);
        Self { mean, pairing, full, scale }
    }

    pub fn sectors(&self) -> usize {
        self.full.len()
    }

    pub fn dim(&self) -> usize {
        self.mean[0].nrows()
    }

    pub fn mean(&self, l: usize) -> &DMatrix<f64> {
        &self.mean[l]
    }

    pub fn pairing(&self, l: usize) -> &DMatrix<f64> {
        &self.pairing[l]
    }

    /// Frobenius norm of the largest sector matrix.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Eigenvalues with `|ε|` below this count as zero modes.
    pub fn zero_tol(&self) -> f64 {
        1e-9 * self.scale.max(1.0)
    }

    pub fn capacity(&self) -> f64 {
        (0..self.sectors()).map(|l| Model::weight(l) * self.dim() as f64).sum()
    }

    /// `F̃ − μJ` of sector `l`.
    pub fn shifted(&self, l: usize, mu: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = self.full[l].clone();
        for i in 0..n {
            m[(i, i)] -= mu;
            m[(n + i, n + i)] += mu;
        }
        m
    }

    pub fn spectra(&self, mu: f64) -> Vec<FrameSpectrum> {
        (0..self.sectors())
            .map(|l| {
                let (values, vectors) = sym_eigen(&self.shifted(l, mu));
                FrameSpectrum { values, vectors }
            })
            .collect()
    }

    /// Particle count `Σ w Σ_{ε<0} ‖upper half of y‖²` of the negative
    /// spectral subspace.
    pub fn nu_of(&self, spectra: &[FrameSpectrum]) -> f64 {
        let n = self.dim();
        spectra
            .iter()
            .enumerate()
            .map(|(l, sp)| {
                let s: f64 = (0..2 * n)
                    .filter(|&k| sp.values[k] < 0.0)
                    .map(|k| sp.vectors.view((0, k), (n, 1)).norm_squared())
                    .sum();
                Model::weight(l) * s
            })
            .sum()
    }

    /// `ν(μ)` and whether a zero mode is present at `μ`.
    pub fn nu(&self, mu: f64) -> (f64, bool) {
        let sp = self.spectra(mu);
        let degenerate = gap_of(&sp) <= self.zero_tol();
        (self.nu_of(&sp), degenerate)
    }

    pub fn dnu_dmu_of(&self, spectra: &[FrameSpectrum], mu: f64) -> Result<f64> {
        let gap = gap_of(spectra);
        if gap <= self.zero_tol() {
            return Err(HfbError::IllConditionedDerivative { mu, gap });
        }
        let n = self.dim();
        let mut total = 0.0;
        for (l, sp) in spectra.iter().enumerate() {
            let neg: Vec<usize> = (0..2 * n).filter(|&k| sp.values[k] < 0.0).collect();
            let pos: Vec<usize> = (0..2 * n).filter(|&k| sp.values[k] >= 0.0).collect();
            let yn = sp.vectors.select_columns(&neg);
            let mut jyn = yn.clone();
            jyn.view_mut((n, 0), (n, neg.len())).neg_mut();
            let yp = sp.vectors.select_columns(&pos);
            let c = yp.transpose() * jyn;
            let mut s = 0.0;
            for (b, &j) in pos.iter().enumerate() {
                for (a, &i) in neg.iter().enumerate() {
                    s += c[(b, a)].powi(2) / (sp.values[j] - sp.values[i]);
                }
            }
            total += Model::weight(l) * s;
        }
        Ok(total)
    }

    pub fn dnu_dmu(&self, mu: f64) -> Result<f64> {
        self.dnu_dmu_of(&self.spectra(mu), mu)
    }

    /// Smallest `|ε|` over all sectors.
    pub fn spectral_gap(&self, mu: f64) -> f64 {
        gap_of(&self.spectra(mu))
    }

    /// Same quantity through `min_l ‖(h̃ + ip̃ − μ)⁻¹‖⁻¹`.
    pub fn spectral_gap_resolvent(&self, mu: f64) -> f64 {
        let n = self.dim();
        (0..self.sectors())
            .map(|l| {
                let m = DMatrix::from_fn(n, n, |i, j| {
                    let re = self.mean[l][(i, j)] - if i == j { mu } else { 0.0 };
                    Complex::new(re, self.pairing[l][(i, j)])
                });
                match m.try_inverse() {
                    Some(inv) => {
                        let norm = inv.svd(false, false).singular_values.max();
                        if norm.is_finite() && norm > 0.0 {
                            1.0 / norm
                        } else {
                            0.0
                        }
                    }
                    None => 0.0,
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Projector on the strictly negative modes.
    pub fn negative_projector(&self, spectra: &[FrameSpectrum]) -> FrameState {
        let mats: Vec<DMatrix<f64>> = spectra
            .iter()
            .map(|sp| {
                let cols: Vec<usize> = (0..sp.values.len()).filter(|&k| sp.values[k] < 0.0).collect();
                let y = sp.vectors.select_columns(&cols);
                &y * y.transpose()
            })
            .collect();
        FrameState::from_generalized(&mats)
    }

    /// Fills every mode below `−threshold`, and shares the remaining particles
    /// equally among the modes with `|ε| ≤ threshold`. Returns the state, its
    /// particle count and the frontier occupation.
    pub fn fractional_fill(
        &self,
        spectra: &[FrameSpectrum],
        target: f64,
        threshold: f64,
    ) -> (FrameState, f64, f64) {
        let n = self.dim();
        let mut below_count = 0.0;
        let mut frontier: Vec<(usize, DVector<f64>, f64)> = Vec::new();
        let mut mats = Vec::with_capacity(spectra.len());
        for (l, sp) in spectra.iter().enumerate() {
            let w = Model::weight(l);
            let below: Vec<usize> = (0..2 * n).filter(|&k| sp.values[k] < -threshold).collect();
            let kernel: Vec<usize> = (0..2 * n).filter(|&k| sp.values[k].abs() <= threshold).collect();
            let y = sp.vectors.select_columns(&below);
            below_count += w * y.rows(0, n).norm_squared();
            mats.push(&y * y.transpose());
            if kernel.is_empty() {
                continue;
            }
            for p in particle_like(&sp.vectors.select_columns(&kernel), n) {
                let lambda = p.rows(0, n).norm_squared() - p.rows(n, n).norm_squared();
                frontier.push((l, p, lambda));
            }
        }
        let deficit = target - below_count;
        let base: f64 = frontier.iter().map(|(l, _, lam)| Model::weight(*l) * (1.0 - lam) / 2.0).sum();
        let slope: f64 = frontier.iter().map(|(l, _, lam)| Model::weight(*l) * lam).sum();
        let occ = if slope.abs() > 1e-12 { ((deficit - base) / slope).clamp(0.0, 1.0) } else { 0.5 };
        let mut count = below_count;
        for (l, p, lam) in &frontier {
            let hole = omega(p, n);
            mats[*l] += p * p.transpose() * occ + &hole * hole.transpose() * (1.0 - occ);
            count += Model::weight(*l) * ((1.0 - lam) / 2.0 + occ * lam);
        }
        (FrameState::from_generalized(&mats), count, occ)
    }

    /// Solves `ν(μ) = target` to within `opts.tol`.
    pub fn solve_mu(&self, target: f64, opts: &MuOptions) -> Result<MuSolution> {
        if !(target > 0.0 && target < self.capacity()) {
            return Err(invalid(format!(
                "target {target} outside the reachable range (0, {})",
                self.capacity()
            )));
        }
        let mut trace = Vec::new();
        let eval = |mu: f64, trace: &mut Vec<f64>| {
            trace.push(mu);
            let sp = self.spectra(mu);
            let nu = self.nu_of(&sp);
            (sp, nu)
        };
        let done = |mu: f64, sp: Vec<FrameSpectrum>, nu: f64, iterations: usize, trace: Vec<f64>| MuSolution {
            mu,
            nu,
            gap: gap_of(&sp),
            used_fractional: false,
            frontier_occupation: None,
            state: self.negative_projector(&sp),
            iterations,
            trace,
        };

        // Bracket [lo, hi] with ν(lo) < target < ν(hi).
        let cold = 10.0 * (1.0 + self.scale);
        let (mut lo, mut hi) = match opts.guess {
            Some(g) if g.is_finite() => {
                let d = 1e-2 * (1.0 + g.abs());
                (g - d, g + d)
            }
            _ => (-cold, cold),
        };
        let mut step = hi - lo;
        loop {
            let (sp, nu) = eval(lo, &mut trace);
            if (nu - target).abs() <= opts.tol && gap_of(&sp) > self.zero_tol() {
                return Ok(done(lo, sp, nu, 0, trace));
            }
            if nu < target {
                break;
            }
            hi = lo;
            lo -= step;
            step *= 2.0;
            if !lo.is_finite() || lo < -1e300 {
                return Err(HfbError::NumericalBreakdown("cannot bracket the chemical potential".into()));
            }
        }
        let mut step = hi - lo;
        loop {
            let (sp, nu) = eval(hi, &mut trace);
            if (nu - target).abs() <= opts.tol && gap_of(&sp) > self.zero_tol() {
                return Ok(done(hi, sp, nu, 0, trace));
            }
            if nu > target {
                break;
            }
            lo = hi;
            hi += step;
            step *= 2.0;
            if !hi.is_finite() || hi > 1e300 {
                return Err(HfbError::NumericalBreakdown("cannot bracket the chemical potential".into()));
            }
        }

        let mut newton = match opts.strategy {
            MuStrategy::Bisection => false,
            MuStrategy::Newton => true,
            MuStrategy::Hybrid => opts.force_newton,
        };
        let mut mu = 0.5 * (lo + hi);
        if newton {
            if let Some(g) = opts.guess.filter(|g| *g > lo && *g < hi) {
                mu = g;
            }
        }
        let mut last_residual = f64::INFINITY;
        // Closest gapped evaluation, used when rounding keeps ν from reaching
        // the tolerance although no level crosses zero.
        let mut best: Option<(f64, f64, Vec<FrameSpectrum>, f64)> = None;
        let rounding = 1e-9 * target.max(1.0);
        for it in 1..=opts.max_iter {
            let (sp, nu) = eval(mu, &mut trace);
            let residual = nu - target;
            let gap = gap_of(&sp);
            if residual.abs() <= opts.tol && gap > self.zero_tol() {
                return Ok(done(mu, sp, nu, it, trace));
            }
            if residual < 0.0 {
                lo = mu;
            } else {
                hi = mu;
            }
            let collapsed = hi - lo <= 1e-14 * (1.0 + mu.abs());
            if gap > self.zero_tol() && best.as_ref().is_none_or(|b| residual.abs() < b.0) {
                best = Some((residual.abs(), mu, sp.clone(), nu));
            }
            if collapsed {
                if let Some((r, m, bsp, bnu)) = best.take() {
                    if r <= rounding {
                        return Ok(done(m, bsp, bnu, it, trace));
                    }
                }
                return Ok(self.fill_at(0.5 * (lo + hi), target, opts.tol, it, trace));
            }
            if !newton && opts.strategy == MuStrategy::Hybrid {
                newton = pairing_norm(&self.negative_projector(&sp)) > opts.newton_switch;
            }
            let mut next = 0.5 * (lo + hi);
            if newton && residual.abs() <= 0.5 * last_residual {
                if let Ok(d) = self.dnu_dmu_of(&sp, mu) {
                    let cand = mu - residual / d;
                    if d > 0.0 && cand > lo && cand < hi {
                        next = cand;
                    }
                }
            }
            last_residual = if next == 0.5 * (lo + hi) { f64::INFINITY } else { residual.abs() };
            mu = next;
        }
        Ok(self.fill_at(0.5 * (lo + hi), target, opts.tol, opts.max_iter, trace))
    }

    /// Fractional filling at `mu`, widening the zero-mode window until the
    /// target is met.
    fn fill_at(&self, mu: f64, target: f64, tol: f64, iterations: usize, mut trace: Vec<f64>) -> MuSolution {
        trace.push(mu);
        let sp = self.spectra(mu);
        let mut levels: Vec<f64> = sp.iter().flat_map(|s| s.values.iter().map(|v| v.abs())).collect();
        levels.sort_by(f64::total_cmp);
        let mut threshold = self.zero_tol().max(levels[0] * (1.0 + 1e-9));
        let mut best = None;
        for _ in 0..8 {
            let (state, nu, occ) = self.fractional_fill(&sp, target, threshold);
            let ok = (nu - target).abs() <= tol;
            best = Some((state, nu, occ));
            if ok {
                break;
            }
            match levels.iter().find(|&&v| v > threshold) {
                Some(&v) => threshold = v * (1.0 + 1e-9),
                None => break,
            }
        }
        let (state, nu, occ) = best.unwrap();
        MuSolution {
            mu,
            nu,
            gap: gap_of(&sp),
            used_fractional: true,
            frontier_occupation: Some(occ),
            state,
            iterations,
            trace,
        }
    }
}

/// Smallest `|ε|` across sectors.
pub fn gap_of(spectra: &[FrameSpectrum]) -> f64 {
    spectra
        .iter()
        .flat_map(|s| s.values.iter().map(|v| v.abs()))
        .fold(f64::INFINITY, f64::min)
}

/// `sqrt(Σ w ‖A'‖²)` of a frame state.
pub fn pairing_norm(state: &FrameState) -> f64 {
    state
        .pairing
        .iter()
        .enumerate()
        .map(|(l, a)| Model::weight(l) * a.norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// `Ω = [[0, −I], [I, 0]]` applied to `v`.
fn omega(v: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(2 * n);
    for i in 0..n {
        out[i] = -v[n + i];
        out[n + i] = v[i];
    }
    out
}

/// Orthonormal `p_1..p_k` in the span of `kernel` such that `{p_i, Ωp_i}`
/// spans it, preferring directions with large particle character.
fn particle_like(kernel: &DMatrix<f64>, n: usize) -> Vec<DVector<f64>> {
    let k = kernel.ncols();
    let mut jk = kernel.clone();
    jk.view_mut((n, 0), (n, k)).neg_mut();
    let (_, u) = sym_eigen(&(kernel.transpose() * jk));
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut chosen = Vec::new();
    for c in (0..k).rev() {
        if 2 * chosen.len() >= k {
            break;
        }
        let mut v: DVector<f64> = kernel * u.column(c);
        for b in &basis {
            let d = b.dot(&v);
            v -= b * d;
        }
        let norm = v.norm();
        if norm < 0.5 {
            continue;
        }
        v /= norm;
        basis.push(v.clone());
        basis.push(omega(&v, n));
        chosen.push(v);
    }
    chosen
}
