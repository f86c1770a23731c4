//! Self-consistent field iterations: Roothaan fixed point and the Optimal
//! Damping Algorithm, in Hartree-Fock or Hartree-Fock-Bogoliubov mode.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chempot::{pairing_norm as frame_pairing_norm, MuOptions, MuStrategy, Pencil};
use crate::error::{invalid, HfbError, Result};
use crate::linalg::{spectral_norm_normal, sym_eigen};
use crate::model::Model;
use crate::state::{
    auxiliary_energy, energy, fock, from_frame, interaction_energy, particle_number, to_frame,
    EnergyBreakdown, FockFamily, FrameState, HfbState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Roothaan,
    Oda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hf,
    Hfb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HfbInit {
    /// Number of frontier orbital pairs that receive pairing.
    pub valence: usize,
    /// Occupation kept on the last filled orbitals, in `(0, 1)`.
    pub theta: f64,
}

impl Default for HfbInit {
    fn default() -> Self {
        Self { valence: 1, theta: 0.95 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScfConfig {
    pub algorithm: Algorithm,
    pub mode: Mode,
    pub max_iter: usize,
    /// Stop once the commutator residual drops below this.
    pub commutator_tol: f64,
    pub particle_tol_initial: f64,
    pub particle_tol_final: f64,
    /// Geometric factor applied to the particle tolerance per iteration.
    pub particle_tol_decay: f64,
    pub mu_strategy: MuStrategy,
    /// Pairing norm above which the hybrid strategy switches to Newton.
    pub newton_switch: f64,
    /// Iteration after which the hybrid strategy always uses Newton.
    pub newton_after: usize,
    pub hfb_init: HfbInit,
    /// Window of the oscillation detector.
    pub oscillation_window: usize,
}

impl Default for ScfConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Oda,
            mode: Mode::Hfb,
            max_iter: 500,
            commutator_tol: 1e-7,
            particle_tol_initial: 1e-3,
            particle_tol_final: 1e-10,
            particle_tol_decay: 0.5,
            mu_strategy: MuStrategy::Hybrid,
            newton_switch: 0.05,
            newton_after: 10,
            hfb_init: HfbInit::default(),
            oscillation_window: 20,
        }
    }
}

impl ScfConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(self.hfb_init.theta > 0.0 && self.hfb_init.theta < 1.0) {
            return Err(invalid("hfb_init.theta must lie in (0, 1)"));
        }
        if !positive(self.commutator_tol) || !positive(self.particle_tol_initial) || !positive(self.particle_tol_final) {
            return Err(invalid("tolerances must be positive"));
        }
        if !(self.particle_tol_decay > 0.0 && self.particle_tol_decay <= 1.0) {
            return Err(invalid("particle_tol_decay must lie in (0, 1]"));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter must be positive"));
        }
        if self.oscillation_window < 3 {
            return Err(invalid("oscillation_window must be at least 3"));
        }
        Ok(())
    }

    /// Particle tolerance at iteration `n`.
    pub fn particle_tol(&self, n: usize) -> f64 {
        let t = self.particle_tol_initial * self.particle_tol_decay.powi(n.min(100_000) as i32);
        t.max(self.particle_tol_final)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: EnergyBreakdown,
    /// `Ẽ(Υ_n, Υ_{n+1})`, Roothaan only.
    pub auxiliary_energy: Option<f64>,
    pub mu: f64,
    pub particle_number: f64,
    pub residual: f64,
    /// `‖Υ_n − Υ_{n−1}‖`
    pub dist1: f64,
    /// `‖Υ_n − Υ_{n−2}‖`
    pub dist2: f64,
    pub pairing_norm: f64,
    /// ODA weight `t` of the previous iterate.
    pub damping: Option<f64>,
    pub gap: f64,
    pub used_fractional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Oscillating,
    MaxIter,
}

/// A one-body orbital of a Hartree-Fock mean field, in the orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbital {
    pub sector: usize,
    pub energy: f64,
    pub occupation: f64,
    pub vector: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub status: Status,
    pub state: HfbState,
    pub energy: EnergyBreakdown,
    pub mu: f64,
    /// Spectral gap of `F − μN` (HFB) or LUMO − HOMO (HF) at the final state.
    pub gap: f64,
    pub residual: f64,
    pub history: Vec<IterationRecord>,
    /// Mean-field orbitals of the final state, HF mode only.
    pub orbitals: Option<Vec<Orbital>>,
}

impl ConvergenceReport {
    pub fn iterations(&self) -> usize {
        self.history.len()
    }
}

/// `G^l = N / (2 Σ (2l+1) tr S) · I`, `A = 0`.
pub fn uniform_init(n_particles: usize, model: &Model) -> Result<HfbState> {
    let trace: f64 = model.sectors().map(|l| Model::weight(l) * model.overlap().trace()).sum();
    let c = n_particles as f64 / (2.0 * trace);
    let n = model.dim();
    let g = DMatrix::identity(n, n) * c;
    HfbState::new(vec![g; model.l_max() + 1], vec![DMatrix::zeros(n, n); model.l_max() + 1])
}

/// Result of diagonalizing the mean field at fixed particle number.
#[derive(Debug, Clone)]
pub struct Projection {
    pub state: FrameState,
    pub mu: f64,
    pub gap: f64,
    pub used_fractional: bool,
    pub orbitals: Option<Vec<Orbital>>,
}

/// Aufbau filling of the mean-field blocks `h̃^l` across sectors. Levels
/// within `1e-9·max(1, |ε|)` of the frontier share the remainder equally.
pub fn hf_aufbau(pencil: &Pencil, target: f64) -> Result<Projection> {
    let cap = pencil.capacity();
    if !(target > 0.0 && target <= cap) {
        return Err(invalid(format!("target {target} outside (0, {cap}]")));
    }
    let n = pencil.dim();
    let mut orbitals = Vec::with_capacity(n * pencil.sectors());
    for l in 0..pencil.sectors() {
        let (vals, vecs) = sym_eigen(pencil.mean(l));
        for k in 0..n {
            orbitals.push(Orbital { sector: l, energy: vals[k], occupation: 0.0, vector: vecs.column(k).into_owned() });
        }
    }
    orbitals.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.sector.cmp(&b.sector)));
    let mut remaining = target;
    let mut i = 0;
    let mut mu = orbitals[0].energy;
    let mut used_fractional = false;
    while i < orbitals.len() && remaining > 1e-14 * target {
        let e0 = orbitals[i].energy;
        let tie = 1e-9 * e0.abs().max(1.0);
        let mut j = i;
        while j < orbitals.len() && orbitals[j].energy - e0 <= tie {
            j += 1;
        }
        let cap: f64 = orbitals[i..j].iter().map(|o| Model::weight(o.sector)).sum();
        let occ = if remaining >= cap * (1.0 - 1e-14) { 1.0 } else { remaining / cap };
        if occ < 1.0 {
            used_fractional = true;
        }
        for o in &mut orbitals[i..j] {
            o.occupation = occ;
        }
        remaining -= occ * cap;
        mu = e0;
        i = j;
    }
    let mut density = vec![DMatrix::zeros(n, n); pencil.sectors()];
    for o in &orbitals {
        if o.occupation > 0.0 {
            density[o.sector] += &o.vector * o.vector.transpose() * o.occupation;
        }
    }
    let pairing = vec![DMatrix::zeros(n, n); pencil.sectors()];
    let gap = hf_gap(&orbitals);
    Ok(Projection { state: FrameState { density, pairing }, mu, gap, used_fractional, orbitals: Some(orbitals) })
}

/// LUMO − HOMO over occupations; zero for a partially filled level.
pub fn hf_gap(orbitals: &[Orbital]) -> f64 {
    let homo = orbitals.iter().filter(|o| o.occupation > 1e-8).map(|o| o.energy).fold(f64::NEG_INFINITY, f64::max);
    let lumo = orbitals.iter().filter(|o| o.occupation < 1.0 - 1e-8).map(|o| o.energy).fold(f64::INFINITY, f64::min);
    (lumo - homo).max(0.0)
}

/// Highest orbital energy with non-negligible occupation.
pub fn last_filled_energy(orbitals: &[Orbital]) -> f64 {
    orbitals.iter().filter(|o| o.occupation > 1e-8).map(|o| o.energy).fold(f64::NEG_INFINITY, f64::max)
}

/// Context carried between SCF steps.
#[derive(Debug, Clone, Default)]
pub struct StepContext {
    pub iter: usize,
    pub mu_guess: Option<f64>,
}

/// The state built from the negative spectral subspace of `F − μN` (HFB) or
/// by aufbau (HF), at the tolerance scheduled for `ctx.iter`.
pub fn project(
    fock: &FockFamily,
    model: &Model,
    n_particles: usize,
    config: &ScfConfig,
    ctx: &StepContext,
) -> Result<(Pencil, Projection)> {
    let pencil = Pencil::new(fock, model);
    let target = 0.5 * n_particles as f64;
    let proj = match config.mode {
        Mode::Hf => hf_aufbau(&pencil, target)?,
        Mode::Hfb => {
            let opts = MuOptions {
                strategy: config.mu_strategy,
                tol: config.particle_tol(ctx.iter),
                max_iter: 200,
                newton_switch: config.newton_switch,
                force_newton: ctx.iter >= config.newton_after,
                guess: ctx.mu_guess,
            };
            let sol = pencil.solve_mu(target, &opts)?;
            Projection { state: sol.state, mu: sol.mu, gap: sol.gap, used_fractional: sol.used_fractional, orbitals: None }
        }
    };
    Ok((pencil, proj))
}

/// `Σ_l ‖[F̃^l − μJ, Υ'^l]‖₂` in the orthonormal frame.
pub fn commutator_residual(state: &FrameState, pencil: &Pencil, mu: f64) -> f64 {
    (0..pencil.sectors())
        .map(|l| {
            let x = pencil.shifted(l, mu);
            let y = state.generalized(l);
            let c = &x * &y - &y * &x;
            spectral_norm_normal(&c)
        })
        .sum()
}

/// Same residual for a state and Fock family in the original basis.
pub fn commutator_residual_of(state: &HfbState, fock: &FockFamily, mu: f64, model: &Model) -> f64 {
    commutator_residual(&to_frame(state, model), &Pencil::new(fock, model), mu)
}

/// One Roothaan update `Υ_n → Υ_{n+1}`.
pub fn roothaan_step(
    state: &HfbState,
    model: &Model,
    n_particles: usize,
    config: &ScfConfig,
    ctx: &StepContext,
) -> Result<(HfbState, Projection, f64)> {
    let f = fock(state, model)?;
    let (pencil, proj) = project(&f, model, n_particles, config, ctx)?;
    let residual = commutator_residual(&to_frame(state, model), &pencil, proj.mu);
    Ok((from_frame(&proj.state, model), proj, residual))
}

/// Optimal convex combination `t·mixed + (1 − t)·pure` and its energy.
#[derive(Debug, Clone)]
pub struct LineSearch {
    pub t: f64,
    pub state: HfbState,
    pub energy: EnergyBreakdown,
}

/// Minimizes the exact quadratic `E(t) = ℰ(t·mixed + (1 − t)·pure)` over
/// `[0, 1]`, cross-checking its coefficients with a three-point fit.
///
/// When the minimizer is `t = 1` (no move) but the pure state lies at most
/// `slack` above the mixed one, the pure state is taken instead. Runs pass
/// the energy equivalent of the particle-number mismatch between the two
/// states, which otherwise stalls the iteration once that mismatch dominates
/// the remaining energy decrease.
pub fn oda_line_search(
    mixed: &HfbState,
    pure: &HfbState,
    mixed_fock: &FockFamily,
    mixed_energy: f64,
    model: &Model,
    slack: f64,
) -> Result<LineSearch> {
    // With s = 1 − t and D = mixed − pure: E = E₀ − s·a + s²·b.
    let d = mixed.difference(pure);
    let mut a = 0.0;
    for l in model.sectors() {
        let w = Model::weight(l);
        a += w * (mixed_fock.sectors[l].mean.dot(d.density(l)) + mixed_fock.sectors[l].pairing.dot(d.pairing(l)));
    }
    let b = interaction_energy(&d, model)?;

    let e_pure = energy(pure, model)?;
    let half = mixed.lerp(pure, 0.5);
    let e_half = energy(&half, model)?.total;
    // Fit through s = 0, ½, 1.
    let fit_b = 2.0 * (mixed_energy + e_pure.total - 2.0 * e_half);
    let fit_a = -(e_pure.total - mixed_energy - fit_b);
    let scale = mixed_energy.abs().max(a.abs()).max(b.abs()).max(1.0);
    let mismatch = (fit_a - a).abs().max((fit_b - b).abs());
    if !(a.is_finite() && b.is_finite() && e_half.is_finite()) {
        return Err(HfbError::NumericalBreakdown("non-finite energy in the line search".into()));
    }
    if mismatch > 1e-8 * scale {
        return Err(HfbError::NumericalBreakdown(format!(
            "line-search coefficients disagree with the three-point fit by {mismatch:e}"
        )));
    }

    let value = |s: f64| mixed_energy - s * a + s * s * b;
    // Changes below rounding of the energy count as flat; the pure state wins.
    let noise = (1e-13 * mixed_energy.abs().max(1.0)).min(1e-12);
    let s = if a.abs() <= noise && (b - a).abs() <= noise {
        1.0
    } else if b > 0.0 {
        (a / (2.0 * b)).clamp(0.0, 1.0)
    } else if value(1.0) <= value(0.0) {
        1.0
    } else {
        0.0
    };
    let s = if s == 0.0 && e_pure.total <= mixed_energy + slack { 1.0 } else { s };
    if s == 1.0 {
        return Ok(LineSearch { t: 0.0, state: pure.clone(), energy: e_pure });
    }
    if s == 0.0 {
        return Ok(LineSearch { t: 1.0, state: mixed.clone(), energy: energy(mixed, model)? });
    }
    let state = mixed.lerp(pure, s);
    let e = energy(&state, model)?;
    Ok(LineSearch { t: 1.0 - s, state, energy: e })
}

/// Rounding level of an energy evaluation.
pub fn energy_rounding(e: &EnergyBreakdown) -> f64 {
    let size = e.kinetic.abs() + e.direct.abs() + e.exchange.abs() + e.pairing.abs();
    2.5e-13 * size.max(1.0)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn oscillating(history: &[IterationRecord], window: usize) -> bool {
    if history.len() < window {
        return false;
    }
    let tail = &history[history.len() - window..];
    let mut d1: Vec<f64> = tail.iter().map(|r| r.dist1).collect();
    let mut d2: Vec<f64> = tail.iter().map(|r| r.dist2).collect();
    median(&mut d2) < 1e-6 && median(&mut d1) > 1e-3
}

/// Runs the configured SCF from `init` until the commutator residual drops
/// below tolerance, an oscillation is detected, or `max_iter` is reached.
pub fn run(model: &Model, n_particles: usize, config: &ScfConfig, init: &HfbState) -> Result<ConvergenceReport> {
    config.validate()?;
    if n_particles == 0 || 0.5 * n_particles as f64 >= model.capacity() {
        return Err(invalid(format!("particle number {n_particles} does not fit the basis")));
    }
    let init = match config.mode {
        Mode::Hf => init.without_pairing(),
        Mode::Hfb => init.clone(),
    };
    match config.algorithm {
        Algorithm::Roothaan => run_roothaan(model, n_particles, config, init),
        Algorithm::Oda => run_oda(model, n_particles, config, init),
    }
}

fn run_roothaan(model: &Model, n_particles: usize, config: &ScfConfig, init: HfbState) -> Result<ConvergenceReport> {
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut ctx = StepContext::default();
    let mut current = init;
    let mut current_frame = to_frame(&current, model);
    let mut previous_frame: Option<FrameState> = None;
    let mut status = Status::MaxIter;
    let mut last = None;
    for n in 0..config.max_iter {
        ctx.iter = n;
        let f = fock(&current, model)?;
        let (pencil, proj) = project(&f, model, n_particles, config, &ctx)?;
        let residual = commutator_residual(&current_frame, &pencil, proj.mu);
        let next = from_frame(&proj.state, model);
        let aux = auxiliary_energy(&current, &next, model)?;
        let e = energy(&current, model)?;
        let dist1 = proj.state.distance(&current_frame);
        let dist2 = previous_frame.as_ref().map_or(f64::NAN, |p| proj.state.distance(p));
        history.push(IterationRecord {
            iter: n,
            energy: e,
            auxiliary_energy: Some(aux),
            mu: proj.mu,
            particle_number: particle_number(&current, model),
            residual,
            dist1,
            dist2,
            pairing_norm: crate::state::pairing_norm(&current, model),
            damping: None,
            gap: proj.gap,
            used_fractional: proj.used_fractional,
        });
        ctx.mu_guess = Some(proj.mu);
        if residual < config.commutator_tol {
            status = Status::Converged;
            last = Some((e, proj, residual));
            break;
        }
        if oscillating(&history, config.oscillation_window) {
            status = Status::Oscillating;
            last = Some((e, proj, residual));
            break;
        }
        last = Some((e, proj.clone(), residual));
        previous_frame = Some(std::mem::replace(&mut current_frame, proj.state));
        current = next;
    }
    let (e, proj, residual) = last.expect("at least one iteration");
    Ok(ConvergenceReport {
        status,
        energy: e,
        state: current,
        mu: proj.mu,
        gap: proj.gap,
        residual,
        history,
        orbitals: proj.orbitals,
    })
}

fn run_oda(model: &Model, n_particles: usize, config: &ScfConfig, init: HfbState) -> Result<ConvergenceReport> {
    let mut history: Vec<IterationRecord> = Vec::new();
    let mut ctx = StepContext::default();
    let mut current = init;
    let mut current_energy = energy(&current, model)?;
    let mut frames: Vec<FrameState> = vec![to_frame(&current, model)];
    let mut status = Status::MaxIter;
    let mut last = None;
    for n in 0..config.max_iter {
        ctx.iter = n;
        let f = fock(&current, model)?;
        let (pencil, proj) = project(&f, model, n_particles, config, &ctx)?;
        let current_frame = frames.last().unwrap();
        let residual = commutator_residual(current_frame, &pencil, proj.mu);
        let k = frames.len();
        let dist1 = if k >= 2 { current_frame.distance(&frames[k - 2]) } else { f64::NAN };
        let dist2 = if k >= 3 { current_frame.distance(&frames[k - 3]) } else { f64::NAN };
        let mut record = IterationRecord {
            iter: n,
            energy: current_energy,
            auxiliary_energy: None,
            mu: proj.mu,
            particle_number: particle_number(&current, model),
            residual,
            dist1,
            dist2,
            pairing_norm: crate::state::pairing_norm(&current, model),
            damping: None,
            gap: proj.gap,
            used_fractional: proj.used_fractional,
        };
        ctx.mu_guess = Some(proj.mu);
        if residual < config.commutator_tol {
            history.push(record);
            status = Status::Converged;
            last = Some((proj, residual));
            break;
        }
        let pure = from_frame(&proj.state, model);
        let mismatch = (record.particle_number - particle_number(&pure, model)).abs();
        let slack = proj.mu.abs() * mismatch + energy_rounding(&current_energy);
        let ls = oda_line_search(&current, &pure, &f, current_energy.total, model, slack)?;
        record.damping = Some(ls.t);
        history.push(record);
        if oscillating(&history, config.oscillation_window) {
            status = Status::Oscillating;
            last = Some((proj, residual));
            break;
        }
        last = Some((proj, residual));
        current = ls.state;
        current_energy = ls.energy;
        frames.push(to_frame(&current, model));
        if frames.len() > 3 {
            frames.remove(0);
        }
    }
    let (proj, residual) = last.expect("at least one iteration");
    Ok(ConvergenceReport {
        status,
        energy: current_energy,
        state: current,
        mu: proj.mu,
        gap: proj.gap,
        residual,
        history,
        orbitals: proj.orbitals,
    })
}

/// Pairs the last `valence` filled HF orbitals with the first `valence`
/// empty ones, moves a fraction `1 − θ` of the smaller shell between them and
/// gives every orbital the pairing amplitude `sqrt(n(1 − n))`. The result is
/// pure and has the particle number of the HF state.
pub fn hfb_init_from_hf(orbitals: &[Orbital], model: &Model, valence: usize, theta: f64) -> Result<HfbState> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(invalid("theta must lie in (0, 1)"));
    }
    let mut orbs: Vec<Orbital> = orbitals.to_vec();
    orbs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    let filled: Vec<usize> = (0..orbs.len()).filter(|&i| orbs[i].occupation >= 0.5).collect();
    let empty: Vec<usize> = (0..orbs.len()).filter(|&i| orbs[i].occupation < 0.5).collect();
    if valence > filled.len() || valence > empty.len() {
        return Err(invalid(format!(
            "{valence} valence orbitals requested, {} filled and {} empty available",
            filled.len(),
            empty.len()
        )));
    }
    for k in 0..valence {
        let f = filled[filled.len() - 1 - k];
        let v = empty[k];
        let (wf, wv) = (Model::weight(orbs[f].sector), Model::weight(orbs[v].sector));
        let tau = ((1.0 - theta) * wf.min(wv))
            .min(orbs[f].occupation * wf)
            .min((1.0 - orbs[v].occupation) * wv);
        orbs[f].occupation -= tau / wf;
        orbs[v].occupation += tau / wv;
    }
    let n = model.dim();
    let mut density = vec![DMatrix::zeros(n, n); model.l_max() + 1];
    let mut pairing = vec![DMatrix::zeros(n, n); model.l_max() + 1];
    for o in &orbs {
        let occ = o.occupation.clamp(0.0, 1.0);
        let p = &o.vector * o.vector.transpose();
        density[o.sector] += &p * occ;
        pairing[o.sector] += &p * (occ * (1.0 - occ)).sqrt();
    }
    Ok(from_frame(&FrameState { density, pairing }, model))
}

/// Pairing norm of a frame state; same value as [`crate::state::pairing_norm`]
/// of the corresponding original-basis state.
pub fn pairing_norm_frame(state: &FrameState) -> f64 {
    frame_pairing_norm(state)
}
