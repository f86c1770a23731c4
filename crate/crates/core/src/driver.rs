//! Experiment drivers: run configuration, single runs with artifacts,
//! parameter sweeps and the critical-strength search.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::basis::{Origin, RadialBasis, RadialGrid};
use crate::chempot::Pencil;
use crate::error::{HfbError, Result};
use crate::interaction::{self, NuclearKernel, TwoBodyTensor};
use crate::model::Model;
use crate::scf::{
    self, hf_gap, hfb_init_from_hf, last_filled_energy, uniform_init, Algorithm, ConvergenceReport,
    IterationRecord, Mode, ScfConfig, Status,
};
use crate::state::{self, EnergyBreakdown, HfbState};

fn config_error(msg: impl Into<String>) -> HfbError {
    HfbError::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of particles `N`, even.
    pub particles: usize,
    /// Basis dimension `N_b`.
    pub basis_size: usize,
    /// Radius of the confining ball.
    pub r_max: f64,
    pub l_max: usize,
    #[serde(default)]
    pub origin: Origin,
}

fn default_b1() -> f64 {
    1.0
}

fn default_b2() -> f64 {
    4.0
}

fn default_quad_order() -> usize {
    16
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelConfig {
    /// `−g/|x|`
    Newtonian { g: f64 },
    /// `κ/|x| − a e^{−b₁|x|²} + (3a/2) e^{−b₂|x|²}`
    Nuclear {
        kappa: f64,
        a: f64,
        #[serde(default = "default_b1")]
        b1: f64,
        #[serde(default = "default_b2")]
        b2: f64,
        /// Gauss-Legendre points per cell and direction for the Gaussian part.
        #[serde(default = "default_quad_order")]
        quad_order: usize,
    },
}

impl KernelConfig {
    pub fn nuclear(kappa: f64, a: f64) -> Self {
        Self::Nuclear { kappa, a, b1: 1.0, b2: 4.0, quad_order: default_quad_order() }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Newtonian { g } if !(g > 0.0 && g.is_finite()) => Err(config_error("kernel.newtonian.g must be positive")),
            Self::Newtonian { .. } => Ok(()),
            Self::Nuclear { kappa, a, b1, b2, quad_order } => {
                if quad_order == 0 {
                    return Err(config_error("kernel.nuclear.quad_order must be positive"));
                }
                NuclearKernel { kappa, a1: a, b1, a2: 1.5 * a, b2 }
                    .validate()
                    .map_err(|e| config_error(format!("kernel.nuclear: {e}")))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory receiving iteration logs, the final state and the summary.
    pub dir: Option<PathBuf>,
    /// Directory of the on-disk tensor cache.
    pub tensor_cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    RMax,
    BasisSize,
    Particles,
    G,
    A,
    Kappa,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            Self::RMax => "r_max",
            Self::BasisSize => "basis_size",
            Self::Particles => "particles",
            Self::G => "g",
            Self::A => "a",
            Self::Kappa => "kappa",
        }
    }

    /// Coupling parameters leave the basis unchanged.
    fn keeps_basis(self) -> bool {
        matches!(self, Self::G | Self::A | Self::Kappa)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Start each point from the previous converged state when the basis is
    /// unchanged.
    #[serde(default)]
    pub warm_start: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub scf: ScfConfig,
    /// Converge HF with the ODA first and start HFB from it.
    #[serde(default = "yes")]
    pub hf_prerun: bool,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn new(system: SystemConfig, kernel: KernelConfig) -> Self {
        Self { system, kernel, scf: ScfConfig::default(), hf_prerun: true, output: OutputConfig::default(), sweep: None }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_error(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.system;
        if s.particles == 0 || s.particles % 2 == 1 {
            return Err(config_error(format!("system.particles must be even and positive, got {}", s.particles)));
        }
        if !(s.r_max > 0.0 && s.r_max.is_finite()) {
            return Err(config_error("system.r_max must be positive"));
        }
        if s.basis_size == 0 {
            return Err(config_error("system.basis_size must be positive"));
        }
        let capacity = (s.l_max + 1).pow(2) * s.basis_size;
        if s.particles / 2 >= capacity {
            return Err(config_error(format!("{} particles do not fit a basis of capacity {}", s.particles, 2 * capacity)));
        }
        self.kernel.validate()?;
        self.scf.validate().map_err(|e| config_error(format!("scf: {e}")))?;
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(config_error("sweep.values must not be empty"));
            }
            for &v in &sw.values {
                self.with_parameter(sw.parameter, v)?;
            }
        }
        Ok(())
    }

    /// Copy with one parameter replaced, validated.
    pub fn with_parameter(&self, p: SweepParameter, value: f64) -> Result<Self> {
        let mut c = self.clone();
        c.sweep = None;
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(config_error(format!("{} must be a non-negative integer, got {v}", p.name())))
            }
        };
        match (p, &mut c.kernel) {
            (SweepParameter::RMax, _) => c.system.r_max = value,
            (SweepParameter::BasisSize, _) => c.system.basis_size = as_count(value)?,
            (SweepParameter::Particles, _) => c.system.particles = as_count(value)?,
            (SweepParameter::G, KernelConfig::Newtonian { g }) => *g = value,
            (SweepParameter::A, KernelConfig::Nuclear { a, .. }) => *a = value,
            (SweepParameter::Kappa, KernelConfig::Nuclear { kappa, .. }) => *kappa = value,
            _ => return Err(config_error(format!("sweep parameter {} does not apply to this kernel", p.name()))),
        }
        c.validate()?;
        Ok(c)
    }

    pub fn basis(&self) -> Result<RadialBasis> {
        let s = &self.system;
        Ok(RadialBasis::new(RadialGrid::regular_with(s.r_max, s.basis_size, s.origin)?))
    }
}

/// Kernel pieces whose linear combination gives the tensor of any coupling.
#[derive(Debug, Clone)]
pub struct TensorParts {
    /// Unit `1/|x|` tensor.
    coulomb: TwoBodyTensor,
    /// Unit Gaussian tensors of ranges `b₁` and `b₂`.
    gaussians: Option<(TwoBodyTensor, TwoBodyTensor)>,
}

impl TensorParts {
    pub fn build(basis: &RadialBasis, config: &RunConfig) -> Result<Self> {
        let l_max = config.system.l_max;
        let cached = |name: String, build: &dyn Fn() -> Result<TwoBodyTensor>| match &config.output.tensor_cache {
            Some(dir) => {
                let key = interaction::cache_key(&name, basis.grid(), l_max);
                interaction::load_or_build(dir, &key, build)
            }
            None => build(),
        };
        let coulomb = cached("coulomb".into(), &|| interaction::coulomb_tensor(basis, l_max, 1.0))?;
        let gaussians = match config.kernel {
            KernelConfig::Newtonian { .. } => None,
            KernelConfig::Nuclear { b1, b2, quad_order, .. } => {
                let g1 = cached(format!("gaussian b={b1} q={quad_order}"), &|| {
                    interaction::gaussian_tensor(basis, l_max, b1, quad_order)
                })?;
                let g2 = cached(format!("gaussian b={b2} q={quad_order}"), &|| {
                    interaction::gaussian_tensor(basis, l_max, b2, quad_order)
                })?;
                Some((g1, g2))
            }
        };
        Ok(Self { coulomb, gaussians })
    }

    pub fn combine(&self, kernel: &KernelConfig) -> Result<TwoBodyTensor> {
        match (*kernel, &self.gaussians) {
            (KernelConfig::Newtonian { g }, _) => Ok(self.coulomb.scaled(-g)),
            (KernelConfig::Nuclear { kappa, a, .. }, Some((g1, g2))) => {
                let mut t = self.coulomb.scaled(kappa);
                t.add_scaled(-a, g1);
                t.add_scaled(1.5 * a, g2);
                Ok(t)
            }
            (KernelConfig::Nuclear { .. }, None) => Err(config_error("Gaussian parts were not built for this kernel")),
        }
    }
}

pub fn build_model(config: &RunConfig) -> Result<Model> {
    let basis = config.basis()?;
    let parts = TensorParts::build(&basis, config)?;
    Model::from_basis(&basis, parts.combine(&config.kernel)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub status: Status,
    pub energy: EnergyBreakdown,
    pub pairing_norm: f64,
    pub mu: f64,
    pub gap: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Per sector, decreasing, in `[0, 2(2l+1)]`.
    pub occupations: Vec<Vec<f64>>,
}

impl PhaseSummary {
    fn of(report: &ConvergenceReport, model: &Model) -> Self {
        Self {
            status: report.status,
            energy: report.energy,
            pairing_norm: state::pairing_norm(&report.state, model),
            mu: report.mu,
            gap: report.gap,
            residual: report.residual,
            iterations: report.iterations(),
            occupations: state::occupation_report(&report.state, model),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub hf: Option<PhaseSummary>,
    pub hfb: Option<PhaseSummary>,
    /// Highest occupied HF level.
    pub last_filled_hf: Option<f64>,
    /// HF LUMO − HOMO, zero for an open shell.
    pub hf_gap: Option<f64>,
    pub wall_time_s: f64,
}

impl RunSummary {
    /// Status of the last phase that ran.
    pub fn status(&self) -> Status {
        self.hfb.as_ref().or(self.hf.as_ref()).map_or(Status::MaxIter, |p| p.status)
    }

    pub fn final_phase(&self) -> Option<&PhaseSummary> {
        self.hfb.as_ref().or(self.hf.as_ref())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub hf: Option<ConvergenceReport>,
    pub hfb: Option<ConvergenceReport>,
}

impl RunOutcome {
    pub fn final_state(&self) -> Option<&HfbState> {
        self.hfb.as_ref().or(self.hf.as_ref()).map(|r| &r.state)
    }
}

/// HF pre-run and/or HFB run on a prepared model. `warm` replaces the
/// starting point of the first phase.
pub fn run_model(model: &Model, config: &RunConfig, warm: Option<&HfbState>) -> Result<RunOutcome> {
    let start = Instant::now();
    let n = config.system.particles;
    let default_init;
    let init = match warm {
        Some(s) => s,
        None => {
            default_init = uniform_init(n, model)?;
            &default_init
        }
    };
    let run_hf = config.scf.mode == Mode::Hf || config.hf_prerun;
    let hf = if run_hf {
        let mut cfg = config.scf;
        cfg.mode = Mode::Hf;
        if config.scf.mode == Mode::Hfb {
            cfg.algorithm = Algorithm::Oda;
        }
        Some(scf::run(model, n, &cfg, init)?)
    } else {
        None
    };
    let hfb = if config.scf.mode == Mode::Hfb {
        let start_state = match &hf {
            Some(r) => {
                let orbs = r.orbitals.as_deref().unwrap_or_default();
                hfb_init_from_hf(orbs, model, config.scf.hfb_init.valence, config.scf.hfb_init.theta)?
            }
            None => init.clone(),
        };
        Some(scf::run(model, n, &config.scf, &start_state)?)
    } else {
        None
    };
    let orbitals = hf.as_ref().and_then(|r| r.orbitals.as_deref());
    let summary = RunSummary {
        hf: hf.as_ref().map(|r| PhaseSummary::of(r, model)),
        hfb: hfb.as_ref().map(|r| PhaseSummary::of(r, model)),
        last_filled_hf: orbitals.map(last_filled_energy),
        hf_gap: orbitals.map(hf_gap),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(RunOutcome { summary, hf, hfb })
}

/// Builds the model, runs, and writes artifacts when an output directory is
/// configured.
pub fn run_single(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let model = build_model(config)?;
    let outcome = run_model(&model, config, None)?;
    if let Some(dir) = &config.output.dir {
        write_artifacts(dir, config, &outcome)?;
    }
    Ok(outcome)
}

pub const ITERATION_HEADER: [&str; 13] = [
    "iter",
    "E_total",
    "E_kin",
    "E_dir",
    "E_exch",
    "E_pair",
    "mu",
    "particle_number",
    "residual",
    "dist1",
    "dist2",
    "pairing_norm",
    "t_damp",
];

fn csv_error(e: csv::Error) -> HfbError {
    HfbError::Io(std::io::Error::other(e))
}

pub fn write_iterations(path: &Path, history: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(ITERATION_HEADER).map_err(csv_error)?;
    for r in history {
        let e = r.energy;
        let row = [
            r.iter.to_string(),
            e.total.to_string(),
            e.kinetic.to_string(),
            e.direct.to_string(),
            e.exchange.to_string(),
            e.pairing.to_string(),
            r.mu.to_string(),
            r.particle_number.to_string(),
            r.residual.to_string(),
            r.dist1.to_string(),
            r.dist2.to_string(),
            r.pairing_norm.to_string(),
            r.damping.map_or(String::new(), |t| t.to_string()),
        ];
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_artifacts(dir: &Path, config: &RunConfig, outcome: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), config.to_toml()?)?;
    if let Some(r) = &outcome.hf {
        write_iterations(&dir.join("hf_iterations.csv"), &r.history)?;
    }
    if let Some(r) = &outcome.hfb {
        write_iterations(&dir.join("hfb_iterations.csv"), &r.history)?;
    }
    if let Some(s) = outcome.final_state() {
        fs::write(dir.join("state.json"), serde_json::to_string(s)?)?;
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&outcome.summary)?)?;
    Ok(())
}

pub fn load_state(path: &Path) -> Result<HfbState> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub summary: RunSummary,
}

pub const SWEEP_HEADER: [&str; 11] = [
    "value",
    "hf_status",
    "E_hf",
    "last_filled_hf",
    "hf_gap",
    "hfb_status",
    "E_hfb",
    "pairing_norm",
    "mu",
    "gap",
    "iterations",
];

fn status_name(s: Option<Status>) -> &'static str {
    match s {
        Some(Status::Converged) => "converged",
        Some(Status::Oscillating) => "oscillating",
        Some(Status::MaxIter) => "max_iter",
        None => "",
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

pub fn write_sweep(out: impl std::io::Write, parameter: SweepParameter, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = SWEEP_HEADER.to_vec();
    header[0] = parameter.name();
    w.write_record(&header).map_err(csv_error)?;
    for row in rows {
        let s = &row.summary;
        let (hf, hfb) = (s.hf.as_ref(), s.hfb.as_ref());
        let last = s.final_phase();
        let record = [
            row.value.to_string(),
            status_name(hf.map(|p| p.status)).to_string(),
            opt(hf.map(|p| p.energy.total)),
            opt(s.last_filled_hf),
            opt(s.hf_gap),
            status_name(hfb.map(|p| p.status)).to_string(),
            opt(hfb.map(|p| p.energy.total)),
            opt(hfb.map(|p| p.pairing_norm)),
            opt(last.map(|p| p.mu)),
            opt(last.map(|p| p.gap)),
            last.map_or(0, |p| p.iterations).to_string(),
        ];
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// One run per sweep value. Coupling sweeps build the tensor pieces once.
pub fn sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let sw = config.sweep.as_ref().ok_or_else(|| config_error("no [sweep] section"))?;
    let shared = if sw.parameter.keeps_basis() {
        let basis = config.basis()?;
        let parts = TensorParts::build(&basis, config)?;
        Some((basis, parts))
    } else {
        None
    };
    let mut rows = Vec::with_capacity(sw.values.len());
    let mut previous: Option<HfbState> = None;
    for (k, &value) in sw.values.iter().enumerate() {
        let point = config.with_parameter(sw.parameter, value)?;
        let model = match &shared {
            Some((basis, parts)) => Model::from_basis(basis, parts.combine(&point.kernel)?)?,
            None => build_model(&point)?,
        };
        let warm = if sw.warm_start && sw.parameter.keeps_basis() { previous.as_ref() } else { None };
        let outcome = run_model(&model, &point, warm)?;
        if let Some(dir) = &config.output.dir {
            write_artifacts(&dir.join(format!("point-{k:03}")), &point, &outcome)?;
        }
        previous = outcome.final_state().cloned();
        rows.push(SweepRow { value, summary: outcome.summary });
    }
    if let Some(dir) = &config.output.dir {
        write_sweep(fs::File::create(dir.join("sweep.csv"))?, sw.parameter, &rows)?;
    }
    Ok(rows)
}

/// Last filled HF eigenvalue of a nuclear configuration as a function of `a`,
/// with the tensor pieces built once.
pub struct BindingProbe {
    config: RunConfig,
    basis: RadialBasis,
    parts: TensorParts,
}

impl BindingProbe {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        if !matches!(config.kernel, KernelConfig::Nuclear { .. }) {
            return Err(config_error("the binding probe needs a nuclear kernel"));
        }
        let mut config = config.clone();
        config.scf.mode = Mode::Hf;
        config.scf.algorithm = Algorithm::Oda;
        config.hf_prerun = false;
        let basis = config.basis()?;
        let parts = TensorParts::build(&basis, &config)?;
        Ok(Self { config, basis, parts })
    }

    pub fn last_filled(&self, a: f64) -> Result<f64> {
        let point = self.config.with_parameter(SweepParameter::A, a)?;
        let model = Model::from_basis(&self.basis, self.parts.combine(&point.kernel)?)?;
        let outcome = run_model(&model, &point, None)?;
        outcome.summary.last_filled_hf.ok_or_else(|| HfbError::NumericalBreakdown("HF run produced no orbitals".into()))
    }

    /// Bisection for the strength at which the last filled level crosses 0.
    /// `lo` must be unbound and `hi` bound.
    pub fn critical_strength(&self, lo: f64, hi: f64, tol: f64) -> Result<f64> {
        let (mut lo, mut hi) = (lo, hi);
        if self.last_filled(lo)? <= 0.0 || self.last_filled(hi)? > 0.0 {
            return Err(HfbError::InvalidArgument(format!("[{lo}, {hi}] does not bracket the binding threshold")));
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if self.last_filled(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuSample {
    pub mu: f64,
    pub nu: f64,
    /// `None` where the pencil has an eigenvalue at `μ`.
    pub dnu_dmu: Option<f64>,
    pub gap: f64,
}

/// `ν(μ)` on `samples` evenly spaced points of `[lo, hi]` for the mean field
/// of `state`.
pub fn nu_profile(model: &Model, state: &HfbState, lo: f64, hi: f64, samples: usize) -> Result<Vec<NuSample>> {
    if !(lo < hi) || samples < 2 {
        return Err(HfbError::InvalidArgument("need lo < hi and at least two samples".into()));
    }
    if state.dim() != model.dim() || state.l_max() != model.l_max() {
        return Err(HfbError::InvalidArgument("state does not match the model dimensions".into()));
    }
    let pencil = Pencil::new(&state::fock(state, model)?, model);
    Ok((0..samples)
        .map(|k| {
            let mu = lo + (hi - lo) * k as f64 / (samples - 1) as f64;
            let spectra = pencil.spectra(mu);
            NuSample {
                mu,
                nu: pencil.nu_of(&spectra),
                dnu_dmu: pencil.dnu_dmu_of(&spectra, mu).ok(),
                gap: crate::chempot::gap_of(&spectra),
            }
        })
        .collect())
}

pub fn write_nu_profile(out: impl std::io::Write, samples: &[NuSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["mu", "nu", "dnu_dmu", "gap"]).map_err(csv_error)?;
    for s in samples {
        w.write_record([s.mu.to_string(), s.nu.to_string(), opt(s.dnu_dmu), s.gap.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
