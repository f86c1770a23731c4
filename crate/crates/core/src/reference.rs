//! Published reference values for the gravitational and nuclear models,
//! evaluated with the drivers. Used by the `check` command.

use serde::{Deserialize, Serialize};

use crate::basis::Origin;
use crate::driver::{run_single, BindingProbe, KernelConfig, RunConfig, SystemConfig};
use crate::error::Result;
use crate::scf::{Algorithm, Mode, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Seconds.
    Small,
    /// Minutes.
    Medium,
    /// Includes the `N_b = 200` cases.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    pub tol: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, observed: f64, expected: f64, tol: f64) -> Self {
        Self { name: name.into(), observed, expected, tol }
    }

    pub fn pass(&self) -> bool {
        (self.observed - self.expected).abs() <= self.tol
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: observed {} expected {} tol {:e}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.name,
            fmt_value(self.observed),
            fmt_value(self.expected),
            self.tol
        )
    }
}

fn fmt_value(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.7}")
    }
}

pub fn newtonian(particles: usize, basis_size: usize, r_max: f64, l_max: usize) -> RunConfig {
    RunConfig::new(
        SystemConfig { particles, basis_size, r_max, l_max, origin: Origin::Free },
        KernelConfig::Newtonian { g: 1.0 },
    )
}

/// Converged HF and HFB energies and pairing norm.
pub struct Ground {
    pub hf: f64,
    pub hfb: f64,
    pub pairing_norm: f64,
    pub hf_gap: f64,
    pub last_filled_hf: f64,
    pub occupations: Vec<Vec<f64>>,
    pub converged: bool,
}

pub fn ground(config: &RunConfig) -> Result<Ground> {
    let out = run_single(config)?;
    let s = out.summary;
    let (hf, hfb) = (s.hf.expect("HF pre-run"), s.hfb.expect("HFB phase"));
    Ok(Ground {
        hf: hf.energy.total,
        hfb: hfb.energy.total,
        pairing_norm: hfb.pairing_norm,
        hf_gap: s.hf_gap.unwrap_or(f64::NAN),
        last_filled_hf: s.last_filled_hf.unwrap_or(f64::NAN),
        occupations: hfb.occupations,
        converged: hf.status == Status::Converged && hfb.status == Status::Converged,
    })
}

/// Status of a plain HF Roothaan run from the uniform state.
pub fn hf_roothaan_status(mut config: RunConfig) -> Result<Status> {
    config.scf.mode = Mode::Hf;
    config.scf.algorithm = Algorithm::Roothaan;
    config.hf_prerun = false;
    Ok(run_single(&config)?.summary.status())
}

fn energy_table(checks: &mut Vec<Check>, label: &str, g: &Ground, hf: f64, hfb: f64, norm: Option<f64>, tol: f64) {
    checks.push(Check::new(format!("{label} HF energy"), g.hf, hf, tol));
    checks.push(Check::new(format!("{label} HFB energy"), g.hfb, hfb, tol));
    if let Some(n) = norm {
        checks.push(Check::new(format!("{label} pairing norm"), g.pairing_norm, n, 0.02));
    }
}

/// Bracket of the binding threshold used for the nuclear checks.
pub const STRENGTH_BRACKET: (f64, f64) = (5.0, 40.0);

pub fn critical_strength(kappa: f64, l_max: usize) -> Result<f64> {
    let cfg = RunConfig::new(
        SystemConfig { particles: 4, basis_size: 50, r_max: 3.0, l_max, origin: Origin::Free },
        KernelConfig::nuclear(kappa, 20.0),
    );
    BindingProbe::new(&cfg)?.critical_strength(STRENGTH_BRACKET.0, STRENGTH_BRACKET.1, 1e-2)
}

pub fn run_checks(scale: Scale, mut log: impl FnMut(&Check)) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut push = |checks: &mut Vec<Check>, from: usize| {
        for c in &checks[from..] {
            log(c);
        }
    };

    let g = ground(&newtonian(16, 30, 9.0, 1))?;
    energy_table(&mut checks, "N=16 N_b=30 r_max=9", &g, -19.112314, -19.117948, Some(0.425604), 5e-3);
    push(&mut checks, 0);

    if scale >= Scale::Medium {
        let k = checks.len();
        let g = ground(&newtonian(16, 50, 9.0, 1))?;
        energy_table(&mut checks, "N=16 N_b=50 r_max=9", &g, -19.189066, -19.196012, Some(0.445728), 5e-3);
        let g = ground(&newtonian(16, 100, 9.0, 1))?;
        energy_table(&mut checks, "N=16 N_b=100 r_max=9", &g, -19.222300, -19.229872, None, 5e-3);
        for (kappa, expected) in [(1.0, 23.5), (0.0, 17.5)] {
            let a = critical_strength(kappa, 0)?;
            checks.push(Check::new(format!("critical strength kappa={kappa} l_max=0"), a, expected, 1.0));
        }
        push(&mut checks, k);
    }

    if scale >= Scale::Full {
        let k = checks.len();
        let g = ground(&newtonian(6, 200, 15.0, 1))?;
        energy_table(&mut checks, "N=6 N_b=200 r_max=15", &g, -1.7327688, -1.9934252, None, 1e-2);
        checks.push(Check::new("N=6 N_b=200 r_max=15 pairing norm", g.pairing_norm, 1.0242134, 0.05));
        checks.push(Check::new("N=6 N_b=200 r_max=15 HF gap", g.hf_gap, 0.0, 1e-6));

        let mut hf = newtonian(6, 200, 20.0, 0);
        hf.scf.mode = Mode::Hf;
        let g = run_single(&hf)?.summary;
        checks.push(Check::new("N=6 N_b=200 r_max=20 last filled level", g.last_filled_hf.unwrap_or(f64::NAN), -0.532430, 2e-3));
        checks.push(Check::new("N=6 N_b=200 r_max=20 HF gap", g.hf_gap.unwrap_or(f64::NAN), 0.159430, 2e-3));
        let status = hf_roothaan_status(newtonian(6, 200, 30.0, 0))?;
        checks.push(Check::new(
            "N=6 N_b=200 r_max=30 Roothaan oscillates",
            f64::from(u8::from(status == Status::Oscillating)),
            1.0,
            0.0,
        ));

        let g = ground(&newtonian(16, 200, 10.0, 1))?;
        let third_s = g.occupations[0].get(2).copied().unwrap_or(f64::NAN);
        let depletion = 6.0 - g.occupations[1].get(1).copied().unwrap_or(f64::NAN);
        checks.push(Check::new("N=16 N_b=200 r_max=10 third l=0 occupation", third_s, 0.2281, 0.02));
        checks.push(Check::new("N=16 N_b=200 r_max=10 depletion of last HF shell", depletion, 0.228, 0.03));
        push(&mut checks, k);
    }
    Ok(checks)
}
