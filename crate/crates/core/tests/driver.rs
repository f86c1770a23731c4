use std::fs;

use hfb_core::driver::{
    load_state, nu_profile, run_single, sweep, write_nu_profile, write_sweep, BindingProbe, SweepConfig,
    SystemConfig, ITERATION_HEADER, SWEEP_HEADER,
};
use hfb_core::linalg::{sym_eigenvalues, CholeskyFrame};
use hfb_core::{HfbError, KernelConfig, Mode, Origin, RunConfig, RunSummary, Status, SweepParameter};
use proptest::prelude::*;

fn small(particles: usize, basis_size: usize, r_max: f64, kernel: KernelConfig) -> RunConfig {
    let mut cfg = RunConfig::new(SystemConfig { particles, basis_size, r_max, l_max: 1, origin: Origin::Free }, kernel);
    cfg.scf.max_iter = 1000;
    cfg
}

fn header(path: &std::path::Path) -> Vec<String> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().next().unwrap().split(',').map(str::to_owned).collect()
}

#[test]
fn single_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(6, 10, 8.0, KernelConfig::Newtonian { g: 1.0 });
    cfg.output.dir = Some(dir.path().join("run"));
    let outcome = run_single(&cfg).unwrap();
    let out = dir.path().join("run");
    for name in ["config.toml", "hf_iterations.csv", "hfb_iterations.csv", "state.json", "summary.json"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    assert_eq!(header(&out.join("hfb_iterations.csv")), ITERATION_HEADER);
    let summary: RunSummary = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.hfb, outcome.summary.hfb);
    assert_eq!(summary.status(), Status::Converged);
    let state = load_state(&out.join("state.json")).unwrap();
    assert_eq!(&state, outcome.final_state().unwrap());
    let again = RunConfig::load(&out.join("config.toml")).unwrap();
    assert_eq!(again, cfg);
    let rows = fs::read_to_string(out.join("hfb_iterations.csv")).unwrap().lines().count();
    assert_eq!(rows, outcome.hfb.as_ref().unwrap().history.len() + 1);
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let logs: Vec<String> = (0..2)
        .map(|k| {
            let mut cfg = small(4, 8, 5.0, KernelConfig::nuclear(1.0, 25.0));
            cfg.output.dir = Some(dir.path().join(k.to_string()));
            run_single(&cfg).unwrap();
            fs::read_to_string(dir.path().join(k.to_string()).join("hfb_iterations.csv")).unwrap()
        })
        .collect();
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn switched_off_interaction_fills_kinetic_levels() {
    let mut cfg = small(4, 12, 4.0, KernelConfig::nuclear(0.0, 0.0));
    cfg.system.l_max = 0;
    let outcome = run_single(&cfg).unwrap();
    let basis = cfg.basis().unwrap();
    let frame = CholeskyFrame::new(basis.overlap()).unwrap();
    let mut levels: Vec<f64> = sym_eigenvalues(&frame.operator_in(&basis.kinetic(0))).iter().copied().collect();
    levels.sort_by(f64::total_cmp);
    let expected = 2.0 * (levels[0] + levels[1]);
    for phase in [outcome.summary.hf.as_ref().unwrap(), outcome.summary.hfb.as_ref().unwrap()] {
        assert_eq!(phase.status, Status::Converged);
        assert!((phase.energy.total - expected).abs() < 1e-10 * expected, "{} vs {expected}", phase.energy.total);
        assert!(phase.pairing_norm < 1e-10);
    }
}

#[test]
fn hf_mode_skips_pairing_phase() {
    // 1s and 1p filled: a closed shell.
    let mut cfg = small(8, 10, 6.0, KernelConfig::Newtonian { g: 1.0 });
    cfg.scf.mode = Mode::Hf;
    let outcome = run_single(&cfg).unwrap();
    assert!(outcome.hfb.is_none());
    assert!(outcome.summary.last_filled_hf.unwrap() < 0.0);
    assert!(outcome.summary.hf_gap.unwrap() > 0.0);
}

#[test]
fn coupling_sweep_reports_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(6, 10, 8.0, KernelConfig::Newtonian { g: 1.0 });
    cfg.output.dir = Some(dir.path().to_path_buf());
    let values = vec![0.8, 1.0, 1.2];
    cfg.sweep = Some(SweepConfig { parameter: SweepParameter::G, values: values.clone(), warm_start: false });
    let cold = sweep(&cfg).unwrap();
    assert_eq!(cold.iter().map(|r| r.value).collect::<Vec<_>>(), values);
    for k in 0..3 {
        assert!(dir.path().join(format!("point-{k:03}")).join("summary.json").is_file());
    }
    let csv = dir.path().join("sweep.csv");
    let mut expected_header: Vec<String> = SWEEP_HEADER.iter().map(|s| s.to_string()).collect();
    expected_header[0] = "g".into();
    assert_eq!(header(&csv), expected_header);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 4);
    // Stronger attraction binds more.
    let e: Vec<f64> = cold.iter().map(|r| r.summary.hfb.as_ref().unwrap().energy.total).collect();
    assert!(e[0] > e[1] && e[1] > e[2]);

    cfg.output.dir = None;
    cfg.sweep.as_mut().unwrap().warm_start = true;
    let warm = sweep(&cfg).unwrap();
    for (a, b) in cold.iter().zip(&warm) {
        let (a, b) = (a.summary.final_phase().unwrap(), b.summary.final_phase().unwrap());
        assert!((a.energy.total - b.energy.total).abs() < 1e-7, "{} vs {}", a.energy.total, b.energy.total);
    }
}

#[test]
fn geometry_sweep_rebuilds_basis() {
    let mut cfg = small(2, 6, 4.0, KernelConfig::Newtonian { g: 1.0 });
    cfg.sweep = Some(SweepConfig { parameter: SweepParameter::BasisSize, values: vec![6.0, 9.0], warm_start: true });
    let rows = sweep(&cfg).unwrap();
    let mut out = Vec::new();
    write_sweep(&mut out, SweepParameter::BasisSize, &rows).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("basis_size,"));
    // A larger basis can only lower the HF energy.
    let e: Vec<f64> = rows.iter().map(|r| r.summary.hf.as_ref().unwrap().energy.total).collect();
    assert!(e[1] <= e[0] + 1e-10);
}

#[test]
fn bad_configs_are_rejected() {
    let base = small(4, 8, 6.0, KernelConfig::Newtonian { g: 1.0 });
    let is_config = |r: Result<RunConfig, HfbError>| matches!(r, Err(HfbError::Config(_)));

    let mut c = base.clone();
    c.sweep = Some(SweepConfig { parameter: SweepParameter::G, values: vec![], warm_start: false });
    assert!(matches!(c.validate(), Err(HfbError::Config(_))));
    assert!(matches!(sweep(&c), Err(HfbError::Config(_))));

    c.sweep = Some(SweepConfig { parameter: SweepParameter::A, values: vec![1.0], warm_start: false });
    assert!(matches!(c.validate(), Err(HfbError::Config(_))));
    c.sweep = Some(SweepConfig { parameter: SweepParameter::Particles, values: vec![3.0], warm_start: false });
    assert!(matches!(c.validate(), Err(HfbError::Config(_))));

    let text = base.to_toml().unwrap();
    assert!(is_config(RunConfig::from_toml(&text.replace("particles = 4", "particles = 5"))));
    assert!(is_config(RunConfig::from_toml(&text.replace("r_max = 6.0", "r_max = -1.0"))));
    assert!(is_config(RunConfig::from_toml(&text.replace("l_max = 1", "l_max = 1\nlmax = 2"))));
    assert!(is_config(RunConfig::from_toml(&text.replace("g = 1.0", "g = 0.0"))));
    assert!(is_config(RunConfig::from_toml(&text.replace("particles = 4", "particles = 64"))));
}

#[test]
fn binding_probe_needs_nuclear_bracket() {
    let newton = small(4, 8, 3.0, KernelConfig::Newtonian { g: 1.0 });
    assert!(matches!(BindingProbe::new(&newton), Err(HfbError::Config(_))));
    let mut cfg = small(4, 12, 3.0, KernelConfig::nuclear(1.0, 20.0));
    cfg.system.l_max = 0;
    let probe = BindingProbe::new(&cfg).unwrap();
    assert!(probe.last_filled(5.0).unwrap() > 0.0);
    assert!(probe.last_filled(40.0).unwrap() < 0.0);
    assert!(matches!(probe.critical_strength(35.0, 40.0, 0.1), Err(HfbError::InvalidArgument(_))));
    let a_c = probe.critical_strength(5.0, 40.0, 0.05).unwrap();
    assert!(probe.last_filled(a_c - 0.1).unwrap() > 0.0);
    assert!(probe.last_filled(a_c + 0.1).unwrap() < 0.0);
}

#[test]
fn nu_profile_is_monotone_and_bounded() {
    let cfg = small(6, 10, 8.0, KernelConfig::Newtonian { g: 1.0 });
    let model = hfb_core::driver::build_model(&cfg).unwrap();
    let outcome = hfb_core::driver::run_model(&model, &cfg, None).unwrap();
    let state = outcome.final_state().unwrap();
    let samples = nu_profile(&model, state, -5.0, 5.0, 101).unwrap();
    assert_eq!(samples.len(), 101);
    for w in samples.windows(2) {
        assert!(w[1].nu >= w[0].nu - 1e-12);
    }
    assert!(samples.iter().all(|s| (0.0..=model.capacity() + 1e-12).contains(&s.nu)));
    assert!(samples.iter().any(|s| s.dnu_dmu.is_some()));
    let mut out = Vec::new();
    write_nu_profile(&mut out, &samples).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("mu,nu,dnu_dmu,gap\n"));
    assert_eq!(text.lines().count(), 102);
    assert!(nu_profile(&model, state, 1.0, 1.0, 10).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips_through_toml(
        pairs in 1usize..20,
        basis_size in 20usize..200,
        r_max in 0.5f64..50.0,
        l_max in 0usize..3,
        nuclear in any::<bool>(),
        coupling in 0.01f64..40.0,
        max_iter in 1usize..5000,
    ) {
        let kernel = if nuclear { KernelConfig::nuclear(1.0, coupling) } else { KernelConfig::Newtonian { g: coupling } };
        let mut cfg = RunConfig::new(
            SystemConfig { particles: 2 * pairs, basis_size, r_max, l_max, origin: Origin::Free },
            kernel,
        );
        cfg.scf.max_iter = max_iter;
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
