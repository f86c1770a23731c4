mod common;

use hfb_core::interaction::{
    coulomb_tensor, gaussian_tensor, multipole_terms, newton_tensor, nuclear_kernel_w, nuclear_tensor,
    wigner3j_sq_000, NuclearKernel,
};
use hfb_core::{HfbError, RadialBasis, RadialGrid};
use proptest::prelude::*;

#[test]
fn newton_tensor_matches_adaptive_quadrature() {
    let basis = RadialBasis::regular(4.0, 6).unwrap();
    let nodes = basis.grid().nodes().to_vec();
    let t = newton_tensor(&basis, 1, 1.0).unwrap();
    let entries = [
        (0, 0, 0, 0, 0, 0),
        (0, 0, 1, 1, 1, 1),
        (0, 0, 1, 2, 4, 4),
        (0, 0, 5, 5, 0, 1),
        (0, 1, 2, 2, 3, 3),
        (0, 1, 1, 2, 2, 3),
        (1, 1, 3, 3, 3, 3),
        (1, 1, 0, 1, 4, 5),
        (1, 1, 2, 3, 2, 3),
    ];
    for (l, l2, i, j, m, n) in entries {
        let expected = common::newton_entry_oracle(&nodes, 1.0, l as u32, l2 as u32, i, j, m, n);
        let got = t.entry(l, l2, i, j, m, n);
        let rel = (got - expected).abs() / expected.abs();
        assert!(rel <= 1e-10, "({l},{l2}) [{i}{j}|{m}{n}]: {got:e} vs {expected:e}, rel {rel:e}");
    }
}

#[test]
fn gaussian_tensor_matches_frozen_oracle() {
    // Nested adaptive quadrature in t, r and s (scipy), r_max = 3, N_b = 4.
    let reference = [
        (1.0, [0, 0, 0, 0, 0, 0], 1.472347106027e-4),
        (1.0, [0, 0, 1, 2, 2, 2], 2.142826572228e-2),
        (1.0, [0, 1, 1, 1, 2, 3], 5.272799336964e-3),
        (1.0, [1, 1, 0, 1, 3, 3], 3.201308911412e-4),
        (1.0, [1, 1, 2, 2, 2, 2], 8.396137991577e-2),
        (4.0, [0, 0, 0, 0, 0, 0], 7.611046633457e-5),
        (4.0, [0, 0, 1, 2, 2, 2], 3.572455422950e-3),
        (4.0, [0, 1, 1, 1, 2, 3], 2.493995553857e-4),
        (4.0, [1, 1, 0, 1, 3, 3], 4.468024551647e-7),
        (4.0, [1, 1, 2, 2, 2, 2], 2.296035857703e-2),
    ];
    let basis = RadialBasis::regular(3.0, 4).unwrap();
    for b in [1.0, 4.0] {
        let t = gaussian_tensor(&basis, 1, b, 16).unwrap();
        for &(_, [l, l2, i, j, m, n], v) in reference.iter().filter(|r| r.0 == b) {
            let got = t.entry(l, l2, i, j, m, n);
            assert!((got - v).abs() <= 1e-10 * v, "b={b} ({l},{l2}) [{i}{j}|{m}{n}]: {got:e} vs {v:e}");
        }
    }
}

#[test]
fn gaussian_tensor_converges_in_quadrature_order() {
    let basis = RadialBasis::regular(3.0, 5).unwrap();
    let coarse = gaussian_tensor(&basis, 1, 4.0, 8).unwrap();
    let fine = gaussian_tensor(&basis, 1, 4.0, 32).unwrap();
    for (a, b) in coarse.blocks().iter().zip(fine.blocks()) {
        assert!((a - b).amax() <= 1e-9 * b.amax());
    }
}

fn legendre(n: u32, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return 1.0;
    }
    for k in 1..n {
        let k = k as f64;
        (p0, p1) = (p1, ((2.0 * k + 1.0) * t * p1 - k * p0) / (k + 1.0));
    }
    p1
}

#[test]
fn kernel_w_matches_angular_quadrature() {
    let k = NuclearKernel::with_strength(1.0, 20.0);
    for (l, l2) in [(0, 0), (0, 1), (1, 1), (0, 2), (2, 2)] {
        for (r, s) in [(0.3, 1.1), (1.0, 0.5), (2.0, 2.7), (0.0, 1.5)] {
            let f = |t: f64| {
                let d2 = r * r + s * s - 2.0 * r * s * t;
                legendre(l, t) * legendre(l2, t)
                    * (k.kappa / d2.sqrt() - k.a1 * (-k.b1 * d2).exp() + k.a2 * (-k.b2 * d2).exp())
            };
            let expected = 0.5 * quadrature::integrate(f, -1.0, 1.0, 1e-14).integral;
            let got = nuclear_kernel_w(l, l2, r, s, &k).unwrap();
            assert!((got - expected).abs() <= 1e-11 * expected.abs().max(1.0), "({l},{l2}) r={r} s={s}: {got} vs {expected}");
        }
    }
}

#[test]
fn kernel_w_special_values() {
    let k = NuclearKernel::with_strength(0.0, 2.0);
    let w = nuclear_kernel_w(0, 0, 0.0, 0.0, &k).unwrap();
    assert!((w - (k.a2 - k.a1)).abs() < 1e-14);
    let coulomb = NuclearKernel { kappa: 1.0, a1: 0.0, b1: 1.0, a2: 0.0, b2: 4.0 };
    for (r, s) in [(0.5, 2.0), (3.0, 1.0)] {
        let w = nuclear_kernel_w(0, 0, r, s, &coulomb).unwrap();
        assert!((w - 1.0 / f64::max(r, s)).abs() < 1e-13);
    }
    assert!(matches!(nuclear_kernel_w(0, 0, 0.0, 0.0, &coulomb), Err(HfbError::SingularPoint)));
}

#[test]
fn newton_is_negated_coulomb() {
    let basis = RadialBasis::regular(5.0, 6).unwrap();
    let newton = newton_tensor(&basis, 1, 1.7).unwrap();
    let coulomb = nuclear_tensor(&basis, 1, &NuclearKernel { kappa: 1.7, a1: 0.0, b1: 1.0, a2: 0.0, b2: 4.0 }, 8).unwrap();
    for (a, b) in newton.blocks().iter().zip(coulomb.blocks()) {
        assert!((a + b).amax() <= 1e-15 * b.amax());
    }
}

#[test]
fn zero_nuclear_kernel_gives_zero_tensor() {
    let basis = RadialBasis::regular(3.0, 5).unwrap();
    let t = nuclear_tensor(&basis, 1, &NuclearKernel::with_strength(0.0, 0.0), 8).unwrap();
    assert!(t.blocks().iter().all(|b| b.amax() == 0.0));
}

#[test]
fn three_j_sum_rule() {
    for l in 0..=2u32 {
        for l2 in 0..=2u32 {
            let s: f64 = (0..=l + l2).map(|n| (2 * n + 1) as f64 * wigner3j_sq_000(l, l2, n)).sum();
            assert!((s - 1.0).abs() <= 1e-12, "l={l} l'={l2}: {s}");
        }
    }
}

#[test]
fn three_j_matches_legendre_triple_products() {
    for l in 0..=3u32 {
        for l2 in 0..=3u32 {
            for n in 0..=6u32 {
                let a = wigner3j_sq_000(l, l2, n);
                let b = common::legendre_triple(l, l2, n);
                assert!((a - b).abs() < 1e-14, "({l} {l2} {n}): {a} vs {b}");
            }
        }
    }
    let terms: Vec<u32> = multipole_terms(2, 1).iter().map(|t| t.0).collect();
    assert_eq!(terms, vec![1, 3]);
}

#[test]
fn band_outside_supports_is_zero() {
    let basis = RadialBasis::regular(3.0, 5).unwrap();
    let t = coulomb_tensor(&basis, 0, 1.0).unwrap();
    assert_eq!(t.entry(0, 0, 0, 2, 1, 1), 0.0);
    assert_eq!(t.entry(0, 0, 1, 1, 4, 1), 0.0);
    assert_eq!(t.stored_len(), (2 * 5 - 1) * (2 * 5 - 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tensor_index_symmetries(
        cuts in proptest::collection::vec(0.05f64..1.0, 3..7),
        l in 0usize..=1,
        l2 in 0usize..=1,
        picks in proptest::collection::vec(0usize..100, 4),
    ) {
        let mut nodes = vec![0.0];
        for c in &cuts {
            nodes.push(nodes.last().unwrap() + c);
        }
        let basis = RadialBasis::new(RadialGrid::custom(nodes).unwrap());
        let nb = basis.dim();
        let t = newton_tensor(&basis, 1, 1.0).unwrap();
        let i = picks[0] % nb;
        let j = (i + picks[1] % 2).min(nb - 1);
        let m = picks[2] % nb;
        let n = (m + picks[3] % 2).min(nb - 1);
        let v = t.entry(l, l2, i, j, m, n);
        prop_assert_eq!(v, t.entry(l, l2, j, i, m, n));
        prop_assert_eq!(v, t.entry(l, l2, i, j, n, m));
        prop_assert!((v - t.entry(l2, l, m, n, i, j)).abs() <= 1e-15 * v.abs().max(1e-300));
        if i == j && m == n {
            prop_assert!(v < 0.0);
        }
    }

    #[test]
    fn coulomb_tensor_scales_linearly(c in 0.1f64..5.0, nb in 2usize..7) {
        let basis = RadialBasis::regular(4.0, nb).unwrap();
        let unit = coulomb_tensor(&basis, 1, 1.0).unwrap();
        let scaled = coulomb_tensor(&basis, 1, c).unwrap();
        for (a, b) in unit.blocks().iter().zip(scaled.blocks()) {
            prop_assert!((a * c - b).amax() <= 1e-14 * b.amax());
        }
    }
}
