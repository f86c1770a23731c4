#![allow(dead_code)]

use hfb_core::chempot::MuOptions;
use hfb_core::interaction::{newton_tensor, nuclear_tensor, NuclearKernel};
use hfb_core::state::{self, from_frame, FrameState};
use hfb_core::{HfbState, Model, Pencil, RadialBasis, RadialGrid};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&m + m.transpose()) * (0.5 * scale)
}

#[derive(Debug, Clone, Copy)]
pub enum KernelKind {
    Newtonian,
    Nuclear,
}

pub struct Instance {
    pub model: Model,
    pub particles: usize,
}

type TensorBuilder = Box<dyn Fn(&RadialBasis) -> hfb_core::interaction::TwoBodyTensor>;

/// Small random problem: grid size, radius, coupling and particle number
/// drawn from `rng`.
pub fn random_instance(rng: &mut ChaCha8Rng, kind: KernelKind, max_nb: usize, l_max: usize) -> Instance {
    let nb = rng.random_range(2..=max_nb);
    let (r_max, tensor_for): (f64, TensorBuilder) = match kind {
        KernelKind::Newtonian => {
            let g = rng.random_range(0.5..2.0);
            (rng.random_range(2.0..8.0), Box::new(move |b| newton_tensor(b, l_max, g).unwrap()))
        }
        KernelKind::Nuclear => {
            let kappa = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
            let a = rng.random_range(5.0..30.0);
            let k = NuclearKernel::with_strength(kappa, a);
            (rng.random_range(2.0..4.0), Box::new(move |b| nuclear_tensor(b, l_max, &k, 8).unwrap()))
        }
    };
    let basis = RadialBasis::new(RadialGrid::regular(r_max, nb).unwrap());
    let model = Model::from_basis(&basis, tensor_for(&basis)).unwrap();
    let capacity = model.capacity() as usize;
    let max_pairs = (capacity - 1).clamp(1, 4);
    let particles = 2 * rng.random_range(1..=max_pairs);
    Instance { model, particles }
}

/// Pure state with `Σ w tr(S G) = target`, the negative spectral projector of
/// a random mean field.
pub fn random_pure_state(rng: &mut ChaCha8Rng, model: &Model, target: f64) -> HfbState {
    let n = model.dim();
    let sectors = model.l_max() + 1;
    let mean = (0..sectors).map(|_| random_symmetric(rng, n, 2.0)).collect();
    let pairing = (0..sectors).map(|_| random_symmetric(rng, n, 0.5)).collect();
    let pencil = Pencil::from_frame(mean, pairing);
    let sol = pencil.solve_mu(target, &MuOptions { tol: 1e-12, ..Default::default() }).unwrap();
    from_frame(&sol.state, model)
}

/// Random admissible state mixing two pure states.
pub fn random_mixed_state(rng: &mut ChaCha8Rng, model: &Model, target: f64) -> HfbState {
    let a = random_pure_state(rng, model, target);
    let b = random_pure_state(rng, model, target);
    a.lerp(&b, rng.random_range(0.0..1.0))
}

pub fn random_direction(rng: &mut ChaCha8Rng, model: &Model) -> HfbState {
    let n = model.dim();
    let sectors = model.l_max() + 1;
    HfbState::new(
        (0..sectors).map(|_| random_symmetric(rng, n, 1.0)).collect(),
        (0..sectors).map(|_| random_symmetric(rng, n, 1.0)).collect(),
    )
    .unwrap()
}

fn add_scaled(x: &HfbState, d: &HfbState, eps: f64) -> HfbState {
    HfbState::new(
        x.densities().iter().zip(d.densities()).map(|(a, b)| a + b * eps).collect(),
        x.pairings().iter().zip(d.pairings()).map(|(a, b)| a + b * eps).collect(),
    )
    .unwrap()
}

/// Relative mismatch between `Σ w (tr F₁₁ dG + tr F₁₂ dA)` and the central
/// difference of the energy along `d`.
pub fn fock_gradient_mismatch(model: &Model, x: &HfbState, d: &HfbState, eps: f64) -> f64 {
    let f = state::fock(x, model).unwrap();
    let analytic: f64 = model
        .sectors()
        .map(|l| Model::weight(l) * (f.sectors[l].mean.dot(d.density(l)) + f.sectors[l].pairing.dot(d.pairing(l))))
        .sum();
    let e = |t: f64| state::energy(&add_scaled(x, d, t), model).unwrap().total;
    let numeric = (e(eps) - e(-eps)) / (2.0 * eps);
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-300)
}

/// Pure states of a one-sector, two-function model with `tr(S G) = pairs`:
/// `G = U diag(n, pairs − n) Uᵀ`, `A = U diag(√(n(1−n)), ±√(m(1−m))) Uᵀ` in
/// the orthonormal frame, `U` a rotation by `θ`.
pub fn two_level_state(model: &Model, pairs: f64, theta: f64, n1: f64, sign: f64) -> HfbState {
    let n2 = pairs - n1;
    let (c, s) = (theta.cos(), theta.sin());
    let u = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
    let occ = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![n1, n2]));
    let amp = |x: f64| (x * (1.0 - x)).max(0.0).sqrt();
    let pair = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![amp(n1), sign * amp(n2)]));
    let frame = FrameState { density: vec![&u * occ * u.transpose()], pairing: vec![&u * pair * u.transpose()] };
    from_frame(&frame, model)
}

/// Minimum of the energy over the two-level pure-state family: a grid scan
/// followed by a shrinking pattern search.
pub fn brute_force_two_level(model: &Model, pairs: f64) -> f64 {
    assert_eq!(model.dim(), 2);
    assert_eq!(model.l_max(), 0);
    let lo = (pairs - 1.0).max(0.0);
    let hi = pairs.min(1.0);
    let mut best = (f64::INFINITY, 0.0, 0.0, 1.0);
    for sign in [1.0, -1.0] {
        let e = |theta: f64, n1: f64| {
            state::energy(&two_level_state(model, pairs, theta, n1.clamp(lo, hi), sign), model).unwrap().total
        };
        for a in 0..=180 {
            let theta = std::f64::consts::PI * a as f64 / 180.0;
            for b in 0..=100 {
                let n1 = lo + (hi - lo) * b as f64 / 100.0;
                let v = e(theta, n1);
                if v < best.0 {
                    best = (v, theta, n1, sign);
                }
            }
        }
    }
    let (mut f, mut theta, mut n1, sign) = best;
    let e = |theta: f64, n1: f64| {
        state::energy(&two_level_state(model, pairs, theta, n1.clamp(lo, hi), sign), model).unwrap().total
    };
    let mut step = 0.02;
    while step > 1e-11 {
        let mut moved = false;
        for (dt, dn) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (t2, n2) = (theta + dt, (n1 + dn).clamp(lo, hi));
            let v = e(t2, n2);
            if v < f {
                (f, theta, n1) = (v, t2, n2);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    f
}

/// `½∫₋₁¹ P_a P_b P_c dt` by Gauss-Legendre, exact for the degrees involved.
pub fn legendre_triple(a: u32, b: u32, c: u32) -> f64 {
    let rule = gauss_quad::GaussLegendre::new(std::num::NonZeroUsize::new(12).unwrap());
    let p = |n: u32, t: f64| {
        let (mut p0, mut p1) = (1.0, t);
        if n == 0 {
            return 1.0;
        }
        for k in 1..n {
            let k = k as f64;
            (p0, p1) = (p1, ((2.0 * k + 1.0) * t * p1 - k * p0) / (k + 1.0));
        }
        p1
    };
    0.5 * rule.integrate(-1.0, 1.0, |t| p(a, t) * p(b, t) * p(c, t))
}

fn hat(nodes: &[f64], node: usize, r: f64) -> f64 {
    let x = nodes[node];
    if node > 0 && r >= nodes[node - 1] && r <= x {
        return (r - nodes[node - 1]) / (x - nodes[node - 1]);
    }
    if node + 1 < nodes.len() && r >= x && r <= nodes[node + 1] {
        return (nodes[node + 1] - r) / (nodes[node + 1] - x);
    }
    if node == 0 && r == 0.0 {
        return 1.0;
    }
    0.0
}

/// Cells `[a, b]` where both hats centered at `i` and `j` are non-zero.
fn shared_cells(nodes: &[f64], i: usize, j: usize) -> Vec<(f64, f64)> {
    (0..nodes.len() - 1)
        .filter(|&k| (k == i || k + 1 == i) && (k == j || k + 1 == j))
        .map(|k| (nodes[k], nodes[k + 1]))
        .collect()
}

/// `(ij|mn)_{l,l'}` of `−g/|x−y|` on a free-origin grid (basis function `i`
/// centered at node `i`) by nested double-exponential quadrature, splitting
/// the inner integral at `s = r`.
#[allow(clippy::too_many_arguments)]
pub fn newton_entry_oracle(nodes: &[f64], g: f64, l: u32, l2: u32, i: usize, j: usize, m: usize, n: usize) -> f64 {
    let terms: Vec<(i32, f64)> = (l.abs_diff(l2)..=l + l2)
        .map(|k| (k as i32, legendre_triple(l, l2, k)))
        .filter(|&(_, w)| w.abs() > 1e-14)
        .collect();
    let kernel = |r: f64, s: f64| -> f64 {
        let (lo, hi) = if r < s { (r, s) } else { (s, r) };
        if hi == 0.0 {
            return 0.0;
        }
        terms.iter().map(|&(k, w)| w * lo.powi(k) / hi.powi(k + 1)).sum::<f64>() * -g
    };
    let outer_cells = shared_cells(nodes, i, j);
    let inner_cells = shared_cells(nodes, m, n);
    let mut total = 0.0;
    for &(a, b) in &outer_cells {
        let outer = |r: f64| -> f64 {
            let fr = r * r * hat(nodes, i, r) * hat(nodes, j, r);
            let mut acc = 0.0;
            for &(c, d) in &inner_cells {
                let f = |s: f64| s * s * hat(nodes, m, s) * hat(nodes, n, s) * kernel(r, s);
                if r > c && r < d {
                    acc += quadrature::integrate(f, c, r, 1e-15).integral;
                    acc += quadrature::integrate(f, r, d, 1e-15).integral;
                } else {
                    acc += quadrature::integrate(f, c, d, 1e-15).integral;
                }
            }
            fr * acc
        };
        total += quadrature::integrate(outer, a, b, 1e-14).integral;
    }
    total
}

/// Mean field of spread 2 and pairing of spread 0.3 in an orthonormal frame.
pub fn random_pencil(seed: u64, n: usize, sectors: usize) -> Pencil {
    let mut rng = rng(seed);
    let mean = (0..sectors).map(|_| random_symmetric(&mut rng, n, 2.0)).collect();
    let pairing = (0..sectors).map(|_| random_symmetric(&mut rng, n, 0.3)).collect();
    Pencil::from_frame(mean, pairing)
}
