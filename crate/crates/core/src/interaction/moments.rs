//! Closed-form one-cell moments `∫₀¹ x^p (1 − x)^q (a + h x)^e dx` and the
//! ordered two-variable moments needed for kernels with a `min/max` kink.

use std::sync::OnceLock;

use crate::basis::{beta_int, CellProduct};

fn binomial(n: i32, k: i32) -> f64 {
    if k < 0 || k > n {
        return 0.0;
    }
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

/// Generalized binomial coefficient for a possibly negative upper index.
fn gen_binomial(e: i32, k: i32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (e - i) as f64 / (i + 1) as f64)
}

fn legendre_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| unit_rule(64))
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`.
pub(crate) fn unit_rule(order: usize) -> Vec<(f64, f64)> {
    let order = std::num::NonZeroUsize::new(order).expect("quadrature order is positive");
    gauss_quad::GaussLegendre::new(order)
        .into_iter()
        .map(|(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect()
}

/// `∫₀¹ x^p (1 − x)^q (a + h x)^e dx` with `a ≥ 0`, `h > 0`.
pub(crate) fn weighted_beta(a: f64, h: f64, e: i32, p: i32, q: i32) -> f64 {
    if e >= 0 {
        if a == 0.0 {
            return h.powi(e) * beta_int(p + e, q);
        }
        return (0..=e)
            .map(|c| binomial(e, c) * a.powi(e - c) * h.powi(c) * beta_int(p + c, q))
            .sum();
    }
    if a == 0.0 {
        assert!(p + e >= 0, "moment diverges at the origin");
        return h.powi(e) * beta_int(p + e, q);
    }
    let u = h / a;
    if u <= 0.5 {
        let mut sum = 0.0;
        for c in 0..400 {
            let term = gen_binomial(e, c) * u.powi(c) * beta_int(p + c, q);
            sum += term;
            if c > 2 && term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        return a.powi(e) * sum;
    }
    if u <= 4.0 {
        return legendre_rule()
            .iter()
            .map(|&(x, w)| w * x.powi(p) * (1.0 - x).powi(q) * (a + h * x).powi(e))
            .sum();
    }
    // a ≪ h: substitute t = a + h x, expanding (1 − x)^q and x^j in t.
    let b = a + h;
    let mut sum = 0.0;
    for m in 0..=q {
        let j = p + m;
        let cm = binomial(q, m) * if m % 2 == 0 { 1.0 } else { -1.0 };
        let mut inner = 0.0;
        for i in 0..=j {
            let k = e + i;
            let t_int = if k == -1 {
                (b / a).ln()
            } else {
                (b.powi(k + 1) - a.powi(k + 1)) / (k + 1) as f64
            };
            inner += binomial(j, i) * (-a).powi(j - i) * t_int;
        }
        sum += cm * inner / h.powi(j + 1);
    }
    sum
}

/// `∫₀¹ outer(x) (a+hx)^(1−n) ∫₀^x inner(y) (a+hy)^(n+2) dy dx` on one cell.
pub(crate) fn ordered_moment(a: f64, h: f64, n: i32, outer: CellProduct, inner: CellProduct) -> f64 {
    let (po, qo) = outer.exponents();
    let (pi, qi) = inner.exponents();
    let up = n + 2;
    // Polynomial coefficients of inner(y) (a + h y)^(n+2).
    let mut coeffs = vec![0.0; (pi + qi + up + 1) as usize];
    for c in 0..=up {
        let bc = binomial(up, c) * h.powi(c) * if c == up { 1.0 } else { a.powi(up - c) };
        if bc == 0.0 {
            continue;
        }
        for m in 0..=qi {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            coeffs[(pi + c + m) as usize] += bc * sign * binomial(qi, m);
        }
    }
    coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, c)| c / (j + 1) as f64 * weighted_beta(a, h, 1 - n, po + j as i32 + 1, qo))
        .sum()
}
