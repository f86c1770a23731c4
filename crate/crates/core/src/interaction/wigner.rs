//! Squared Wigner 3j symbols with vanishing magnetic numbers.

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `(l1 l2 l3; 0 0 0)²`, equal to `½∫₋₁¹ P_l1 P_l2 P_l3 dt`.
pub fn wigner3j_sq_000(l1: u32, l2: u32, l3: u32) -> f64 {
    let j = l1 + l2 + l3;
    if j % 2 == 1 {
        return 0.0;
    }
    if l3 > l1 + l2 || l1 > l2 + l3 || l2 > l1 + l3 {
        return 0.0;
    }
    let g = j / 2;
    let ratio = factorial(g) / (factorial(g - l1) * factorial(g - l2) * factorial(g - l3));
    let delta = factorial(j - 2 * l1) * factorial(j - 2 * l2) * factorial(j - 2 * l3)
        / factorial(j + 1);
    delta * ratio * ratio
}

/// Multipole orders `n` contributing to the `(l1, l2)` coupling, with their
/// squared 3j weights.
pub fn multipole_terms(l1: u32, l2: u32) -> Vec<(u32, f64)> {
    (l1.abs_diff(l2)..=l1 + l2)
        .map(|n| (n, wigner3j_sq_000(l1, l2, n)))
        .filter(|&(_, w)| w != 0.0)
        .collect()
}
