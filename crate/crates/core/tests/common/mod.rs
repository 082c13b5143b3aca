//! Independent oracles shared by the integration tests and the acceptance
//! harness. Nothing here calls into the solvers.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `∫_0^1 |cos 2πx|^p dx` by a composite midpoint rule, then the `p`-th root.
pub fn cosine_lp_quadrature(p: f64) -> f64 {
    let m = 400_000;
    let s: f64 = (0..m).map(|i| (2.0 * PI * (i as f64 + 0.5) / m as f64).cos().abs().powf(p)).sum();
    (s / m as f64).powf(1.0 / p)
}

/// `sup_{0<h≤1/2} |e^{2πikh} − 1| / h^α` by golden-section refinement around
/// the best point of a coarse scan.
pub fn mode_quotient_sup(k: f64, alpha: f64) -> f64 {
    let f = |h: f64| ((2.0 - 2.0 * (2.0 * PI * k * h).cos()).max(0.0)).sqrt() / h.powf(alpha);
    let coarse = 4000;
    let (mut best, mut at) = (0.0, 0.5);
    for i in 1..=coarse {
        let h = 0.5 * i as f64 / coarse as f64;
        if f(h) > best {
            best = f(h);
            at = h;
        }
    }
    let step = 0.5 / coarse as f64;
    let (mut a, mut b) = ((at - step).max(1e-9), (at + step).min(0.5));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

/// `γ′ = γ/(γ−1)`.
pub fn conj(g: f64) -> f64 {
    g / (g - 1.0)
}

/// `(d+2)(γ−1)/γ`.
pub fn q_sub(d: f64, g: f64) -> f64 {
    (d + 2.0) * (g - 1.0) / g
}

/// `(d+2)(γ−1)/2`.
pub fn q_super(d: f64, g: f64) -> f64 {
    (d + 2.0) * (g - 1.0) / 2.0
}

/// Monotone threshold: `γ′d / ((d−2)(d+2−γ′))` for `γ ≤ 2`,
/// `2/(d(γ−1)−2)` above; unrestricted for `d ≤ 2`.
pub fn r_monotone(d: f64, g: f64) -> f64 {
    if d <= 2.0 {
        return f64::INFINITY;
    }
    if g <= 2.0 {
        let c = conj(g);
        c * d / ((d - 2.0) * (d + 2.0 - c))
    } else {
        2.0 / (d * (g - 1.0) - 2.0)
    }
}

/// Focusing threshold: `γ′/d` for `γ ≤ 2`, `2/((d+2)(γ−1)−2)` above.
pub fn r_focusing(d: f64, g: f64) -> f64 {
    if g <= 2.0 {
        conj(g) / d
    } else {
        2.0 / ((d + 2.0) * (g - 1.0) - 2.0)
    }
}

/// Hölder exponent `γ′ − (d+2)/q` on its formula range.
pub fn alpha_formula(d: f64, g: f64, q: f64) -> f64 {
    conj(g) - (d + 2.0) / q
}

/// Heat multiplier of mode `k` after time `t`.
pub fn heat_factor(k: f64, t: f64) -> f64 {
    (-4.0 * PI * PI * k * k * t).exp()
}
