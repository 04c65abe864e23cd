//! Special functions used by the closed-form propagator and the erf coefficients.

use std::f64::consts::PI;

pub use statrs::function::erf::{erf, erfc};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Power series below 1, modified-Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    assert!(x > 0.0, "E1 requires x > 0, got {x}");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let add = -term / k as f64;
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        -EULER_GAMMA - x.ln() + sum
    } else {
        // E1(x) = e^{-x} / (x + 1 - 1^2/(x + 3 - 2^2/(x + 5 - ...)))
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Upper incomplete gamma `Γ(s, x)` for half-integer `s <= 1/2` and `x > 0`.
///
/// Built from `Γ(0,x) = E1(x)` or `Γ(1/2,x) = √π erfc(√x)` by the downward
/// recurrence `Γ(s,x) = (Γ(s+1,x) - x^s e^{-x}) / s`.
pub fn upper_gamma_half_integer(s: f64, x: f64) -> f64 {
    assert!(x > 0.0, "upper incomplete gamma requires x > 0");
    let twice = 2.0 * s;
    assert!(
        twice.fract() == 0.0 && s <= 0.5,
        "only half-integer s <= 1/2 supported, got {s}"
    );
    let (mut current, mut order) = if twice as i64 % 2 == 0 {
        (exp_integral_e1(x), 0.0)
    } else {
        (PI.sqrt() * erfc(x.sqrt()), 0.5)
    };
    while order > s {
        let next = order - 1.0;
        current = (current - x.powf(next) * (-x).exp()) / next;
        order = next;
    }
    current
}

/// Probabilists' Hermite polynomial `He_n(x)` by the three-term recurrence.
pub fn hermite_he(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = x;
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}
