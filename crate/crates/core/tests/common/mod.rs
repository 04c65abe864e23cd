#![allow(dead_code)]

use std::f64::consts::PI;

use uvlab_core::lattice::{SourceField, SourceSpec};
use uvlab_core::{ModelParams, TorusLattice};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// E1 by Ramanujan's rapidly converging series (independent of the library's
/// series/continued-fraction split).
pub fn e1_ramanujan(x: f64) -> f64 {
    let mut outer = 0.0;
    let mut term = 1.0; // x^n / (n! 2^{n-1}) built incrementally
    let mut inner = 0.0;
    for n in 1..200usize {
        term *= x / n as f64;
        if n > 1 {
            term /= 2.0;
        }
        if (n - 1) % 2 == 0 {
            inner += 1.0 / n as f64;
        }
        let add = term * inner;
        outer += add;
        if add.abs() < 1e-18 * outer.abs() && n > 5 {
            break;
        }
    }
    -EULER_GAMMA - x.ln() + (-x / 2.0).exp() * outer
}

/// K0 by trapezoidal quadrature of `∫_0^∞ e^{-x cosh t} dt`.
pub fn bessel_k0(x: f64) -> f64 {
    let h: f64 = 0.005;
    let mut sum = 0.5 * (-x).exp();
    let mut t: f64 = h;
    loop {
        let v = (-x * t.cosh()).exp();
        sum += v;
        if v < 1e-30 {
            break;
        }
        t += h;
    }
    sum * h
}

/// 1-D integral of a smooth function by composite Simpson on a fine grid.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n };
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn params2(cutoff: f64) -> ModelParams {
    ModelParams::new(2, 1.0, 4.0, cutoff).unwrap()
}

/// A one-mode source with a phase chosen so no lattice site sits on a node.
pub fn one_mode() -> SourceSpec {
    SourceSpec::Modes {
        modes: vec![uvlab_core::lattice::Mode {
            k: vec![1, 0],
            amplitude: 1.0,
            phase: 0.3,
        }],
    }
}

pub fn one_mode_on(lat: &TorusLattice) -> SourceField {
    one_mode().build(lat).unwrap()
}

/// `gap[i+1] < gap[i]`, or both already at the noise floor.
pub fn decreasing_with_floor(gaps: &[f64], floor: f64) -> bool {
    gaps.windows(2).all(|w| w[1] < w[0] || w[1] <= floor)
}
