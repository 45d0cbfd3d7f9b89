//! The C^∞ smooth switch `χ₁`, equal to 0 on `(-∞, 1]` and 1 on `[2, ∞)`.
//!
//! `χ₁(t) = ψ(t−1) / (ψ(t−1) + ψ(2−t))` with `ψ(x) = exp(−1/x)` for `x > 0`
//! and 0 otherwise. Every derivative vanishes identically outside `(1, 2)`.

use crate::jet::Jet;
use num_complex::Complex64;
use std::sync::OnceLock;

/// Below this argument `exp(−1/x)` is zero to double precision (and its
/// jet coefficients would overflow to `inf · 0`).
const PSI_CUTOFF: f64 = 1.0 / 740.0;

fn psi(x: Jet) -> Jet {
    if x.value().re < PSI_CUTOFF {
        return Jet::real_constant(0.0);
    }
    (-x.recip()).exp()
}

/// `[χ₁, χ₁', χ₁'', χ₁''']` at `t`.
pub fn switch_derivatives(t: f64) -> [f64; 4] {
    if t <= 1.0 {
        return [0.0; 4];
    }
    if t >= 2.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let x = Jet::variable(t);
    let one = Complex64::new(1.0, 0.0);
    let a = psi(x + (-one));
    let b = psi(-x + one * 2.0);
    let chi = a / (a + b);
    let mut out = [0, 1, 2, 3].map(|k| chi.derivative(k).re);
    // the jet quotient can round past the plateau value
    out[0] = (a.value().re / (a.value().re + b.value().re)).clamp(0.0, 1.0);
    out
}

pub fn switch_value(t: f64) -> f64 {
    switch_derivatives(t)[0]
}

/// Rising switch from 0 at `a` to 1 at `b` (`a < b`), with derivatives
/// in the original variable.
pub fn ramp(t: f64, a: f64, b: f64) -> [f64; 4] {
    let width = b - a;
    let d = switch_derivatives(1.0 + (t - a) / width);
    [d[0], d[1] / width, d[2] / (width * width), d[3] / (width * width * width)]
}

const LIPSCHITZ_SAMPLES: usize = 200_001;

/// Lipschitz constant of `χ₁`, i.e. `sup |χ₁'|`, from dense sampling of
/// the derivative on `[1, 2]`.
pub fn switch_lipschitz() -> f64 {
    static L: OnceLock<f64> = OnceLock::new();
    *L.get_or_init(|| {
        (0..LIPSCHITZ_SAMPLES)
            .map(|i| 1.0 + i as f64 / (LIPSCHITZ_SAMPLES - 1) as f64)
            .map(|t| switch_derivatives(t)[1].abs())
            .fold(0.0, f64::max)
    })
}
