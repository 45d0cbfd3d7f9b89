//! Hypotheses (i)–(iii) of the resonance-free estimate: the forbidden-region
//! margin, the virial margin, partitions `χ² + χ̃² = 1`, and explicit
//! parameter windows for the free operator.

use crate::error::{argument, Error, Result};
use crate::potential::{q_eval, PotentialFamily, PotentialModel};
use crate::switch::{ramp, switch_derivatives};
use serde::{Deserialize, Serialize};
use std::f64::consts::E as EULER;

/// `−½r^{2s} + q(r) − E`.
pub fn forbidden_margin(m: &PotentialModel, energy: f64, r: f64) -> Result<f64> {
    Ok(-0.5 * r.powf(2.0 * m.s) + q_eval(m, r, 0)? - energy)
}

/// Left side of condition (iii) minus `μ`.
pub fn virial_margin(m: &PotentialModel, energy: f64, mu: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(argument(format!("virial margin needs r > 0, got {r}")));
    }
    let s = m.s;
    let q = q_eval(m, r, 0)?;
    let dq = q_eval(m, r, 1)?;
    let value = if s < 1.0 {
        1.0 - s - 2.0 * (1.0 - 2.0 * s) * r.powf(-2.0 * s) * (q - energy) - r.powf(1.0 - 2.0 * s) * dq
    } else {
        let lr = r.ln();
        1.0 + 2.0 * (lr - 1.0) * (q - energy) / (r * r) - lr / r * dq
    };
    Ok(value - mu)
}

/// Limit of the virial margin as `r → ∞`, from the decay exponents of the
/// model (`±∞` when the perturbation outgrows the repulsion).
pub fn virial_tail_limit(m: &PotentialModel, mu: f64) -> f64 {
    let base = if m.s < 1.0 { 1.0 - m.s } else { 1.0 };
    if m.is_zero() {
        return base - mu;
    }
    match m.family {
        PotentialFamily::Zero | PotentialFamily::PowerDecay | PotentialFamily::LogDecay => base - mu,
        // q = κ(1 + r²): for s = 1 the log terms cancel to −2κ, for s < 1 the
        // margin behaves like −2κ(2 − 2s) r^{2−2s}
        PotentialFamily::Quadratic => {
            if m.s == 1.0 {
                1.0 - 2.0 * m.kappa - mu
            } else {
                -m.kappa.signum() * f64::INFINITY
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowRegime {
    /// `s ∈ [1/2, 1)`, any `E < 0`.
    SubQuadraticUpper,
    /// `s ∈ (0, 1/2)`, any `E < 0`.
    SubQuadraticLower,
    /// `s = 1`, `E < −e²/2`.
    OscillatorDeep,
    /// `s = 1`, `E ∈ [−e²/2, −1/2)`.
    OscillatorShallow,
    /// Supplied by hand.
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirialWindow {
    pub regime: WindowRegime,
    pub s: f64,
    pub energy: f64,
    pub mu: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// `χ = 1` on `[0, r_inner]`.
    pub r_inner: f64,
    /// `χ̃ = 1` on `[r_outer, ∞)`.
    pub r_outer: f64,
    /// Distortion scale with `χ_R(r^{2s}) = 1` for `r ≥ r_inner`.
    pub radius: f64,
}

impl VirialWindow {
    /// The window's target point `z = E − iβμ`.
    pub fn target(&self, beta: f64) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.energy, -beta * self.mu)
    }

    /// `min{α, βγ}`, the leading coercivity scale.
    pub fn coercivity_scale(&self, beta: f64) -> f64 {
        self.alpha.min(beta * self.gamma)
    }
}

/// Largest `R` with `χ_R(r^{2s}) = 1` for all `r ≥ r_inner`.
pub fn radius_for_inner(r_inner: f64, s: f64) -> f64 {
    r_inner * 2f64.powf(-1.0 / (2.0 * s)) * (1.0 - 1e-12)
}

fn rejected(msg: impl Into<String>) -> Error {
    Error::Rejected(msg.into())
}

/// `r` with `r^{2s} = level`.
fn radius_at(level: f64, s: f64) -> f64 {
    level.powf(1.0 / (2.0 * s))
}

/// Largest admissible `μ` for the free operator at `(s, E)`.
pub fn mu_cap(s: f64, energy: f64) -> f64 {
    if s < 0.5 {
        s
    } else if s < 1.0 {
        1.0 - s
    } else if energy < -0.5 * EULER * EULER {
        1.0
    } else {
        0.5 * (-2.0 * energy).ln()
    }
}

fn check_regime(s: f64, energy: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(argument(format!("s must lie in (0, 1], got {s}")));
    }
    if !energy.is_finite() {
        return Err(argument("energy must be finite"));
    }
    if s < 1.0 && energy >= 0.0 {
        return Err(rejected(format!("s = {s} < 1 needs E < 0, got E = {energy}")));
    }
    if s == 1.0 && energy >= -0.5 {
        return Err(rejected(format!("s = 1 needs E < -1/2, got E = {energy}")));
    }
    Ok(())
}

/// Window for `q = 0` with mid-interval choices of `μ`, `α`, `γ`.
pub fn free_case_window(s: f64, energy: f64) -> Result<VirialWindow> {
    check_regime(s, energy)?;
    free_case_window_with_mu(s, energy, 0.5 * mu_cap(s, energy))
}

/// Window for `q = 0` with a prescribed `μ`.
pub fn free_case_window_with_mu(s: f64, energy: f64, mu: f64) -> Result<VirialWindow> {
    check_regime(s, energy)?;
    let cap = mu_cap(s, energy);
    if !(mu > 0.0 && mu < cap) {
        return Err(rejected(format!("mu = {mu} is outside (0, {cap}) for s = {s}, E = {energy}")));
    }
    let window = if s < 0.5 {
        sub_half_window(s, energy, mu)
    } else if s < 1.0 {
        upper_window(s, energy, mu)
    } else if energy < -0.5 * EULER * EULER {
        oscillator_deep_window(energy, mu)
    } else {
        oscillator_shallow_window(energy, mu)?
    };
    Ok(window)
}

fn upper_window(s: f64, energy: f64, mu: f64) -> VirialWindow {
    let alpha = -0.5 * energy;
    let gamma = 0.5 * (1.0 - s - mu);
    // χ switches off where the margin drops from (α − E)/2 to α
    let r_inner = radius_at(2.0 * (-energy - 0.5 * (alpha - energy)), s);
    let r_outer = radius_at(2.0 * (-energy - alpha), s);
    VirialWindow {
        regime: WindowRegime::SubQuadraticUpper,
        s,
        energy,
        mu,
        alpha,
        gamma,
        r_inner,
        r_outer,
        radius: radius_for_inner(r_inner, s),
    }
}

fn sub_half_window(s: f64, energy: f64, mu: f64) -> VirialWindow {
    let k = (1.0 - 2.0 * s) / (1.0 - s - mu);
    let alpha = -0.5 * (1.0 - k) * energy;
    let c_low = k * energy / (energy + alpha);
    let c = 0.5 * (c_low + 1.0);
    let gamma = 0.5 * (1.0 - s - (1.0 - 2.0 * s) * energy / (c * (energy + alpha)) - mu);
    let r_inner = radius_at(2.0 * c * (-energy - alpha), s);
    let r_outer = radius_at(2.0 * (-energy - alpha), s);
    VirialWindow {
        regime: WindowRegime::SubQuadraticLower,
        s,
        energy,
        mu,
        alpha,
        gamma,
        r_inner,
        r_outer,
        radius: radius_for_inner(r_inner, s),
    }
}

fn oscillator_radii(energy: f64, alpha: f64) -> (f64, f64) {
    ((2.0 * (-energy - 2.0 * alpha)).sqrt(), (2.0 * (-energy - alpha)).sqrt())
}

fn oscillator_deep_window(energy: f64, mu: f64) -> VirialWindow {
    let alpha = -(2.0 * energy + EULER * EULER) / 8.0;
    let (r_inner, r_outer) = oscillator_radii(energy, alpha);
    VirialWindow {
        regime: WindowRegime::OscillatorDeep,
        s: 1.0,
        energy,
        mu,
        alpha,
        gamma: 0.5 * (1.0 - mu),
        r_inner,
        r_outer,
        radius: radius_for_inner(r_inner, 1.0),
    }
}

/// Lower bound for the `s = 1` virial margin on `{r² ≥ 2(−E − 2α)}` when
/// `E ∈ [−e²/2, −1/2)`.
pub fn oscillator_margin_lower_bound(energy: f64, mu: f64, alpha: f64) -> f64 {
    let e2a = energy + 2.0 * alpha;
    let l = (-2.0 * energy).ln();
    0.5 * l - mu + 2.0 * alpha / e2a + energy / (2.0 * e2a) * (e2a / energy).ln() - alpha / e2a * l
}

fn oscillator_shallow_window(energy: f64, mu: f64) -> Result<VirialWindow> {
    let target = 0.5 * (0.5 * (-2.0 * energy).ln() - mu);
    // also aim for r_inner ≥ √e, which is reachable only when E < −e/2
    let wants_sqrt_e = energy < -0.5 * EULER;
    let mut alpha = -(2.0 * energy + 1.0) / 8.0;
    for _ in 0..200 {
        let (r_inner, _) = oscillator_radii(energy, alpha);
        let bound_ok = oscillator_margin_lower_bound(energy, mu, alpha) >= target;
        let support_ok = !wants_sqrt_e || r_inner * r_inner >= EULER;
        if bound_ok && support_ok {
            let (r_inner, r_outer) = oscillator_radii(energy, alpha);
            let f_inner = -2.0 * energy * (r_inner.ln() - 1.0) / (r_inner * r_inner);
            return Ok(VirialWindow {
                regime: WindowRegime::OscillatorShallow,
                s: 1.0,
                energy,
                mu,
                alpha,
                gamma: 0.5 * (1.0 - mu + f_inner.min(0.0)),
                r_inner,
                r_outer,
                radius: radius_for_inner(r_inner, 1.0),
            });
        }
        alpha *= 0.5;
    }
    Err(Error::Convergence { iterations: 200, residual: alpha })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub chi: Vec<f64>,
    pub chi_tilde: Vec<f64>,
    pub dchi: Vec<f64>,
}

/// `χ` falls from 1 at `r_inner` to 0 at `r_outer` along the smooth switch;
/// `χ̃ = √(1 − χ²)`.
pub fn partition_at(window: &VirialWindow, r: f64) -> (f64, f64, f64) {
    let rise = ramp(r, window.r_inner, window.r_outer);
    let chi = 1.0 - rise[0];
    let chi_tilde = (1.0 - chi * chi).max(0.0).sqrt();
    (chi, chi_tilde, -rise[1])
}

pub fn build_partition(window: &VirialWindow, grid: &[f64]) -> Result<Partition> {
    if !(window.r_inner < window.r_outer) {
        return Err(argument(format!(
            "degenerate window: r_inner = {} is not below r_outer = {}",
            window.r_inner, window.r_outer
        )));
    }
    let mut out = Partition { chi: Vec::new(), chi_tilde: Vec::new(), dchi: Vec::new() };
    for &r in grid {
        let (c, ct, dc) = partition_at(window, r);
        out.chi.push(c);
        out.chi_tilde.push(ct);
        out.dchi.push(dc);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub pass: bool,
    pub parameters_positive: bool,
    /// χ = 1 near 0, χ² + χ̃² = 1, and for `s = 1` supp χ̃ ⊂ {r ≥ √e}.
    pub partition_ok: bool,
    pub forbidden_ok: bool,
    pub min_forbidden_margin: f64,
    pub virial_ok: bool,
    pub min_virial_margin: f64,
    pub tail_limit: f64,
    pub tail_ok: bool,
    /// `χ_R = 1` on supp χ̃.
    pub cutoff_ok: bool,
    pub failures: Vec<String>,
}

/// Checks (i)–(iii) on `grid` (plus the window edges) and the tail limit.
pub fn validate_window(m: &PotentialModel, window: &VirialWindow, grid: &[f64]) -> Result<Certificate> {
    let mut failures = Vec::new();
    let w = window;
    let parameters_positive = w.mu > 0.0 && w.alpha > 0.0 && w.gamma > 0.0;
    if !parameters_positive {
        failures.push(format!("parameters must be positive: mu = {}, alpha = {}, gamma = {}", w.mu, w.alpha, w.gamma));
    }
    if (m.s - w.s).abs() > 0.0 {
        return Err(argument(format!("window s = {} differs from model s = {}", w.s, m.s)));
    }

    let mut points: Vec<f64> = grid.iter().copied().filter(|r| *r >= 0.0).collect();
    points.push(w.r_inner);
    points.push(w.r_outer);

    let mut partition_ok = w.r_inner > 0.0 && w.r_inner < w.r_outer;
    if !partition_ok {
        failures.push("chi must equal 1 near 0 and r_inner < r_outer".into());
    } else {
        let identity_err = points
            .iter()
            .map(|&r| partition_at(w, r))
            .map(|(c, ct, _)| (c * c + ct * ct - 1.0).abs())
            .fold(0.0, f64::max);
        if identity_err > 1e-15 {
            partition_ok = false;
            failures.push(format!("chi^2 + chi~^2 deviates from 1 by {identity_err:e}"));
        }
    }
    if w.s == 1.0 && w.r_inner * w.r_inner < EULER {
        partition_ok = false;
        failures.push(format!("(i) s = 1 needs supp chi~ in r >= sqrt(e), but r_inner = {}", w.r_inner));
    }

    let tol = 1e-12 * (1.0 + w.alpha.abs() + w.energy.abs());
    let mut min_forbidden = f64::INFINITY;
    let mut min_virial = f64::INFINITY;
    for &r in &points {
        if r <= w.r_outer {
            min_forbidden = min_forbidden.min(forbidden_margin(m, w.energy, r)?);
        }
        if r >= w.r_inner && r > 0.0 {
            min_virial = min_virial.min(virial_margin(m, w.energy, w.mu, r)?);
        }
    }
    let forbidden_ok = min_forbidden >= w.alpha - tol;
    if !forbidden_ok {
        failures.push(format!("(ii) forbidden margin {min_forbidden} < alpha = {}", w.alpha));
    }
    let virial_ok = min_virial >= w.gamma - 1e-12;
    if !virial_ok {
        failures.push(format!("(iii) virial margin {min_virial} < gamma = {}", w.gamma));
    }
    let tail_limit = virial_tail_limit(m, w.mu);
    let tail_ok = tail_limit > w.gamma;
    if !tail_ok {
        failures.push(format!("(iii) tail limit {tail_limit} does not exceed gamma = {}", w.gamma));
    }

    let u_inner = w.r_inner.powf(2.0 * w.s);
    let cutoff_ok = w.radius > 0.0 && switch_derivatives(u_inner / w.radius.powf(2.0 * w.s))[0] == 1.0;
    if !cutoff_ok {
        failures.push(format!("chi_R is not identically 1 on supp chi~ for R = {}", w.radius));
    }

    let pass = parameters_positive && partition_ok && forbidden_ok && virial_ok && tail_ok && cutoff_ok;
    Ok(Certificate {
        pass,
        parameters_positive,
        partition_ok,
        forbidden_ok,
        min_forbidden_margin: min_forbidden,
        virial_ok,
        min_virial_margin: min_virial,
        tail_limit,
        tail_ok,
        cutoff_ok,
        failures,
    })
}

/// Default validation grid: dense near the window, log-spaced out to `10³ r_outer`.
pub fn validation_grid(window: &VirialWindow) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=2000).map(|i| window.r_outer * 1.5 * i as f64 / 2000.0).collect();
    g.extend(crate::potential::log_spaced(window.r_outer * 1.5, window.r_outer * 1e3, 2000));
    g
}
