//! Radial complex distortion `r ↦ r_θ`, its inverse for real `θ`, the
//! volume Jacobian `J` and every coefficient the distorted Laplacian needs.
//!
//! For `s < 1`
//!
//! ```text
//! r_θ = (r^{2s} + 2sθ χ_R(r^{2s}))^{1/(2s)}
//! ```
//!
//! and for `s = 1`
//!
//! ```text
//! r_θ = (r² + 2θ χ_R(r²) log r)^{1/2},
//! ```
//!
//! with `χ_R(t) = χ₁(t / R^{2s})`. Writing `A = r_θ / r` and
//! `B = 1 + 2sθχ_R'` (resp. `1 + θr⁻²χ_R + 2θ log r χ_R'`), both regimes
//! share `∂r_θ/∂r = A^{1−2s} B` and `J = A^{d−2s} B`.

use crate::error::{argument, domain, Error, Result};
use crate::jet::Jet;
use crate::switch::{switch_derivatives, switch_lipschitz};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub const MAX_INVERSION_ITERATIONS: usize = 200;
/// Plain recurrence steps before switching to Newton.
pub const RECURRENCE_STEPS: usize = 30;

pub(crate) fn is_quadratic(s: f64) -> bool {
    s == 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwitchKind {
    /// `exp(−1/x)`-based C^∞ switch.
    Exponential,
}

/// The scaled switch `χ_R(t) = χ₁(t / R^{2s})` together with the
/// Lipschitz constant of `χ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub kind: SwitchKind,
    pub radius: f64,
    pub s: f64,
    pub lipschitz: f64,
}

impl CutoffSpec {
    pub fn new(radius: f64, s: f64) -> Result<Self> {
        Self::with_lipschitz(radius, s, switch_lipschitz())
    }

    pub fn with_lipschitz(radius: f64, s: f64, lipschitz: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(argument(format!("cutoff radius must be positive, got {radius}")));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(argument(format!("exponent s must lie in (0, 1], got {s}")));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(argument(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        Ok(Self { kind: SwitchKind::Exponential, radius, s, lipschitz })
    }

    /// `R^{2s}`, the scale of the switch variable.
    pub fn scale(&self) -> f64 {
        self.radius.powf(2.0 * self.s)
    }

    /// `[χ_R, χ_R', χ_R'', χ_R''']` at `t`.
    pub fn derivatives(&self, t: f64) -> [f64; 4] {
        let scale = self.scale();
        let d = switch_derivatives(t / scale);
        [d[0], d[1] / scale, d[2] / (scale * scale), d[3] / (scale * scale * scale)]
    }

    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        if order > 3 {
            return Err(argument(format!("cutoff derivative order must be 0..=3, got {order}")));
        }
        Ok(self.derivatives(t)[order])
    }
}

/// Order-th derivative of `χ_R` at `t`.
pub fn cutoff_eval(spec: &CutoffSpec, t: f64, order: usize) -> Result<f64> {
    spec.eval(t, order)
}

/// Largest `|θ|` for which the real distortion is invertible.
///
/// For `s < 1` this is `(2s)⁻¹ R^{2s} L⁻¹`. For `s = 1` the map
/// `r ↦ r² + 2θχ_R(r²) log r` has derivative `2r·B(r; θ)`, so the radius is
/// found by bisection on the sampled positivity of `B` for `θ = ±ρ`.
pub fn admissible_theta_radius(spec: &CutoffSpec) -> f64 {
    if !is_quadratic(spec.s) {
        return spec.scale() / (2.0 * spec.s * spec.lipschitz);
    }
    let samples = quadratic_monotonicity_samples(spec);
    let increasing = |rho: f64| {
        samples.iter().all(|&(k_value, _)| 1.0 + rho * k_value > 0.0 && 1.0 - rho * k_value > 0.0)
    };
    let mut hi = 1.0;
    while increasing(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return hi;
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if increasing(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `(K(r), r)` on a log grid, with `B = 1 + θK`, `K = χ_R(r²)/r² + 2 log r χ_R'(r²)`.
fn quadratic_monotonicity_samples(spec: &CutoffSpec) -> Vec<(f64, f64)> {
    const N: usize = 20_000;
    let lo = (spec.radius * 0.999).ln();
    let hi = (spec.radius * 40.0).ln();
    (0..N)
        .map(|i| (lo + (hi - lo) * i as f64 / (N - 1) as f64).exp())
        .map(|r| {
            let c = spec.derivatives(r * r);
            (c[0] / (r * r) + 2.0 * r.ln() * c[1], r)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionParams {
    pub theta: Complex64,
    pub dim: usize,
    pub cutoff: CutoffSpec,
    /// `L_s`, the admissible real-θ radius.
    pub admissible_radius: f64,
}

impl DistortionParams {
    pub fn new(theta: Complex64, dim: usize, cutoff: CutoffSpec) -> Result<Self> {
        if dim < 2 {
            return Err(argument(format!("dimension must be at least 2, got {dim}")));
        }
        if !(theta.re.is_finite() && theta.im.is_finite()) {
            return Err(argument("theta must be finite"));
        }
        if is_quadratic(cutoff.s) && cutoff.radius < 1.0 {
            return Err(domain(format!(
                "s = 1 requires R >= 1 so that log r > 0 wherever the switch is active, got R = {}",
                cutoff.radius
            )));
        }
        Ok(Self { theta, dim, cutoff, admissible_radius: admissible_theta_radius(&cutoff) })
    }

    /// `θ = iβ`.
    pub fn imaginary(beta: f64, dim: usize, cutoff: CutoffSpec) -> Result<Self> {
        Self::new(Complex64::new(0.0, beta), dim, cutoff)
    }

    pub fn with_theta(&self, theta: Complex64) -> Self {
        Self { theta, ..*self }
    }

    pub fn s(&self) -> f64 {
        self.cutoff.s
    }

    pub fn is_quadratic(&self) -> bool {
        is_quadratic(self.cutoff.s)
    }

    /// Contraction factor of the inversion recurrence for real θ:
    /// `2s|θ|R^{-2s}L` for `s < 1`, `|θ| / L₁` for `s = 1`.
    pub fn contraction_factor(&self) -> f64 {
        let theta = self.theta.norm();
        if self.is_quadratic() {
            theta / self.admissible_radius
        } else {
            2.0 * self.s() * theta * self.cutoff.lipschitz / self.cutoff.scale()
        }
    }

    /// Switch derivatives in the natural variable `u = r^{2s}`.
    fn switch_at(&self, r: f64) -> (f64, [f64; 4]) {
        let u = if self.is_quadratic() { r * r } else { r.powf(2.0 * self.s()) };
        (u, self.cutoff.derivatives(u))
    }

    /// True where the distortion is the identity to all orders.
    fn is_local_identity(&self, chi: &[f64; 4]) -> bool {
        self.theta == ZERO || chi.iter().all(|&c| c == 0.0)
    }
}

/// Everything known about the distortion at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistortionPoint {
    pub r: f64,
    /// `r_θ^{2s}` (the radicand, principal branch reference).
    pub radicand: Complex64,
    /// `log(r_θ / r)` on the branch continuous from θ = 0.
    pub log_ratio: Complex64,
    pub r_theta: Complex64,
    pub dr: Complex64,
    pub d2r: Complex64,
    pub jacobian: Complex64,
    pub djacobian: Complex64,
    pub d2jacobian: Complex64,
}

impl DistortionPoint {
    fn identity(r: f64, radicand: f64) -> Self {
        Self {
            r,
            radicand: Complex64::new(radicand, 0.0),
            log_ratio: ZERO,
            r_theta: Complex64::new(r, 0.0),
            dr: ONE,
            d2r: ZERO,
            jacobian: ONE,
            djacobian: ZERO,
            d2jacobian: ZERO,
        }
    }

    /// `(r_θ / r)^q`.
    pub fn ratio_pow(&self, q: f64) -> Complex64 {
        if self.log_ratio == ZERO {
            return ONE;
        }
        (self.log_ratio * q).exp()
    }

    /// The zeroth-order coefficient `φ(r)` of the expanded distorted Laplacian.
    pub fn phi(&self, dim: usize) -> Complex64 {
        let j_inv = ONE / self.jacobian;
        let dj = self.djacobian;
        let d_minus_1 = (dim - 1) as f64;
        -0.75 * j_inv * j_inv * dj * dj + 0.5 * j_inv * self.d2jacobian
            - 0.5 * j_inv / self.dr * self.d2r * dj
            + 0.5 * d_minus_1 * j_inv * self.dr / self.ratio_pow(1.0) / self.r * dj
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(argument(format!("radius must be positive and finite, got {r}")));
    }
    Ok(())
}

fn check_branch(radicand: Complex64) -> Result<()> {
    if radicand.arg().abs() >= std::f64::consts::FRAC_PI_2 || radicand.norm() == 0.0 {
        return Err(domain(format!(
            "radicand {radicand} leaves the principal sector |arg| < pi/2"
        )));
    }
    Ok(())
}

/// Closed-form evaluation of the distortion and its derivative coefficients.
pub fn evaluate(p: &DistortionParams, r: f64) -> Result<DistortionPoint> {
    check_radius(r)?;
    let (u, chi) = p.switch_at(r);
    if p.is_local_identity(&chi) {
        return Ok(DistortionPoint::identity(r, u));
    }
    let theta = p.theta;
    let s = p.s();
    let two_s = 2.0 * s;
    let dim = p.dim as f64;

    // B, B', B'' and the radicand, per regime
    let (radicand, b, db, d2b) = if p.is_quadratic() {
        let lr = r.ln();
        let radicand = u + 2.0 * theta * chi[0] * lr;
        let b = ONE + theta * (chi[0] / (r * r) + 2.0 * lr * chi[1]);
        let db = theta * (-2.0 * chi[0] / r.powi(3) + 4.0 * chi[1] / r + 4.0 * r * lr * chi[2]);
        let d2b = theta
            * (6.0 * chi[0] / r.powi(4) - 8.0 * chi[1] / (r * r)
                + 12.0 * chi[2]
                + 4.0 * lr * chi[2]
                + 8.0 * r * r * lr * chi[3]);
        (radicand, b, db, d2b)
    } else {
        let du = two_s * r.powf(two_s - 1.0);
        let d2u = two_s * (two_s - 1.0) * r.powf(two_s - 2.0);
        let radicand = u + two_s * theta * chi[0];
        let b = ONE + two_s * theta * chi[1];
        let db = two_s * theta * chi[2] * du;
        let d2b = two_s * theta * (chi[3] * du * du + chi[2] * d2u);
        (radicand, b, db, d2b)
    };
    check_branch(radicand)?;

    let log_ratio = radicand.ln() / two_s - r.ln();
    let pow = |q: f64| (log_ratio * q).exp();
    let a = pow(1.0);
    let r_theta = a * r;

    // A' = ∂_r (r_θ / r)
    let da = if p.is_quadratic() {
        let lr = r.ln();
        theta / a * (2.0 * chi[1] * lr / r + chi[0] * (1.0 - 2.0 * lr) / r.powi(3))
    } else {
        two_s * theta * pow(1.0 - two_s) * (chi[1] - chi[0] / u) / r
    };

    let dr = pow(1.0 - two_s) * b;
    let d2r = (1.0 - two_s) * pow(-two_s) * da * b + pow(1.0 - two_s) * db;
    let d2a = d2r / r - 2.0 * dr / (r * r) + 2.0 * r_theta / r.powi(3);

    let m = dim - two_s;
    let jacobian = pow(m) * b;
    let djacobian = m * pow(m - 1.0) * da * b + pow(m) * db;
    let d2jacobian = m * (m - 1.0) * pow(m - 2.0) * da * da * b
        + m * pow(m - 1.0) * d2a * b
        + 2.0 * m * pow(m - 1.0) * da * db
        + pow(m) * d2b;

    Ok(DistortionPoint {
        r,
        radicand,
        log_ratio,
        r_theta,
        dr,
        d2r,
        jacobian,
        djacobian,
        d2jacobian,
    })
}

/// `(r_θ, ∂r_θ/∂r, ∂²r_θ/∂r²)`.
pub fn r_theta_eval(p: &DistortionParams, r: f64) -> Result<(Complex64, Complex64, Complex64)> {
    let pt = evaluate(p, r)?;
    Ok((pt.r_theta, pt.dr, pt.d2r))
}

/// `(J, ∂_r J, ∂²_r J)`.
pub fn jacobian_eval(p: &DistortionParams, r: f64) -> Result<(Complex64, Complex64, Complex64)> {
    let pt = evaluate(p, r)?;
    Ok((pt.jacobian, pt.djacobian, pt.d2jacobian))
}

pub fn phi_coeff(p: &DistortionParams, r: f64) -> Result<Complex64> {
    Ok(evaluate(p, r)?.phi(p.dim))
}

/// Order-3 Taylor jet of `r ↦ r_θ` at `r`, propagated directly from the
/// defining formula with no hand-derived derivatives.
///
/// Returns `None` where the distortion is locally the identity.
pub fn r_theta_jet(p: &DistortionParams, r: f64) -> Result<Option<Jet>> {
    check_radius(r)?;
    let (_, chi) = p.switch_at(r);
    if p.is_local_identity(&chi) {
        return Ok(None);
    }
    let x = Jet::variable(r);
    let s = p.s();
    let radicand = if p.is_quadratic() {
        let u = x * x;
        let chi_u = u.compose(chi.map(|c| Complex64::new(c, 0.0)));
        u + chi_u * x.ln() * (2.0 * p.theta)
    } else {
        let u = x.powf(2.0 * s);
        let chi_u = u.compose(chi.map(|c| Complex64::new(c, 0.0)));
        u + chi_u * (2.0 * s * p.theta)
    };
    check_branch(radicand.value())?;
    Ok(Some((radicand.ln() * Complex64::new(1.0 / (2.0 * s), 0.0)).exp()))
}

/// Result of the fixed-point inversion of the real distortion.
#[derive(Clone, Debug, PartialEq)]
pub struct Inversion {
    pub r: f64,
    pub iterations: usize,
    /// `|r_n^{2s} − r_{n−1}^{2s}|` for each plain recurrence step.
    pub gaps: Vec<f64>,
}

/// Default stopping tolerance `1e−14 (1 + r̃^{2s})`.
pub fn default_inversion_tol(p: &DistortionParams, r_tilde: f64) -> f64 {
    1e-14 * (1.0 + r_tilde.powf(2.0 * p.s()))
}

/// Solves `r̃^{2s} = r^{2s} + 2sθχ_R(r^{2s})` (or the `s = 1` analogue) for
/// real θ by the recurrence `r_n^{2s} = r̃^{2s} − 2sθχ_R(r_{n−1}^{2s})`,
/// `r₀ = r̃`.
pub fn invert_r_theta(p: &DistortionParams, r_tilde: f64, tol: Option<f64>) -> Result<Inversion> {
    if p.theta.im != 0.0 {
        return Err(argument("inversion is only defined for real theta"));
    }
    if !(r_tilde >= 0.0 && r_tilde.is_finite()) {
        return Err(argument(format!("r~ must be non-negative, got {r_tilde}")));
    }
    let theta = p.theta.re;
    if theta.abs() >= p.admissible_radius {
        return Err(Error::ContractionViolation { theta: theta.abs(), limit: p.admissible_radius });
    }
    let tol = tol.unwrap_or_else(|| default_inversion_tol(p, r_tilde));
    if !(tol > 0.0) {
        return Err(argument(format!("tolerance must be positive, got {tol}")));
    }
    if theta == 0.0 || r_tilde == 0.0 {
        return Ok(Inversion { r: r_tilde, iterations: 1, gaps: vec![0.0] });
    }

    let s = p.s();
    let quadratic = p.is_quadratic();
    // u = r^{2s}; shift(u) is the distortion term added to u
    let shift = |u: f64| -> f64 {
        let chi = p.cutoff.derivatives(u)[0];
        if quadratic {
            if chi == 0.0 {
                0.0
            } else {
                theta * chi * u.ln()
            }
        } else {
            2.0 * s * theta * chi
        }
    };
    let slope = |u: f64| -> f64 {
        let d = p.cutoff.derivatives(u);
        if quadratic {
            if d[0] == 0.0 && d[1] == 0.0 {
                0.0
            } else {
                theta * (d[1] * u.ln() + d[0] / u)
            }
        } else {
            2.0 * s * theta * d[1]
        }
    };
    let target = if quadratic { r_tilde * r_tilde } else { r_tilde.powf(2.0 * s) };
    let mut u = target;
    let mut gaps = Vec::new();
    for n in 1..=MAX_INVERSION_ITERATIONS {
        // plain recurrence first, then Newton on u + shift(u) = target, whose
        // slope stays above 1 − contraction factor
        let next = if n <= RECURRENCE_STEPS {
            target - shift(u)
        } else {
            u - (u + shift(u) - target) / (1.0 + slope(u))
        };
        if next <= 0.0 {
            return Err(domain(format!("inversion left the half-line at step {n}")));
        }
        if n <= RECURRENCE_STEPS {
            gaps.push((next - u).abs());
        }
        u = next;
        let residual = (target - u - shift(u)).abs();
        if residual <= tol {
            let r = if quadratic { u.sqrt() } else { u.powf(1.0 / (2.0 * s)) };
            return Ok(Inversion { r, iterations: n, gaps });
        }
    }
    let residual = (target - u - shift(u)).abs();
    Err(Error::Convergence { iterations: MAX_INVERSION_ITERATIONS, residual })
}

/// Forward real map, used for roundtrip checks.
pub fn forward_real(p: &DistortionParams, r: f64) -> Result<f64> {
    if p.theta.im != 0.0 {
        return Err(argument("forward_real needs a real theta"));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    Ok(evaluate(p, r)?.r_theta.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(s: f64, radius: f64, dim: usize, theta: Complex64) -> DistortionParams {
        DistortionParams::new(theta, dim, CutoffSpec::new(radius, s).unwrap()).unwrap()
    }

    fn real(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn cutoff_examples() {
        let spec = CutoffSpec::new(1.0, 0.5).unwrap();
        assert_eq!(cutoff_eval(&spec, 0.5, 0).unwrap(), 0.0);
        assert_eq!(cutoff_eval(&spec, 3.0, 1).unwrap(), 0.0);
        let mid = cutoff_eval(&spec, 1.5, 0).unwrap();
        assert!(mid > 0.0 && mid < 1.0);
        assert_eq!(mid, switch_derivatives(1.5)[0]);
        // regression constant of the exponential switch at its midpoint
        assert!((mid - 0.5).abs() < 1e-15);
        assert!(matches!(cutoff_eval(&spec, 1.5, 4), Err(Error::Argument(_))));
    }

    #[test]
    fn cutoff_chain_rule_factor() {
        let spec = CutoffSpec::new(2.0, 0.5).unwrap(); // R^{2s} = 2
        let d = spec.derivatives(3.0);
        let base = switch_derivatives(1.5);
        assert!((d[1] - base[1] / 2.0).abs() < 1e-15);
        assert!((d[3] - base[3] / 8.0).abs() < 1e-12);
    }

    #[test]
    fn saturated_region_is_a_shift_for_half() {
        let p = params(0.5, 1.0, 3, real(0.2));
        let (rt, dr, d2r) = r_theta_eval(&p, 3.0).unwrap();
        assert!((rt - real(3.2)).norm() < 1e-14);
        assert!((dr - ONE).norm() < 1e-14);
        assert!(d2r.norm() < 1e-14);
        let (j, _, _) = jacobian_eval(&p, 3.0).unwrap();
        let expect = (3.2f64 / 3.0).powi(2);
        assert!((j - real(expect)).norm() < 1e-13);
    }

    #[test]
    fn identity_at_zero_theta() {
        for &s in &[0.25, 0.5, 1.0] {
            let p = params(s, 1.0, 3, ZERO);
            let pt = evaluate(&p, 1.7).unwrap();
            assert_eq!(pt.r_theta, real(1.7));
            assert_eq!(pt.dr, ONE);
            assert_eq!(pt.jacobian, ONE);
            assert_eq!(pt.djacobian, ZERO);
            assert_eq!(pt.d2jacobian, ZERO);
            assert_eq!(pt.phi(3), ZERO);
        }
    }

    #[test]
    fn quadratic_value_at_e() {
        let p = params(1.0, 1.0, 3, real(0.5));
        let e = std::f64::consts::E;
        let (rt, _, _) = r_theta_eval(&p, e).unwrap();
        assert!((rt.re - (e * e + 1.0).sqrt()).abs() < 1e-14, "{rt}");
        assert!((rt.re - 2.896_387).abs() < 5e-7);
        assert_eq!(rt.im, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params(0.5, 1.0, 3, real(0.1));
        assert!(matches!(evaluate(&p, 0.0), Err(Error::Argument(_))));
        assert!(matches!(evaluate(&p, -1.0), Err(Error::Argument(_))));
        let spec = CutoffSpec::new(0.5, 1.0).unwrap();
        assert!(matches!(DistortionParams::new(ZERO, 3, spec), Err(Error::Domain(_))));
        // a negative real shift big enough to push the radicand through zero
        let spec = CutoffSpec::with_lipschitz(1.0, 0.5, 2.0).unwrap();
        let p = DistortionParams::new(real(-5.0), 3, spec).unwrap();
        assert!(matches!(evaluate(&p, 3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn admissible_radius_formula() {
        let a = CutoffSpec::with_lipschitz(1.0, 0.5, 2.0).unwrap();
        assert!((admissible_theta_radius(&a) - 0.5).abs() < 1e-15);
        let b = CutoffSpec::with_lipschitz(2.0, 0.5, 2.0).unwrap();
        assert!((admissible_theta_radius(&b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn admissible_radius_quadratic_matches_peak_slope() {
        // monotone iff 1 ± ρK(r) > 0 with K ≥ 0, so ρ* = 1 / max K
        for &radius in &[1.0, 2.0, 4.0] {
            let spec = CutoffSpec::new(radius, 1.0).unwrap();
            let k_max = (0..400_000)
                .map(|i| radius * (1.0 + 0.5 * i as f64 / 400_000.0))
                .map(|r| {
                    let t = r * r / (radius * radius);
                    let c = switch_derivatives(t);
                    c[0] / (r * r) + 2.0 * r.ln() * c[1] / (radius * radius)
                })
                .fold(0.0, f64::max);
            let l = admissible_theta_radius(&spec);
            assert!((l * k_max - 1.0).abs() < 1e-3, "R = {radius}: {l} vs {}", 1.0 / k_max);
        }
    }

    #[test]
    fn admissible_radius_quadratic_grows_with_r() {
        let l: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&radius| admissible_theta_radius(&CutoffSpec::new(radius, 1.0).unwrap()))
            .collect();
        assert!(l[0] > 0.0);
        assert!(l[1] > l[0]);
        // the log factor in K slows growth below R = 2; doubling holds beyond it
        assert!(l[2] >= 2.0 * l[1], "{l:?}");
        assert!(l[3] >= 2.0 * l[2], "{l:?}");
    }

    #[test]
    fn inversion_examples() {
        let p = params(0.5, 1.0, 3, real(0.3));
        let inv = invert_r_theta(&p, 5.0, None).unwrap();
        assert!((inv.r - 4.7).abs() < 1e-14);

        let p0 = params(0.5, 1.0, 3, ZERO);
        let inv = invert_r_theta(&p0, 1.3, None).unwrap();
        assert_eq!(inv.r, 1.3);
        assert_eq!(inv.iterations, 1);

        let spec = CutoffSpec::with_lipschitz(1.0, 0.5, 2.0).unwrap();
        let p = DistortionParams::new(real(0.5), 3, spec).unwrap();
        assert!(matches!(invert_r_theta(&p, 1.0, None), Err(Error::ContractionViolation { .. })));
        let p = DistortionParams::new(Complex64::new(0.0, 0.1), 3, spec).unwrap();
        assert!(matches!(invert_r_theta(&p, 1.0, None), Err(Error::Argument(_))));
    }

    #[test]
    fn inversion_contracts_geometrically() {
        let p = params(0.5, 1.0, 3, real(0.3));
        let inv = invert_r_theta(&p, 1.6, Some(1e-14)).unwrap();
        let back = forward_real(&p, inv.r).unwrap();
        assert!((back - 1.6).abs() < 1e-13);
        let factor = p.contraction_factor();
        assert!(factor < 1.0);
        for w in inv.gaps.windows(2) {
            if w[0] > 1e-15 {
                assert!(w[1] <= factor * w[0] * (1.0 + 1e-9) + 1e-16, "{} > {factor}·{}", w[1], w[0]);
            }
        }
    }

    #[test]
    fn jet_route_matches_closed_forms() {
        for &(s, theta) in &[(0.5, Complex64::new(0.0, 0.1)), (0.3, Complex64::new(0.05, 0.08)), (1.0, Complex64::new(0.0, 0.1))] {
            let p = params(s, 1.0, 3, theta);
            for &r in &[1.05, 1.2, 1.33, 1.6, 2.5] {
                let pt = evaluate(&p, r).unwrap();
                let jet = r_theta_jet(&p, r).unwrap().unwrap();
                assert!((jet.derivative(0) - pt.r_theta).norm() < 1e-13);
                assert!((jet.derivative(1) - pt.dr).norm() < 1e-12);
                assert!((jet.derivative(2) - pt.d2r).norm() < 1e-11);
            }
        }
    }
}
