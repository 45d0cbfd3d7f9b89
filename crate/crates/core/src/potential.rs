//! Radial perturbations `q(r)` and their values at distorted radii.
//!
//! All families are written in terms of `w = 1 + z²`, so that
//! `⟨z⟩ = w^{1/2}` continues analytically to complex `z` near the real axis.

use crate::distortion::{evaluate, DistortionParams};
use crate::error::{argument, domain, Result};
use crate::jet::Jet;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialFamily {
    Zero,
    /// `κ⟨r⟩^{2s−ρ}`, for `s < 1`.
    PowerDecay,
    /// `κ(log⟨r⟩ + 1)^{−1−ρ}⟨r⟩²`, for `s = 1`.
    LogDecay,
    /// `κ⟨r⟩²`. Not long-range admissible; used as a confining test potential.
    Quadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialModel {
    pub family: PotentialFamily,
    pub kappa: f64,
    pub rho: f64,
    pub s: f64,
    pub beta0: f64,
}

impl PotentialModel {
    pub fn zero(s: f64) -> Self {
        Self { family: PotentialFamily::Zero, kappa: 0.0, rho: 0.5, s, beta0: 1.0 }
    }

    pub fn power_decay(kappa: f64, s: f64, rho: f64, beta0: f64) -> Result<Self> {
        Self { family: PotentialFamily::PowerDecay, kappa, rho, s, beta0 }.validated()
    }

    pub fn log_decay(kappa: f64, rho: f64, beta0: f64) -> Result<Self> {
        Self { family: PotentialFamily::LogDecay, kappa, rho, s: 1.0, beta0 }.validated()
    }

    pub fn quadratic(kappa: f64, s: f64) -> Result<Self> {
        Self { family: PotentialFamily::Quadratic, kappa, rho: 0.5, s, beta0: 1.0 }.validated()
    }

    /// Checks parameter ranges; used after deserializing.
    pub fn validated(self) -> Result<Self> {
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(argument(format!("s must lie in (0, 1], got {}", self.s)));
        }
        if !self.kappa.is_finite() {
            return Err(argument("kappa must be finite"));
        }
        if !(self.beta0 > 0.0) {
            return Err(argument(format!("beta0 must be positive, got {}", self.beta0)));
        }
        match self.family {
            PotentialFamily::PowerDecay | PotentialFamily::LogDecay
                if !(self.rho > 0.0 && self.rho < 1.0) =>
            {
                return Err(argument(format!("rho must lie in (0, 1), got {}", self.rho)));
            }
            PotentialFamily::PowerDecay if self.s >= 1.0 => {
                return Err(argument("the power-decay family needs s < 1"));
            }
            PotentialFamily::LogDecay if self.s != 1.0 => {
                return Err(argument("the log-decay family needs s = 1"));
            }
            _ => {}
        }
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        self.family == PotentialFamily::Zero || self.kappa == 0.0
    }

    /// `q` applied to a jet in the radial variable.
    fn jet(&self, z: Jet) -> Result<Jet> {
        if self.is_zero() {
            return Ok(Jet::real_constant(0.0).truncate(z.order()));
        }
        let w = z * z + Complex64::new(1.0, 0.0);
        let wv = w.value();
        if !(wv.re > 0.0) {
            return Err(domain(format!("1 + z² = {wv} crosses the branch cut of ⟨z⟩")));
        }
        let kappa = Complex64::new(self.kappa, 0.0);
        let out = match self.family {
            PotentialFamily::Zero => unreachable!(),
            PotentialFamily::PowerDecay => w.powf(0.5 * (2.0 * self.s - self.rho)) * kappa,
            PotentialFamily::LogDecay => {
                let l = w.ln() * 0.5 + Complex64::new(1.0, 0.0);
                if !(l.value().re > 0.0) {
                    return Err(domain("log⟨z⟩ + 1 leaves the right half-plane"));
                }
                l.powf(-1.0 - self.rho) * w * kappa
            }
            PotentialFamily::Quadratic => w * kappa,
        };
        Ok(out)
    }
}

/// `∂_r^order q(r)`.
pub fn q_eval(m: &PotentialModel, r: f64, order: usize) -> Result<f64> {
    if order > 3 {
        return Err(argument(format!("derivative order must be 0..=3, got {order}")));
    }
    if !(r >= 0.0) {
        return Err(argument(format!("radius must be non-negative, got {r}")));
    }
    Ok(m.jet(Jet::variable(r))?.derivative(order).re)
}

/// `q` at a complex radius, principal branches.
pub fn q_complex(m: &PotentialModel, z: Complex64) -> Result<Complex64> {
    Ok(m.jet(Jet::constant(z))?.value())
}

/// `q_θ(r) = q(r_θ)`.
pub fn q_theta_eval(m: &PotentialModel, p: &DistortionParams, r: f64) -> Result<Complex64> {
    if p.theta.im.abs() >= m.beta0 {
        return Err(domain(format!(
            "|Im theta| = {} is outside the declared analyticity width {}",
            p.theta.im.abs(),
            m.beta0
        )));
    }
    if m.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let z = evaluate(p, r)?.r_theta;
    q_complex(m, z)
}

/// `(q(r), c₁)` with `q_θ = q + c₁θ + O(θ²)`.
pub fn q_theta_taylor(m: &PotentialModel, p: &DistortionParams, r: f64) -> Result<(f64, f64)> {
    let q0 = q_eval(m, r, 0)?;
    let dq = q_eval(m, r, 1)?;
    let s = p.s();
    let first = if p.is_quadratic() {
        let chi = p.cutoff.derivatives(r * r)[0];
        if chi == 0.0 {
            0.0
        } else {
            r.ln() / r * chi * dq
        }
    } else {
        let chi = p.cutoff.derivatives(r.powf(2.0 * s))[0];
        if chi == 0.0 {
            0.0
        } else {
            r.powf(1.0 - 2.0 * s) * chi * dq
        }
    };
    Ok((q0, first))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongRangeReport {
    /// Best constant `C_k` on the supplied grid, `k = 0..=k_max`.
    pub constants: Vec<f64>,
    /// Same constants on the grid with midpoints inserted.
    pub refined: Vec<f64>,
    pub per_order_pass: Vec<bool>,
    pub pass: bool,
}

/// Envelope of `|∂_r^k q|` required by the long-range condition.
fn envelope(m: &PotentialModel, r: f64, k: usize) -> f64 {
    let bracket = (1.0 + r * r).sqrt();
    if m.s < 1.0 {
        bracket.powf(2.0 * m.s - k as f64 - m.rho)
    } else {
        bracket.ln().powf(-1.0 - m.rho) * bracket.powf(2.0 - k as f64)
    }
}

fn best_constant(m: &PotentialModel, k: usize, grid: &[f64]) -> Result<f64> {
    let mut best: f64 = 0.0;
    for &r in grid {
        let ratio = q_eval(m, r, k)?.abs() / envelope(m, r, k);
        if ratio.is_nan() {
            continue;
        }
        best = best.max(ratio);
    }
    Ok(best)
}

/// Sup of `|∂_r^k q| / envelope` over `grid` for `k ≤ k_max`, with a
/// refinement check on the grid with midpoints inserted.
pub fn condition_long_range_check(m: &PotentialModel, k_max: usize, grid: &[f64]) -> Result<LongRangeReport> {
    if k_max > 3 {
        return Err(argument(format!("k_max must be at most 3, got {k_max}")));
    }
    if grid.is_empty() {
        return Err(argument("grid must not be empty"));
    }
    let mut fine = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        fine.push(w[0]);
        fine.push(0.5 * (w[0] + w[1]));
    }
    fine.push(grid[grid.len() - 1]);

    let mut constants = Vec::new();
    let mut refined = Vec::new();
    let mut per_order_pass = Vec::new();
    for k in 0..=k_max {
        let c = best_constant(m, k, grid)?;
        let f = best_constant(m, k, &fine)?;
        let stable = if c == 0.0 { f == 0.0 } else { f / c < 1.05 };
        per_order_pass.push(c.is_finite() && f.is_finite() && stable);
        constants.push(c);
        refined.push(f);
    }
    let pass = per_order_pass.iter().all(|&p| p);
    Ok(LongRangeReport { constants, refined, per_order_pass, pass })
}

/// `n` log-spaced points from `a` to `b`, both positive.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n.max(2) - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::CutoffSpec;

    fn power() -> PotentialModel {
        PotentialModel::power_decay(0.1, 0.5, 0.3, 0.5).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(q_eval(&PotentialModel::zero(0.5), 7.0, 0).unwrap(), 0.0);
        assert!((q_eval(&power(), 0.0, 0).unwrap() - 0.1).abs() < 1e-15);
        let h = 1e-4;
        let fd = (q_eval(&power(), 10.0 + h, 0).unwrap() - q_eval(&power(), 10.0 - h, 0).unwrap()) / (2.0 * h);
        assert!((fd - q_eval(&power(), 10.0, 1).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn closed_form_derivative_of_power_family() {
        // d/dr κ(1+r²)^{a} = 2aκ r (1+r²)^{a−1}
        let a = 0.5 * (1.0 - 0.3);
        let r = 2.5f64;
        let expect = 2.0 * a * 0.1 * r * (1.0 + r * r).powf(a - 1.0);
        assert!((q_eval(&power(), r, 1).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(PotentialModel::power_decay(0.1, 1.0, 0.3, 0.5).is_err());
        assert!(PotentialModel::power_decay(0.1, 0.5, 1.3, 0.5).is_err());
        assert!(PotentialModel::log_decay(0.1, 0.0, 0.5).is_err());
        assert!(q_eval(&power(), 1.0, 4).is_err());
    }

    #[test]
    fn long_range_examples() {
        let grid = log_spaced(1e-3, 1e4, 400);
        let z = condition_long_range_check(&PotentialModel::zero(0.5), 3, &grid).unwrap();
        assert!(z.pass);
        assert!(z.constants.iter().all(|&c| c == 0.0));
        let p = condition_long_range_check(&power(), 0, &grid).unwrap();
        assert!(p.pass);
        assert!((p.constants[0] - 0.1).abs() < 1e-14);
        let l = PotentialModel::log_decay(0.1, 0.2, 0.5).unwrap();
        let rep = condition_long_range_check(&l, 1, &grid).unwrap();
        assert!(rep.pass && rep.constants[1].is_finite() && rep.constants[1] > 0.0);
    }

    #[test]
    fn theta_zero_and_real_theta() {
        let spec = CutoffSpec::new(1.0, 0.5).unwrap();
        let p0 = DistortionParams::new(Complex64::new(0.0, 0.0), 3, spec).unwrap();
        let v = q_theta_eval(&power(), &p0, 2.3).unwrap();
        assert!((v.re - q_eval(&power(), 2.3, 0).unwrap()).abs() < 1e-15 && v.im == 0.0);
        let p = DistortionParams::new(Complex64::new(0.2, 0.0), 3, spec).unwrap();
        let r_theta = crate::distortion::forward_real(&p, 1.4).unwrap();
        let v = q_theta_eval(&power(), &p, 1.4).unwrap();
        assert!((v.re - q_eval(&power(), r_theta, 0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn taylor_examples() {
        let spec = CutoffSpec::new(1.0, 1.0).unwrap();
        let p = DistortionParams::new(Complex64::new(0.0, 0.1), 3, spec).unwrap();
        let l = PotentialModel::log_decay(0.1, 0.2, 0.5).unwrap();
        let (q0, first) = q_theta_taylor(&l, &p, 3.0).unwrap();
        assert_eq!(q0, q_eval(&l, 3.0, 0).unwrap());
        let expect = 3f64.ln() / 3.0 * q_eval(&l, 3.0, 1).unwrap();
        assert!((first - expect).abs() < 1e-15);

        let spec = CutoffSpec::new(2.0, 0.5).unwrap();
        let p = DistortionParams::new(Complex64::new(0.0, 0.1), 3, spec).unwrap();
        assert_eq!(q_theta_taylor(&power(), &p, 1.5).unwrap().1, 0.0);
        assert_eq!(q_theta_taylor(&PotentialModel::zero(0.5), &p, 5.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn analyticity_width_is_enforced() {
        let spec = CutoffSpec::new(1.0, 0.5).unwrap();
        let p = DistortionParams::new(Complex64::new(0.0, 0.6), 3, spec).unwrap();
        assert!(q_theta_eval(&power(), &p, 3.0).is_err());
    }
}
