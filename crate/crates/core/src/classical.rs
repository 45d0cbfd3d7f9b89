//! Classical counterpart: `h = ½|ξ|² − ½|x|^{2s} + q`, the escape function
//! `g`, its symbol `a = ∂g · ξ`, and the Poisson bracket `{h, a}`.

use crate::error::{argument, Result};
use crate::potential::{q_eval, PotentialModel};
use serde::{Deserialize, Serialize};

/// `r^{2−2s}/(2(1−s))` for `s < 1`, `(log r)²/2` for `s = 1`.
pub fn escape_g(s: f64, r: f64) -> Result<f64> {
    check(s, r)?;
    Ok(if s < 1.0 {
        r.powf(2.0 - 2.0 * s) / (2.0 * (1.0 - s))
    } else {
        0.5 * r.ln().powi(2)
    })
}

/// `(g', g'')`.
pub fn escape_g_derivatives(s: f64, r: f64) -> Result<(f64, f64)> {
    check(s, r)?;
    Ok(if s < 1.0 {
        (r.powf(1.0 - 2.0 * s), (1.0 - 2.0 * s) * r.powf(-2.0 * s))
    } else {
        let lr = r.ln();
        (lr / r, (1.0 - lr) / (r * r))
    })
}

fn check(s: f64, r: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(argument(format!("s must lie in (0, 1], got {s}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(argument(format!("escape function needs r > 0, got {r}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.len() != xi.len() || x.is_empty() {
            return Err(argument("x and xi must have the same positive length"));
        }
        if !x.iter().chain(&xi).all(|v| v.is_finite()) {
            return Err(argument("phase point components must be finite"));
        }
        Ok(Self { x, xi })
    }

    pub fn r(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Radial momentum `x·ξ / r`.
    pub fn xi_radial(&self) -> f64 {
        dot(&self.x, &self.xi) / self.r()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn hamiltonian(m: &PotentialModel, p: &PhasePoint) -> Result<f64> {
    let r = p.r();
    Ok(0.5 * dot(&p.xi, &p.xi) - 0.5 * r.powf(2.0 * m.s) + q_eval(m, r, 0)?)
}

/// `a = g'(r) x·ξ / r`.
pub fn conjugate_symbol(m: &PotentialModel, p: &PhasePoint) -> Result<f64> {
    let (dg, _) = escape_g_derivatives(m.s, p.r())?;
    Ok(dg * p.xi_radial())
}

/// `{h, a} = g''ξ_r² + (g'/r)|ξ_⊥|² + (s r^{2s−1} − q')g'`, at any phase point.
pub fn poisson_bracket(m: &PotentialModel, p: &PhasePoint) -> Result<f64> {
    let r = p.r();
    let (dg, d2g) = escape_g_derivatives(m.s, r)?;
    let xi_r = p.xi_radial();
    let xi_perp2 = (dot(&p.xi, &p.xi) - xi_r * xi_r).max(0.0);
    let force = m.s * r.powf(2.0 * m.s - 1.0) - q_eval(m, r, 1)?;
    Ok(d2g * xi_r * xi_r + dg / r * xi_perp2 + force * dg)
}

/// Bracket restricted to the energy shell `h = E`.
pub fn poisson_bracket_on_shell(m: &PotentialModel, energy: f64, p: &PhasePoint) -> Result<f64> {
    let h = hamiltonian(m, p)?;
    if (h - energy).abs() >= 1e-9 {
        return Err(argument(format!("point is off the shell: h = {h}, E = {energy}")));
    }
    poisson_bracket(m, p)
}

/// Purely radial point on `h = E` at radius `r` along the first axis, or
/// `None` if `r` is classically forbidden.
pub fn radial_shell_point(m: &PotentialModel, energy: f64, r: f64, dim: usize, outgoing: bool) -> Result<Option<PhasePoint>> {
    if dim == 0 {
        return Err(argument("dimension must be positive"));
    }
    let xi2 = 2.0 * (energy - q_eval(m, r, 0)?) + r.powf(2.0 * m.s);
    if xi2 < 0.0 {
        return Ok(None);
    }
    let sign = if outgoing { 1.0 } else { -1.0 };
    let mut x = vec![0.0; dim];
    let mut xi = vec![0.0; dim];
    x[0] = r;
    xi[0] = sign * xi2.sqrt();
    Ok(Some(PhasePoint { x, xi }))
}

/// Radial on-shell bracket with `ξ_r² = 2(E − q) + r^{2s}` substituted
/// algebraically, so it is defined in forbidden regions too.
pub fn radial_shell_bracket(m: &PotentialModel, energy: f64, r: f64) -> Result<f64> {
    let (dg, d2g) = escape_g_derivatives(m.s, r)?;
    let xi2 = 2.0 * (energy - q_eval(m, r, 0)?) + r.powf(2.0 * m.s);
    let force = m.s * r.powf(2.0 * m.s - 1.0) - q_eval(m, r, 1)?;
    Ok(d2g * xi2 + force * dg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub r: f64,
    pub g: f64,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub final_point: PhasePoint,
    /// Set when the state left the float range before `t_max`.
    pub truncated: bool,
}

impl Trajectory {
    pub fn max_energy_drift(&self) -> f64 {
        let h0 = self.samples[0].h;
        let scale = h0.abs().max(f64::MIN_POSITIVE);
        self.samples.iter().map(|s| (s.h - h0).abs() / scale).fold(0.0, f64::max)
    }
}

pub const DEFAULT_DT: f64 = 1e-3;
const BLOW_UP_RADIUS: f64 = 1e150;

/// Right-hand side `(ẋ, ξ̇) = (ξ, −∇h)`.
fn flow(m: &PotentialModel, x: &[f64], xi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let radial_force = if r > 0.0 { m.s * r.powf(2.0 * m.s - 1.0) - q_eval(m, r, 1)? } else { 0.0 };
    let dxi = if r > 0.0 { x.iter().map(|v| radial_force * v / r).collect() } else { vec![0.0; x.len()] };
    Ok((xi.to_vec(), dxi))
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
}

/// Classical RK4 for Hamilton's equations of `h`.
pub fn integrate_trajectory(m: &PotentialModel, start: &PhasePoint, t_max: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(argument(format!("dt must be positive, got {dt}")));
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(argument(format!("t_max must be non-negative, got {t_max}")));
    }
    let sample = |t: f64, p: &PhasePoint| -> Result<TrajectorySample> {
        let r = p.r();
        let g = if r > 0.0 { escape_g(m.s, r)? } else { f64::NAN };
        Ok(TrajectorySample { t, r, g, h: hamiltonian(m, p)? })
    };
    let steps = (t_max / dt).round() as usize;
    let mut p = start.clone();
    let mut samples = vec![sample(0.0, &p)?];
    let mut truncated = false;
    for k in 1..=steps {
        let (k1x, k1v) = flow(m, &p.x, &p.xi)?;
        let (k2x, k2v) = flow(m, &axpy(0.5 * dt, &k1x, &p.x), &axpy(0.5 * dt, &k1v, &p.xi))?;
        let (k3x, k3v) = flow(m, &axpy(0.5 * dt, &k2x, &p.x), &axpy(0.5 * dt, &k2v, &p.xi))?;
        let (k4x, k4v) = flow(m, &axpy(dt, &k3x, &p.x), &axpy(dt, &k3v, &p.xi))?;
        let combine = |y: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..y.len()).map(|i| y[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
        };
        let next = PhasePoint {
            x: combine(&p.x, &k1x, &k2x, &k3x, &k4x),
            xi: combine(&p.xi, &k1v, &k2v, &k3v, &k4v),
        };
        if !next.x.iter().chain(&next.xi).all(|v| v.is_finite()) || next.r() > BLOW_UP_RADIUS {
            truncated = true;
            break;
        }
        p = next;
        samples.push(sample(k as f64 * dt, &p)?);
    }
    Ok(Trajectory { samples, final_point: p, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::virial::virial_margin;

    #[test]
    fn escape_examples() {
        assert!((escape_g(0.5, 4.0).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(escape_g(1.0, 1.0).unwrap(), 0.0);
        assert!((escape_g(1.0, std::f64::consts::E.powi(2)).unwrap() - 2.0).abs() < 1e-14);
        assert!(escape_g(0.5, 0.0).is_err());
    }

    #[test]
    fn radial_brackets() {
        let m = PotentialModel::zero(0.5);
        for &r in &[0.5, 2.0, 9.0] {
            let p = radial_shell_point(&m, -1.0, r, 3, true).unwrap();
            if let Some(p) = p {
                assert!((poisson_bracket_on_shell(&m, -1.0, &p).unwrap() - 0.5).abs() < 1e-14);
            }
        }
        let m = PotentialModel::zero(1.0);
        let p = radial_shell_point(&m, -1.0, std::f64::consts::E, 3, true).unwrap().unwrap();
        assert!((poisson_bracket_on_shell(&m, -1.0, &p).unwrap() - 1.0).abs() < 1e-14);

        // r = 2 is classically forbidden at E = −1 for s = 1/4, so only the
        // algebraic shell substitution is available there
        let m = PotentialModel::zero(0.25);
        assert!(radial_shell_point(&m, -1.0, 2.0, 3, false).unwrap().is_none());
        let expect = virial_margin(&m, -1.0, 0.0, 2.0).unwrap();
        assert!((radial_shell_bracket(&m, -1.0, 2.0).unwrap() - expect).abs() < 1e-10);
        let p = radial_shell_point(&m, -0.5, 2.0, 3, false).unwrap().unwrap();
        let expect = virial_margin(&m, -0.5, 0.0, 2.0).unwrap();
        assert!((poisson_bracket_on_shell(&m, -0.5, &p).unwrap() - expect).abs() < 1e-10);
        assert!((radial_shell_bracket(&m, -0.5, 2.0).unwrap() - expect).abs() < 1e-10);
    }

    #[test]
    fn off_shell_is_rejected() {
        let m = PotentialModel::zero(0.5);
        let p = PhasePoint::new(vec![1.0, 0.0], vec![1.0, 0.0]).unwrap();
        assert!(poisson_bracket_on_shell(&m, -1.0, &p).is_err());
    }

    #[test]
    fn tangential_momentum_adds_g_prime_over_r() {
        let m = PotentialModel::zero(0.5);
        let radial = PhasePoint::new(vec![2.0, 0.0], vec![1.0, 0.0]).unwrap();
        let mixed = PhasePoint::new(vec![2.0, 0.0], vec![1.0, 0.7]).unwrap();
        let diff = poisson_bracket(&m, &mixed).unwrap() - poisson_bracket(&m, &radial).unwrap();
        assert!((diff - 0.49 / 2.0).abs() < 1e-14);
    }

    #[test]
    fn outgoing_oscillator_escapes_with_conserved_energy() {
        let m = PotentialModel::zero(1.0);
        let start = radial_shell_point(&m, -1.0, 2.0, 3, true).unwrap().unwrap();
        let traj = integrate_trajectory(&m, &start, 6.0, DEFAULT_DT).unwrap();
        assert!(!traj.truncated);
        assert!(traj.max_energy_drift() < 1e-6, "{}", traj.max_energy_drift());
        assert!(traj.samples.windows(2).all(|w| w[1].r > w[0].r));
        // g ≈ t²/2 eventually: increasing with increasing slope
        let g: Vec<f64> = traj.samples.iter().step_by(500).map(|s| s.g).collect();
        for w in g.windows(3) {
            assert!(w[1] > w[0] && w[2] - w[1] > w[1] - w[0]);
        }
    }
}
