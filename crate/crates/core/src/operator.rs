//! Finite-difference discretization of `H_θ` in one angular-momentum sector.
//!
//! Both assembly paths reduce the conjugated Laplacian to
//! `a₂ ∂_r² + a₁ ∂_r + a₀` and discretize it with the same stencil
//!
//! ```text
//! −a₂ · (−r^{1−d} ∂_r r^{d−1} ∂_r) + (a₁ − a₂ (d−1)/r) D₀ + a₀,
//! ```
//!
//! where the first factor is the conservative radial Laplacian (symmetric in
//! `L²(r^{d−1} dr)`) and `D₀` the central difference. The raw path gets the
//! coefficients by composing the factored form with Taylor jets of `r_θ`; the
//! expanded path reads them off the drift/`φ` decomposition.

use crate::distortion::{evaluate, r_theta_jet, DistortionParams};
use crate::error::{argument, Result};
use crate::jet::Jet;
use crate::potential::{q_theta_eval, PotentialModel};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
    pub dim: usize,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, n: usize, dim: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_min.is_finite()) {
            return Err(argument(format!("r_min must be positive, got {r_min}")));
        }
        if !(r_max > r_min && r_max.is_finite()) {
            return Err(argument(format!("r_max must exceed r_min, got [{r_min}, {r_max}]")));
        }
        if n < 16 {
            return Err(argument(format!("grid needs at least 16 points, got {n}")));
        }
        if dim < 2 {
            return Err(argument(format!("dimension must be at least 2, got {dim}")));
        }
        Ok(Self { r_min, r_max, n, dim })
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.n - 1 {
            self.r_max
        } else {
            self.r_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Trapezoid weights `r_i^{d−1} h`, halved at both ends.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n)
            .map(|i| {
                let end = if i == 0 || i == self.n - 1 { 0.5 } else { 1.0 };
                end * self.point(i).powi(self.dim as i32 - 1) * h
            })
            .collect()
    }

    /// Weights of the interior unknowns `1..n−1`, where Dirichlet data vanish.
    pub fn interior_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        (1..self.n - 1).map(|i| self.point(i).powi(self.dim as i32 - 1) * h).collect()
    }
}

/// Tridiagonal complex matrix; `lower[i] = A[i+1][i]`, `upper[i] = A[i][i+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub upper: Vec<Complex64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { lower: vec![ZERO; n - 1], diag: vec![ZERO; n], upper: vec![ZERO; n - 1] }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i == j {
            self.diag[i]
        } else if j == i + 1 {
            self.upper[i]
        } else if i == j + 1 {
            self.lower[j]
        } else {
            ZERO
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.lower.iter().chain(&self.diag).chain(&self.upper).map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max-norm over rows `rows`, entrywise.
    pub fn max_abs_rows(&self, rows: std::ops::Range<usize>) -> f64 {
        let n = self.n();
        rows.flat_map(|i| (i.saturating_sub(1)..(i + 2).min(n)).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j).norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let scale = |v: &Vec<Complex64>| v.iter().map(|x| x * factor).collect();
        Self { lower: scale(&self.lower), diag: scale(&self.diag), upper: scale(&self.upper) }
    }

    /// Rows/columns `1..n−1`, i.e. the unknowns that survive Dirichlet data.
    pub fn interior(&self) -> Self {
        let n = self.n();
        Self {
            lower: self.lower[1..n - 2].to_vec(),
            diag: self.diag[1..n - 1].to_vec(),
            upper: self.upper[1..n - 2].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().chain(&self.diag).chain(&self.upper).all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssemblyMethod {
    Raw,
    Expanded,
}

pub fn angular_eigenvalue(ell: usize, dim: usize) -> f64 {
    (ell * (ell + dim - 2)) as f64
}

/// Coefficients of `a₂ ∂² + a₁ ∂ + a₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondOrderCoefficients {
    pub a2: Complex64,
    pub a1: Complex64,
    pub a0: Complex64,
}

fn undistorted(r: f64, dim: usize, lambda: f64) -> SecondOrderCoefficients {
    SecondOrderCoefficients {
        a2: -ONE,
        a1: Complex64::new(-((dim - 1) as f64 / r), 0.0),
        a0: Complex64::new(lambda / (r * r), 0.0),
    }
}

/// Coefficients of the factored form
/// `−J^{1/2}p⁻¹∂ p⁻¹∂ J^{−1/2} − (d−1)J^{1/2}r_θ⁻¹p⁻¹∂ J^{−1/2} + λr_θ⁻²`,
/// with `p = ∂r_θ/∂r`, computed by jet arithmetic.
pub fn raw_coefficients(p: &DistortionParams, r: f64, lambda: f64) -> Result<SecondOrderCoefficients> {
    let Some(rt) = r_theta_jet(p, r)? else {
        return Ok(undistorted(r, p.dim, lambda));
    };
    let d1 = (p.dim - 1) as f64;
    let x = Jet::variable(r);
    let dr = rt.differentiate();
    let ratio = (rt / x).truncate(2);
    let jac = ratio.powf(d1) * dr;
    let k = jac.powf(-0.5);
    let pinv = dr.recip();
    let (k0, k1, k2) = (k.derivative(0), k.derivative(1), k.derivative(2));
    let (p0, p1) = (pinv.derivative(0), pinv.derivative(1));
    let sqrt_j = ONE / k0;
    let rt0 = rt.value();

    // −J^{1/2}P [P K u'' + (P'K + 2PK') u' + (P'K' + PK'') u]
    let a2 = -sqrt_j * p0 * p0 * k0;
    let mut a1 = -sqrt_j * p0 * (p1 * k0 + 2.0 * p0 * k1);
    let mut a0 = -sqrt_j * p0 * (p1 * k1 + p0 * k2);
    // −(d−1) J^{1/2} r_θ⁻¹ P (K u' + K' u)
    let t2 = sqrt_j / rt0 * p0;
    a1 -= d1 * t2 * k0;
    a0 -= d1 * t2 * k1;
    a0 += lambda / (rt0 * rt0);
    Ok(SecondOrderCoefficients { a2, a1, a0 })
}

/// Coefficients read off
/// `p⁻²[−Δ_ℓ + (J'/J + p'/p − (d−1)(p r/r_θ − 1)/r)∂ + φ + (p² r²/r_θ² − 1)λ/r²]`.
pub fn expanded_coefficients(p: &DistortionParams, r: f64, lambda: f64) -> Result<SecondOrderCoefficients> {
    let pt = evaluate(p, r)?;
    if pt.log_ratio == ZERO && pt.dr == ONE && pt.djacobian == ZERO {
        return Ok(undistorted(r, p.dim, lambda));
    }
    let d1 = (p.dim - 1) as f64;
    let a = pt.ratio_pow(1.0);
    let dr = pt.dr;
    let drift = pt.djacobian / pt.jacobian + pt.d2r / dr - d1 * (dr / a - 1.0) / r;
    let angular = (dr * dr / (a * a) - 1.0) * lambda / (r * r);
    let inv = ONE / (dr * dr);
    Ok(SecondOrderCoefficients {
        a2: -inv,
        a1: inv * (drift - d1 / r),
        a0: inv * (lambda / (r * r) + pt.phi(p.dim) + angular),
    })
}

/// Writes row `i` of the shared stencil.
fn stencil_row(grid: &RadialGrid, i: usize, c: SecondOrderCoefficients) -> (Complex64, Complex64, Complex64) {
    let h = grid.spacing();
    let r = grid.point(i);
    let dm1 = grid.dim as i32 - 1;
    let c_lap = -c.a2;
    let c_drift = c.a1 - c.a2 * ((grid.dim - 1) as f64 / r);
    let rm = (r - 0.5 * h).powi(dm1);
    let rp = (r + 0.5 * h).powi(dm1);
    let scale = r.powi(dm1) * h * h;
    let lap_lo = -rm / scale;
    let lap_hi = -rp / scale;
    let lap_mid = (rm + rp) / scale;
    let lower = c_lap * lap_lo - c_drift / (2.0 * h);
    let upper = c_lap * lap_hi + c_drift / (2.0 * h);
    let diag = c_lap * lap_mid + c.a0;
    (lower, diag, upper)
}

fn assemble_from<F>(grid: &RadialGrid, coefficients: F) -> Result<Tridiagonal>
where
    F: Fn(f64) -> Result<SecondOrderCoefficients> + Sync,
{
    let n = grid.n;
    let rows: Vec<(Complex64, Complex64, Complex64)> = (1..n - 1)
        .into_par_iter()
        .map(|i| Ok(stencil_row(grid, i, coefficients(grid.point(i))?)))
        .collect::<Result<_>>()?;
    let mut m = Tridiagonal::zeros(n);
    m.diag[0] = ONE;
    m.diag[n - 1] = ONE;
    for (k, (lo, d, up)) in rows.into_iter().enumerate() {
        let i = k + 1;
        m.lower[i - 1] = lo;
        m.diag[i] = d;
        m.upper[i] = up;
    }
    Ok(m)
}

/// `U_θ(−Δ)U_θ⁻¹` restricted to sector `ell`, with identity Dirichlet rows.
pub fn assemble_conjugated_laplacian(
    grid: &RadialGrid,
    ell: usize,
    p: &DistortionParams,
    method: AssemblyMethod,
) -> Result<Tridiagonal> {
    if grid.dim != p.dim {
        return Err(argument(format!("grid dimension {} differs from distortion dimension {}", grid.dim, p.dim)));
    }
    let lambda = angular_eigenvalue(ell, grid.dim);
    match method {
        AssemblyMethod::Raw => assemble_from(grid, |r| raw_coefficients(p, r, lambda)),
        AssemblyMethod::Expanded => assemble_from(grid, |r| expanded_coefficients(p, r, lambda)),
    }
}

#[derive(Clone, Debug)]
pub struct SectorOperator {
    pub grid: RadialGrid,
    pub ell: usize,
    pub lambda_ell: f64,
    pub hbar: f64,
    pub params: DistortionParams,
    pub model: PotentialModel,
    /// Full `n × n` matrix; rows 0 and n−1 are identity (Dirichlet) rows.
    pub matrix: Tridiagonal,
}

impl SectorOperator {
    pub fn s(&self) -> f64 {
        self.params.s()
    }

    pub fn beta(&self) -> f64 {
        self.params.theta.im
    }

    /// The operator acting on the interior unknowns.
    pub fn interior(&self) -> Tridiagonal {
        self.matrix.interior()
    }
}

/// `−½ r_θ^{2s} + q_θ(r)`.
pub fn distorted_potential(p: &DistortionParams, m: &PotentialModel, r: f64) -> Result<Complex64> {
    // the radicand is r_θ^{2s} in both regimes
    let pt = evaluate(p, r)?;
    Ok(-0.5 * pt.radicand + q_theta_eval(m, p, r)?)
}

/// `(ℏ²/2) U_θ(−Δ)U_θ⁻¹ − ½r_θ^{2s} + q_θ` on one sector.
pub fn assemble_h_theta(
    grid: &RadialGrid,
    ell: usize,
    p: &DistortionParams,
    m: &PotentialModel,
    hbar: f64,
) -> Result<SectorOperator> {
    assemble_h_theta_with(grid, ell, p, m, hbar, AssemblyMethod::Expanded)
}

pub fn assemble_h_theta_with(
    grid: &RadialGrid,
    ell: usize,
    p: &DistortionParams,
    m: &PotentialModel,
    hbar: f64,
    method: AssemblyMethod,
) -> Result<SectorOperator> {
    if !(hbar > 0.0 && hbar.is_finite()) {
        return Err(argument(format!("hbar must be positive, got {hbar}")));
    }
    if (m.s - p.s()).abs() > 0.0 {
        return Err(argument(format!("potential exponent s = {} differs from distortion s = {}", m.s, p.s())));
    }
    let lap = assemble_conjugated_laplacian(grid, ell, p, method)?;
    let n = grid.n;
    let potential: Vec<Complex64> = (1..n - 1)
        .into_par_iter()
        .map(|i| distorted_potential(p, m, grid.point(i)))
        .collect::<Result<_>>()?;
    let mut matrix = lap.scaled(Complex64::new(0.5 * hbar * hbar, 0.0));
    matrix.diag[0] = ONE;
    matrix.diag[n - 1] = ONE;
    for (k, v) in potential.into_iter().enumerate() {
        matrix.diag[k + 1] += v;
    }
    Ok(SectorOperator {
        grid: *grid,
        ell,
        lambda_ell: angular_eigenvalue(ell, grid.dim),
        hbar,
        params: *p,
        model: *m,
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::CutoffSpec;

    fn params(s: f64, theta: Complex64, dim: usize) -> DistortionParams {
        DistortionParams::new(theta, dim, CutoffSpec::new(1.0, s).unwrap()).unwrap()
    }

    #[test]
    fn angular_examples() {
        assert_eq!(angular_eigenvalue(0, 3), 0.0);
        assert_eq!(angular_eigenvalue(1, 3), 2.0);
        assert_eq!(angular_eigenvalue(2, 2), 4.0);
    }

    #[test]
    fn grid_validation_and_weights() {
        assert!(RadialGrid::new(0.0, 1.0, 20, 3).is_err());
        assert!(RadialGrid::new(1.0, 1.0, 20, 3).is_err());
        assert!(RadialGrid::new(0.5, 1.0, 15, 3).is_err());
        assert!(RadialGrid::new(0.5, 1.0, 20, 1).is_err());
        let g = RadialGrid::new(1.0, 2.0, 101, 3).unwrap();
        assert_eq!(g.point(100), 2.0);
        // trapezoid rule for ∫₁² r² dr = 7/3
        let total: f64 = g.weights().iter().sum();
        assert!((total - 7.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn theta_zero_is_the_standard_stencil() {
        let g = RadialGrid::new(0.5, 10.0, 64, 3).unwrap();
        for method in [AssemblyMethod::Raw, AssemblyMethod::Expanded] {
            let m = assemble_conjugated_laplacian(&g, 1, &params(0.5, ZERO, 3), method).unwrap();
            let h = g.spacing();
            for i in 1..63 {
                let r = g.point(i);
                let rm = (r - 0.5 * h).powi(2);
                let rp = (r + 0.5 * h).powi(2);
                let scale = r * r * h * h;
                assert_eq!(m.get(i, i - 1), Complex64::new(-rm / scale, 0.0));
                assert_eq!(m.get(i, i + 1), Complex64::new(-rp / scale, 0.0));
                assert_eq!(m.get(i, i), Complex64::new((rm + rp) / scale + 2.0 / (r * r), 0.0));
            }
        }
    }

    #[test]
    fn theta_zero_is_weighted_symmetric() {
        let g = RadialGrid::new(0.5, 10.0, 64, 3).unwrap();
        let m = PotentialModel::zero(0.5);
        let op = assemble_h_theta(&g, 0, &params(0.5, ZERO, 3), &m, 0.3).unwrap();
        let w = g.weights();
        for i in 1..62 {
            let lhs = w[i] * op.matrix.get(i, i + 1);
            let rhs = w[i + 1] * op.matrix.get(i + 1, i);
            assert!((lhs - rhs).norm() <= 1e-14 * lhs.norm());
            assert_eq!(op.matrix.get(i, i).im, 0.0);
        }
    }

    #[test]
    fn raw_and_expanded_coefficients_agree() {
        for &(s, theta) in &[(0.5, Complex64::new(0.0, 0.1)), (1.0, Complex64::new(0.0, 0.05)), (0.3, Complex64::new(0.02, 0.07))] {
            let p = params(s, theta, 3);
            for &r in &[0.8, 1.1, 1.3, 1.45, 2.0, 5.0] {
                let a = raw_coefficients(&p, r, 6.0).unwrap();
                let b = expanded_coefficients(&p, r, 6.0).unwrap();
                let scale = 1.0 + a.a0.norm() + a.a1.norm() + a.a2.norm();
                assert!((a.a2 - b.a2).norm() < 1e-12 * scale, "a2 at s={s} r={r}");
                assert!((a.a1 - b.a1).norm() < 1e-12 * scale, "a1 at s={s} r={r}");
                assert!((a.a0 - b.a0).norm() < 1e-12 * scale, "a0 at s={s} r={r}: {} vs {}", a.a0, b.a0);
            }
        }
    }

    #[test]
    fn untouched_rows_keep_the_undistorted_stencil() {
        let g = RadialGrid::new(0.25, 5.0, 100, 3).unwrap();
        let m0 = assemble_conjugated_laplacian(&g, 0, &params(0.5, ZERO, 3), AssemblyMethod::Raw).unwrap();
        let m1 = assemble_conjugated_laplacian(&g, 0, &params(0.5, Complex64::new(0.0, 0.1), 3), AssemblyMethod::Raw).unwrap();
        for i in 1..99 {
            if g.point(i) <= 1.0 {
                assert_eq!(m0.get(i, i), m1.get(i, i));
                assert_eq!(m0.get(i, i + 1), m1.get(i, i + 1));
                assert_eq!(m0.get(i, i - 1), m1.get(i, i - 1));
            }
        }
    }

    #[test]
    fn potential_part_has_nonpositive_imaginary_part() {
        let g = RadialGrid::new(0.25, 30.0, 400, 3).unwrap();
        for &s in &[0.5, 1.0] {
            for &beta in &[0.05, 0.1, 0.2] {
                let p = params(s, Complex64::new(0.0, beta), 3);
                let m = PotentialModel::zero(s);
                for r in g.points() {
                    let v = distorted_potential(&p, &m, r).unwrap();
                    assert!(v.im <= 0.0, "s={s} beta={beta} r={r}: {v}");
                }
            }
        }
    }

    #[test]
    fn hbar_and_dimension_are_checked() {
        let g = RadialGrid::new(0.5, 10.0, 64, 3).unwrap();
        let m = PotentialModel::zero(0.5);
        assert!(assemble_h_theta(&g, 0, &params(0.5, ZERO, 3), &m, 0.0).is_err());
        assert!(assemble_h_theta(&g, 0, &params(0.5, ZERO, 2), &m, 0.1).is_err());
        assert!(assemble_h_theta(&g, 0, &params(0.5, ZERO, 3), &PotentialModel::zero(1.0), 0.1).is_err());
    }
}
