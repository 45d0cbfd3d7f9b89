//! Spectra, smallest-singular-value scans and Weyl sequences for an
//! assembled [`SectorOperator`].
//!
//! Every norm here is the discrete `L²(r^{d−1} dr)` norm on the interior
//! unknowns. With `W = diag(r_i^{d−1} h)` the operator `T` is replaced by
//! `B = W^{1/2} T W^{−1/2}`, so Euclidean quantities of `B` are weighted
//! quantities of `T`.

use crate::distortion::{evaluate, DistortionParams};
use crate::error::{argument, Error, Result};
use crate::linalg::{self, to_dense};
use crate::operator::{RadialGrid, SectorOperator, Tridiagonal};
use crate::potential::{q_eval, q_theta_eval, PotentialFamily, PotentialModel};
use crate::switch::ramp;
use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Fraction of the grid (at the `r_max` end) counted as boundary layer.
pub const BOUNDARY_FRACTION: f64 = 0.05;
/// Eigenvectors with more boundary mass than this are truncation artifacts.
pub const BOUNDARY_MASS_THRESHOLD: f64 = 0.01;
/// Largest matrix handed to the dense eigensolver.
pub const MAX_DENSE_SIZE: usize = 4000;

/// `B = W^{1/2} T W^{−1/2}` on the interior unknowns.
pub fn weighted_interior(op: &SectorOperator) -> Tridiagonal {
    let t = op.interior();
    let w: Vec<f64> = op.grid.interior_weights().iter().map(|v| v.sqrt()).collect();
    let mut b = t.clone();
    for i in 0..t.lower.len() {
        b.upper[i] = t.upper[i] * (w[i] / w[i + 1]);
        b.lower[i] = t.lower[i] * (w[i + 1] / w[i]);
    }
    b
}

fn shifted(b: &Tridiagonal, z: Complex64) -> Tridiagonal {
    let mut c = b.clone();
    for d in &mut c.diag {
        *d -= z;
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub value_re: f64,
    pub value_im: f64,
    /// Weighted mass of the normalized eigenvector in the outer boundary layer.
    pub boundary_mass: f64,
}

impl Eigenpair {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }

    pub fn is_interior_supported(&self) -> bool {
        self.boundary_mass < BOUNDARY_MASS_THRESHOLD
    }
}

/// All eigenvalues of the interior block with their boundary-mass fractions,
/// sorted by real part, then imaginary part.
pub fn eigenvalues(op: &SectorOperator) -> Result<Vec<Eigenpair>> {
    let b = weighted_interior(op);
    let m = b.n();
    if m > MAX_DENSE_SIZE {
        return Err(argument(format!("dense eigensolver limited to {MAX_DENSE_SIZE} unknowns, got {m}")));
    }
    let eig = to_dense(&b)
        .eigen()
        .map_err(|e| Error::Solver(format!("eigensolver did not converge: {e:?}")))?;
    let values = eig.S().column_vector();
    let u = eig.U();
    let layer = ((BOUNDARY_FRACTION * m as f64).ceil() as usize).clamp(1, m);
    let mut out: Vec<Eigenpair> = (0..m)
        .map(|k| {
            let total: f64 = (0..m).map(|i| u[(i, k)].norm_sqr()).sum();
            let outer: f64 = (m - layer..m).map(|i| u[(i, k)].norm_sqr()).sum();
            let v = values[k];
            Eigenpair { value_re: v.re, value_im: v.im, boundary_mass: outer / total }
        })
        .collect();
    out.sort_by(|a, b| a.value_re.total_cmp(&b.value_re).then(a.value_im.total_cmp(&b.value_im)));
    Ok(out)
}

/// Smallest singular value of `H_θ − z` in the weighted norm.
pub fn sigma_min(op: &SectorOperator, z: Complex64) -> Result<f64> {
    linalg::sigma_min_tridiagonal(&shifted(&weighted_interior(op), z))
}

/// Same quantity from a dense SVD; slow, used as a reference.
pub fn sigma_min_dense(op: &SectorOperator, z: Complex64) -> Result<f64> {
    linalg::sigma_min_dense(&shifted(&weighted_interior(op), z))
}

/// The `k` lowest eigenvalues when the interior block is real and
/// symmetrizable (θ = 0), by Sturm bisection.
pub fn lowest_real_eigenvalues(op: &SectorOperator, k: usize) -> Result<Vec<f64>> {
    linalg::lowest_eigenvalues_symmetrizable(&op.interior(), k)
}

/// Imaginary part of the essential-spectrum line of `H_{iβ}`.
///
/// Note the jump at `s = 1`: `−(1−s)β → 0` as `s → 1⁻` while the `s = 1`
/// line sits at `−β`.
pub fn ess_line(s: f64, beta: f64) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(argument(format!("s must lie in (0, 1], got {s}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(argument(format!("beta must be positive, got {beta}")));
    }
    Ok(if s == 1.0 { -beta } else { -(1.0 - s) * beta })
}

/// Rectangle of spectral parameters, sampled on a uniform `n_re × n_im` grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl ScanRect {
    pub fn centered(center: Complex64, half_re: f64, half_im: f64, n_re: usize, n_im: usize) -> Self {
        Self {
            re_min: center.re - half_re,
            re_max: center.re + half_re,
            im_min: center.im - half_im,
            im_max: center.im + half_im,
            n_re,
            n_im,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite());
        if !finite || self.re_min > self.re_max || self.im_min > self.im_max {
            return Err(argument("scan rectangle needs finite bounds with min <= max"));
        }
        if self.n_re == 0 || self.n_im == 0 {
            return Err(argument("scan rectangle needs at least one point per axis"));
        }
        Ok(())
    }

    fn axis(min: f64, max: f64, n: usize, k: usize) -> f64 {
        if n == 1 {
            0.5 * (min + max)
        } else {
            min + (max - min) * k as f64 / (n - 1) as f64
        }
    }

    /// Grid points, real index fastest.
    pub fn points(&self) -> Vec<Complex64> {
        (0..self.n_im)
            .flat_map(|j| {
                let im = Self::axis(self.im_min, self.im_max, self.n_im, j);
                (0..self.n_re).map(move |i| Complex64::new(Self::axis(self.re_min, self.re_max, self.n_re, i), im))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub re_z: f64,
    pub im_z: f64,
    pub sigma_min: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    pub grid: RadialGrid,
    pub ell: usize,
    pub beta: f64,
    pub hbar: f64,
    pub model: PotentialModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralScan {
    pub rect: ScanRect,
    pub points: Vec<ScanPoint>,
    pub min_sigma: f64,
    pub argmin: [f64; 2],
    pub max_sigma: f64,
    /// Filled on request by [`SpectralScan::with_eigenvalues`].
    pub eigenvalues: Vec<Eigenpair>,
    pub meta: ScanMeta,
}

impl SpectralScan {
    pub fn with_eigenvalues(mut self, op: &SectorOperator) -> Result<Self> {
        self.eigenvalues = eigenvalues(op)?;
        Ok(self)
    }

    /// Eigenvalues inside the scanned rectangle.
    pub fn eigenvalues_in_rect(&self) -> Vec<Eigenpair> {
        let r = &self.rect;
        self.eigenvalues
            .iter()
            .filter(|e| e.value_re >= r.re_min && e.value_re <= r.re_max && e.value_im >= r.im_min && e.value_im <= r.im_max)
            .copied()
            .collect()
    }
}

/// `σ_min(H_θ − z)` over the rectangle; points are evaluated in parallel and
/// stored in rectangle order.
pub fn coercivity_scan(op: &SectorOperator, rect: &ScanRect) -> Result<SpectralScan> {
    rect.validate()?;
    let b = weighted_interior(op);
    let zs = rect.points();
    let sigmas: Vec<f64> = zs
        .par_iter()
        .map(|&z| linalg::sigma_min_tridiagonal(&shifted(&b, z)))
        .collect::<Result<_>>()?;
    let points: Vec<ScanPoint> = zs
        .iter()
        .zip(&sigmas)
        .map(|(z, &sigma_min)| ScanPoint { re_z: z.re, im_z: z.im, sigma_min })
        .collect();
    let (mut kmin, mut max_sigma) = (0, f64::NEG_INFINITY);
    for (k, p) in points.iter().enumerate() {
        if p.sigma_min < points[kmin].sigma_min {
            kmin = k;
        }
        max_sigma = max_sigma.max(p.sigma_min);
    }
    Ok(SpectralScan {
        rect: *rect,
        min_sigma: points[kmin].sigma_min,
        argmin: [points[kmin].re_z, points[kmin].im_z],
        max_sigma,
        points,
        eigenvalues: Vec::new(),
        meta: ScanMeta { grid: op.grid, ell: op.ell, beta: op.beta(), hbar: op.hbar, model: op.model },
    })
}

/// Ratio `min σ / max σ` below which a scan counts as dipping onto spectrum.
pub const DIP_RATIO: f64 = 0.1;

/// Diagnostic when the scan touches the essential line: the line crosses the
/// rectangle's imaginary span, or σ_min dips by `1/DIP_RATIO` inside it.
pub fn essential_line_proximity(scan: &SpectralScan, s: f64, beta: f64) -> Result<Option<String>> {
    let line = ess_line(s, beta)?;
    let r = &scan.rect;
    if line >= r.im_min && line <= r.im_max {
        return Ok(Some(format!(
            "essential-line proximity: Im z = {line} lies inside the scanned span [{}, {}]",
            r.im_min, r.im_max
        )));
    }
    if scan.max_sigma > 0.0 && scan.min_sigma / scan.max_sigma < DIP_RATIO {
        return Ok(Some(format!(
            "essential-line proximity: sigma_min dips to {:.3e} against a maximum of {:.3e}",
            scan.min_sigma, scan.max_sigma
        )));
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Weyl sequences

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeylPhase {
    /// Include `Θ(r) = −∫₂^r q(t) t^{−s} dt`.
    Integral,
    None,
}

/// Variable the dyadic cutoff `η_n` is applied to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeylCutoff {
    /// `η_n(r)`: support `[2ⁿ, 2^{n+1}]` in `r`; fits on a finite-difference grid.
    Radius,
    /// `η_n(f(r))`: support `[2ⁿ, 2^{n+1}]` in `f`.
    F,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylSpec {
    pub s: f64,
    pub lambda: f64,
    pub n: u32,
    pub hbar: f64,
    pub model: PotentialModel,
    pub phase: WeylPhase,
    pub cutoff: WeylCutoff,
}

impl WeylSpec {
    pub fn free(s: f64, lambda: f64, n: u32, hbar: f64) -> Self {
        Self {
            s,
            lambda,
            n,
            hbar,
            model: PotentialModel::zero(s),
            phase: WeylPhase::Integral,
            cutoff: WeylCutoff::Radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(argument(format!("s must lie in (0, 1], got {}", self.s)));
        }
        if self.model.s != self.s {
            return Err(argument("potential exponent differs from the Weyl exponent"));
        }
        if self.n < 1 || self.n > 10 {
            return Err(argument(format!("dyadic index must lie in 1..=10, got {}", self.n)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) || !self.lambda.is_finite() {
            return Err(argument("hbar must be positive and lambda finite"));
        }
        if self.phase == WeylPhase::Integral && !self.model.is_zero() {
            match self.model.family {
                PotentialFamily::Quadratic => {
                    return Err(argument("the integral phase needs a decaying perturbation"));
                }
                _ if !(self.model.rho > self.s) => {
                    return Err(argument(format!(
                        "the integral phase needs rho > s, got rho = {} and s = {}",
                        self.model.rho, self.s
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Support `[2ⁿ, 2^{n+1}]` of `η_n`, in its own variable.
    pub fn dyadic_interval(&self) -> (f64, f64) {
        let a = 2f64.powi(self.n as i32);
        (a, 2.0 * a)
    }

    /// Support of the Weyl vector in `r`.
    pub fn radial_support(&self) -> (f64, f64) {
        let (a, b) = self.dyadic_interval();
        match self.cutoff {
            WeylCutoff::Radius => (a, b),
            WeylCutoff::F => (weyl_f_inverse(self.s, a), weyl_f_inverse(self.s, b)),
        }
    }

    /// `z_λ = λ − i(1−s)β` (s < 1), `λ − iβ` (s = 1).
    pub fn target(&self, beta: f64) -> Result<Complex64> {
        Ok(Complex64::new(self.lambda, ess_line(self.s, beta)?))
    }
}

/// `f(r) = ((r^{1−s} − 1)/(1−s)) + 1` for s < 1, `log r + 1` for s = 1.
pub fn weyl_f(s: f64, r: f64) -> f64 {
    if s == 1.0 {
        r.ln() + 1.0
    } else {
        (r.powf(1.0 - s) - 1.0) / (1.0 - s) + 1.0
    }
}

fn weyl_f_inverse(s: f64, f: f64) -> f64 {
    if s == 1.0 {
        (f - 1.0).exp()
    } else {
        ((1.0 - s) * (f - 1.0) + 1.0).powf(1.0 / (1.0 - s))
    }
}

/// `η_n(t)` and its first two derivatives: rises on `[2ⁿ, 1.25·2ⁿ]`, falls on
/// `[1.75·2ⁿ, 2^{n+1}]`.
pub fn weyl_eta(n: u32, t: f64) -> [f64; 3] {
    let a = 2f64.powi(n as i32);
    let up = ramp(t, a, 1.25 * a);
    let dn = ramp(t, 1.75 * a, 2.0 * a);
    let (u, du, d2u) = (up[0], up[1], up[2]);
    let (v, dv, d2v) = (1.0 - dn[0], -dn[1], -dn[2]);
    [u * v, du * v + u * dv, d2u * v + 2.0 * du * dv + u * d2v]
}

fn gl_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16).expect("degree >= 2"))
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    c: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Composite Gauss–Legendre over `[a, b]` with `panels` equal panels; the
/// first error raised by the integrand is returned.
fn integrate<F>(a: f64, b: f64, panels: usize, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let rule = gl_rule();
    let mut err = None;
    let mut acc = CompensatedSum::default();
    let h = (b - a) / panels as f64;
    for k in 0..panels {
        let lo = a + h * k as f64;
        let hi = if k + 1 == panels { b } else { lo + h };
        acc.add(rule.integrate(lo, hi, |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        }));
    }
    match err {
        Some(e) => Err(e),
        None => Ok(acc.value()),
    }
}

fn theta_integrand(m: &PotentialModel, t: f64) -> Result<f64> {
    Ok(q_eval(m, t, 0)? * t.powf(-m.s))
}

/// `Θ(r) = −∫₂^r q(t) t^{−s} dt`.
pub fn weyl_phase_correction(m: &PotentialModel, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(argument(format!("radius must be positive, got {r}")));
    }
    if m.is_zero() {
        return Ok(0.0);
    }
    let panels = ((r - 2.0).abs().ceil() as usize).max(1);
    Ok(-integrate(2.0, r, panels, |t| theta_integrand(m, t))?)
}

/// `Θ` at increasing radii, accumulated interval by interval.
fn phase_correction_along(m: &PotentialModel, radii: &[f64]) -> Result<Vec<f64>> {
    if m.is_zero() || radii.is_empty() {
        return Ok(vec![0.0; radii.len()]);
    }
    let mut out = Vec::with_capacity(radii.len());
    let mut acc = CompensatedSum::default();
    acc.add(weyl_phase_correction(m, radii[0])?);
    out.push(acc.value());
    for w in radii.windows(2) {
        acc.add(-integrate(w[0], w[1], 1, |t| theta_integrand(m, t))?);
        out.push(acc.value());
    }
    Ok(out)
}

/// Weyl-vector samples on `grid`, zero at the Dirichlet end points and
/// normalized to unit weighted norm.
pub fn weyl_vector(spec: &WeylSpec, grid: &RadialGrid) -> Result<Vec<Complex64>> {
    spec.validate()?;
    let (a, b) = spec.radial_support();
    if a <= grid.point(0) || b >= grid.point(grid.n - 1) {
        return Err(argument(format!(
            "Weyl support [{a}, {b}] is not inside the open grid interval ({}, {})",
            grid.r_min, grid.r_max
        )));
    }
    let s = spec.s;
    let dim = grid.dim as f64;
    let points = grid.points();
    let inner: Vec<usize> = (1..grid.n - 1).filter(|&i| points[i] > a && points[i] < b).collect();
    let radii: Vec<f64> = inner.iter().map(|&i| points[i]).collect();
    let theta = match spec.phase {
        WeylPhase::Integral => phase_correction_along(&spec.model, &radii)?,
        WeylPhase::None => vec![0.0; radii.len()],
    };
    let mut phi = vec![ZERO; grid.n];
    for (k, &i) in inner.iter().enumerate() {
        let r = radii[k];
        let f = weyl_f(s, r);
        let eta = match spec.cutoff {
            WeylCutoff::Radius => weyl_eta(spec.n, r)[0],
            WeylCutoff::F => weyl_eta(spec.n, f)[0],
        };
        let phase = (r.powf(1.0 + s) / (1.0 + s) + spec.lambda * f + theta[k]) / spec.hbar;
        phi[i] = Complex64::from_polar(eta * r.powf(-0.5 * (dim + s - 1.0)), phase);
    }
    let weights = grid.weights();
    let norm2: f64 = phi.iter().zip(&weights).map(|(v, w)| w * v.norm_sqr()).sum();
    if !(norm2 > 0.0) {
        return Err(argument("Weyl support contains no grid points"));
    }
    let c = norm2.sqrt().recip();
    Ok(phi.into_iter().map(|v| v * c).collect())
}

/// A grid wide enough for the Weyl support whose spacing keeps the stencil's
/// relative dispersion error near `eps` at the outer edge.
pub fn weyl_grid(spec: &WeylSpec, dim: usize, eps: f64) -> Result<RadialGrid> {
    spec.validate()?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(argument(format!("eps must lie in (0, 1), got {eps}")));
    }
    let (a, b) = spec.radial_support();
    let (lo, hi) = (0.98 * a, 1.02 * b);
    let h = (24.0 * eps).sqrt() * spec.hbar / hi.powf(2.0 * spec.s);
    let n = ((hi - lo) / h).ceil() as usize + 1;
    if n > 5_000_000 {
        return Err(argument(format!("Weyl grid would need {n} points")));
    }
    RadialGrid::new(lo, hi, n.max(16), dim)
}

fn check_weyl_operator(spec: &WeylSpec, op: &SectorOperator) -> Result<()> {
    if op.s() != spec.s || op.model != spec.model || op.hbar != spec.hbar {
        return Err(argument("Weyl spec and operator disagree on s, potential or hbar"));
    }
    let (a, _) = spec.radial_support();
    if !chi_saturated(&op.params, a) {
        return Err(argument(format!("Weyl support starts at r = {a}, before the cutoff saturates")));
    }
    Ok(())
}

fn chi_saturated(p: &DistortionParams, r: f64) -> bool {
    let u = if p.is_quadratic() { r * r } else { r.powf(2.0 * p.s()) };
    p.cutoff.derivatives(u) == [1.0, 0.0, 0.0, 0.0]
}

/// Weighted norm of `(H_θ − z)φ` for the discrete Weyl vector on the
/// operator's grid.
pub fn weyl_residual_at(spec: &WeylSpec, op: &SectorOperator, z: Complex64) -> Result<f64> {
    check_weyl_operator(spec, op)?;
    let phi = weyl_vector(spec, &op.grid)?;
    let hphi = op.matrix.matvec(&phi);
    let w = op.grid.weights();
    let sum: f64 = (1..op.grid.n - 1).map(|i| w[i] * (hphi[i] - z * phi[i]).norm_sqr()).sum();
    Ok(sum.sqrt())
}

/// [`weyl_residual_at`] at `z_λ`.
pub fn weyl_residual(spec: &WeylSpec, op: &SectorOperator) -> Result<f64> {
    weyl_residual_at(spec, op, spec.target(op.beta())?)
}

/// `(1+x)^k − 1 − x` without cancellation for small `x`.
fn binomial_excess(k: f64, x: Complex64) -> Complex64 {
    if x.norm() < 0.1 {
        let mut term = k * x;
        let mut sum = (k - 1.0) * x;
        for j in 2..60 {
            term *= x * ((k - (j - 1) as f64) / j as f64);
            sum += term;
            if term.norm() <= 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (1.0 + x).powf(k) - 1.0 - x
    }
}

/// Residual of the continuum Weyl state, `‖(H_θ − z)φ‖ / ‖φ‖`, with the exact
/// coefficients of `H_θ` on sector `ell`.
///
/// The oscillating factor `exp(iS/ℏ)` is divided out analytically and the
/// eikonal term `½S'²/p² − ½r_θ^{2s}` is formed without cancellation, so
/// supports far out in `r` (as for `η_n(f)` at `s = 1`) stay accurate. The
/// support must lie where the cutoff is saturated.
pub fn weyl_residual_continuous(spec: &WeylSpec, p: &DistortionParams, ell: usize, z: Complex64) -> Result<f64> {
    spec.validate()?;
    if p.s() != spec.s {
        return Err(argument("Weyl spec and distortion disagree on s"));
    }
    let (ra, rb) = spec.radial_support();
    if !chi_saturated(p, ra) || !rb.is_finite() {
        return Err(argument(format!("Weyl support starts at r = {ra}, before the cutoff saturates")));
    }
    let s = spec.s;
    let d = p.dim as f64;
    let hbar = spec.hbar;
    let lambda = spec.lambda;
    let lambda_ell = crate::operator::angular_eigenvalue(ell, p.dim);
    let theta = p.theta;
    let m = &spec.model;
    let integral_phase = spec.phase == WeylPhase::Integral && !m.is_zero();

    // |bracket|² and η² at the radius r(t), t being the cutoff variable
    let sample = |t: f64| -> Result<(f64, f64)> {
        let (r, eta, e1, e2) = match spec.cutoff {
            WeylCutoff::Radius => {
                let e = weyl_eta(spec.n, t);
                (t, e[0], e[1], e[2])
            }
            WeylCutoff::F => {
                let r = weyl_f_inverse(s, t);
                let e = weyl_eta(spec.n, t);
                let f1 = r.powf(-s);
                let f2 = -s * r.powf(-s - 1.0);
                (r, e[0], e[1] * f1, e[2] * f1 * f1 + e[1] * f2)
            }
        };
        if eta == 0.0 && e1 == 0.0 && e2 == 0.0 {
            return Ok((0.0, 0.0));
        }
        let pt = evaluate(p, r)?;
        let rho = pt.r_theta;
        let pr = pt.dr;
        let dpr = pt.d2r;
        let (q0, q1) = if integral_phase { (q_eval(m, r, 0)?, q_eval(m, r, 1)?) } else { (0.0, 0.0) };
        let q_rho = q_theta_eval(m, p, r)?;

        let rs = r.powf(s);
        let ds = rs + lambda / rs - q0 / rs;
        let d2s = s * rs / r - s * lambda / (rs * r) - q1 / rs + s * q0 / (rs * r);

        let eikonal = if p.is_quadratic() {
            // w = r + θ/r, scaled by r so complex division stays in range at r ~ 1e110
            let w = 1.0 + theta / (r * r);
            let minus = (lambda - theta - q0) / r;
            let plus = 2.0 * r + (lambda + theta - q0) / r;
            0.5 * (pt.radicand / (r * r)) / (w * w) * minus * plus
        } else {
            let u = r.powf(2.0 * s);
            let x = 2.0 * s * theta / u;
            let y = (lambda - q0) / u;
            let k = (2.0 * s - 1.0) / s;
            let pk = (1.0 + x).powf(k);
            0.5 * u * (pk * y * (2.0 + y) + binomial_excess(k, x))
        };
        let lead = eikonal + q_rho - z;

        let jl = pt.djacobian / pt.jacobian;
        let jll = pt.d2jacobian / pt.jacobian - jl * jl;
        let g1 = -(d + s - 1.0) / (2.0 * r) - 0.5 * jl;
        let g2 = (d + s - 1.0) / (2.0 * r * r) - 0.5 * jll + g1 * g1;
        let a0 = Complex64::new(eta, 0.0);
        let a1 = e1 + eta * g1;
        let a2 = e2 + 2.0 * e1 * g1 + eta * g2;

        let pinv = 1.0 / pr;
        let pinv2 = pinv * pinv;
        let ratio = dpr * pinv;
        let transport = -I * hbar * pinv2 * ds * (a1 + (0.5 * d2s / ds - 0.5 * ratio + 0.5 * (d - 1.0) * pr / rho) * a0);
        let diffusion = -0.5 * hbar * hbar * (pinv2 * (a2 - ratio * a1) + (d - 1.0) / (rho * pr) * a1);
        let angular = 0.5 * hbar * hbar * lambda_ell / rho / rho * a0;
        let bracket = lead * a0 + transport + diffusion + angular;
        // dr = r^s df in the F variable; the weight r^{−s} dr is then df
        let jac = match spec.cutoff {
            WeylCutoff::Radius => r.powf(-s),
            WeylCutoff::F => 1.0,
        };
        Ok((bracket.norm_sqr() * jac, eta * eta * jac))
    };

    let (a, b) = spec.dyadic_interval();
    let panels = 256;
    let num = integrate(a, b, panels, |t| Ok(sample(t)?.0))?;
    let den = integrate(a, b, panels, |t| Ok(sample(t)?.1))?;
    Ok((num / den).sqrt())
}
