use num_complex::Complex64;
use resfree_core::operator::{distorted_potential, raw_coefficients};
use resfree_core::spectral::lowest_real_eigenvalues;
use resfree_core::{assemble_h_theta, CutoffSpec, DistortionParams, PotentialModel, RadialGrid};

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, 1e-13).integral
}

#[test]
fn zero_theta_matches_undistorted_stencil() {
    let hbar = 0.3;
    let dim = 3;
    let ell = 2;
    let grid = RadialGrid::new(0.25, 12.0, 150, dim).unwrap();
    let p = DistortionParams::new(Complex64::new(0.0, 0.0), dim, CutoffSpec::new(1.0, 0.5).unwrap()).unwrap();
    let m = PotentialModel::power_decay(0.4, 0.5, 0.5, 0.5).unwrap();
    let op = assemble_h_theta(&grid, ell, &p, &m, hbar).unwrap();
    let h = grid.spacing();
    let lambda = (ell * (ell + dim - 2)) as f64;
    let k = 0.5 * hbar * hbar;
    for i in 1..grid.n - 1 {
        let r = grid.point(i);
        let rm = (r - 0.5 * h) * (r - 0.5 * h);
        let rp = (r + 0.5 * h) * (r + 0.5 * h);
        let lo = -k * rm / (r * r * h * h);
        let up = -k * rp / (r * r * h * h);
        let v = -0.5 * r + 0.4 * (1.0 + r * r).powf(0.25);
        let d = k * ((rm + rp) / (r * r * h * h) + lambda / (r * r)) + v;
        let tol = 1e-13 * (k / (h * h) + v.abs());
        assert!((op.matrix.get(i, i - 1) - lo).norm() < tol, "row {i}");
        assert!((op.matrix.get(i, i + 1) - up).norm() < tol, "row {i}");
        assert!((op.matrix.get(i, i) - d).norm() < tol, "row {i}");
    }
    assert_eq!(op.matrix.get(0, 0), Complex64::new(1.0, 0.0));
    assert_eq!(op.matrix.get(grid.n - 1, grid.n - 1), Complex64::new(1.0, 0.0));
}

/// `⟨u, H_θ u⟩ / ⟨u, u⟩` on the grid against direct quadrature of the form.
#[test]
fn rayleigh_quotient_matches_quadrature() {
    let (s, dim, hbar) = (0.5, 3, 0.05);
    let grid = RadialGrid::new(0.5, 30.0, 600, dim).unwrap();
    let p = DistortionParams::imaginary(0.1, dim, CutoffSpec::new(1.0, s).unwrap()).unwrap();
    let m = PotentialModel::zero(s);
    let op = assemble_h_theta(&grid, 0, &p, &m, hbar).unwrap();

    let (c, w) = (2.5, 0.4);
    let u = |r: f64| (-0.5 * ((r - c) / w).powi(2)).exp();
    let du = |r: f64| -(r - c) / (w * w) * u(r);
    let d2u = |r: f64| (((r - c) / (w * w)).powi(2) - 1.0 / (w * w)) * u(r);

    let v: Vec<Complex64> = grid.points().iter().map(|&r| Complex64::new(u(r), 0.0)).collect();
    let hv = op.matrix.matvec(&v);
    let weights = grid.weights();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for i in 1..grid.n - 1 {
        num += weights[i] * v[i].conj() * hv[i];
        den += weights[i] * v[i].norm_sqr();
    }
    let discrete = num / den;

    let action = |r: f64| -> Complex64 {
        let c = raw_coefficients(&p, r, 0.0).unwrap();
        let kinetic = c.a2 * d2u(r) + c.a1 * du(r) + c.a0 * u(r);
        0.5 * hbar * hbar * kinetic + distorted_potential(&p, &m, r).unwrap() * u(r)
    };
    let re = integrate(|r| r * r * u(r) * action(r).re, 0.5, 30.0);
    let im = integrate(|r| r * r * u(r) * action(r).im, 0.5, 30.0);
    let norm = integrate(|r| r * r * u(r) * u(r), 0.5, 30.0);
    let continuous = Complex64::new(re, im) / norm;

    let err = (discrete - continuous).norm() / continuous.norm();
    assert!(err < 1e-4, "{discrete} vs {continuous}: {err:e}");
    assert!(continuous.im < 0.0);
}

#[test]
fn ground_state_converges_at_second_order() {
    let hbar = 0.2;
    let p = DistortionParams::new(Complex64::new(0.0, 0.0), 3, CutoffSpec::new(1.0, 1.0).unwrap()).unwrap();
    let m = PotentialModel::quadratic(1.0, 1.0).unwrap();
    let e: Vec<f64> = [200, 400, 800]
        .iter()
        .map(|&n| {
            // default r_min = 0.25·R
            let grid = RadialGrid::new(0.25, 6.0, n, 3).unwrap();
            let op = assemble_h_theta(&grid, 0, &p, &m, hbar).unwrap();
            lowest_real_eigenvalues(&op, 1).unwrap()[0]
        })
        .collect();
    let order = ((e[0] - e[1]) / (e[1] - e[2])).abs().log2();
    assert!(order >= 1.9 && order < 2.1, "order {order}, levels {e:?}");
}

#[test]
fn distorted_potential_is_dissipative() {
    for &s in &[0.25, 0.5, 0.75, 1.0] {
        for &beta in &[0.02, 0.1, 0.2] {
            let p = DistortionParams::imaginary(beta, 3, CutoffSpec::new(1.0, s).unwrap()).unwrap();
            let m = PotentialModel::zero(s);
            for i in 0..2000 {
                let r = 0.1 + i as f64 * 0.05;
                let v = distorted_potential(&p, &m, r).unwrap();
                assert!(v.im <= 0.0, "s = {s}, beta = {beta}, r = {r}: {v}");
            }
        }
    }
}
