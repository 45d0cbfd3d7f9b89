//! Subcommand bodies. Each returns the files to write and an exit code.

use crate::config::RunConfig;
use crate::failure::{Failure, Stage, EXIT_CERTIFICATE, EXIT_PASS};
use crate::output::Outputs;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use resfree_core::classical::{poisson_bracket, radial_shell_point};
use resfree_core::distortion::{evaluate, forward_real};
use resfree_core::spectral::{essential_line_proximity, weyl_residual_continuous, MAX_DENSE_SIZE};
use resfree_core::virial::{free_case_window_with_mu, validation_grid};
use resfree_core::{
    assemble_h_theta, coercivity_scan, ess_line, free_case_window, integrate_trajectory,
    invert_r_theta, validate_window, Certificate, Complex64, CutoffSpec, DistortionParams, Eigenpair, Error,
    PotentialModel, RadialGrid, ScanRect, VirialWindow, WeylCutoff, WeylPhase, WeylSpec,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::time::Instant;

pub struct Run {
    pub outputs: Outputs,
    pub exit: i32,
    /// One-line summary for stderr.
    pub summary: String,
}

/// Wall-clock stages, kept out of `result.json` so results stay bit-identical.
#[derive(Default, Serialize)]
pub struct Timings {
    stages: Vec<(String, f64)>,
}

impl Timings {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.stages.push((name.to_string(), t.elapsed().as_secs_f64()));
        out
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Validation(format!("{field}: {msg}"))
}

fn header(cfg: &RunConfig, command: &str) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("tool".into(), json!("resfree"));
    map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    map.insert("command".into(), json!(command));
    map.insert("config".into(), serde_json::to_value(cfg).unwrap_or(Value::Null));
    map
}

fn finish(mut out: Outputs, result: serde_json::Map<String, Value>, timings: Timings, exit: i32, summary: String) -> Result<Run, Failure> {
    out.json("result.json", &Value::Object(result))?;
    out.json("timings.json", &timings)?;
    Ok(Run { outputs: out, exit, summary })
}

enum WindowOutcome {
    Built(VirialWindow),
    Rejected(String),
}

fn build_window(cfg: &RunConfig) -> Result<Option<WindowOutcome>, Failure> {
    let Some(v) = &cfg.virial else {
        return Ok(None);
    };
    let s = cfg.model.s;
    let built = match v.mu.value() {
        None => free_case_window(s, v.energy),
        Some(mu) => free_case_window_with_mu(s, v.energy, mu),
    };
    match built {
        Ok(w) => Ok(Some(WindowOutcome::Built(w))),
        Err(Error::Rejected(msg)) => Ok(Some(WindowOutcome::Rejected(msg))),
        Err(e) => Err(Failure::from_core("virial", e)),
    }
}

fn certify_window(m: &PotentialModel, w: &VirialWindow) -> Result<Certificate, Failure> {
    validate_window(m, w, &validation_grid(w)).stage("virial")
}

fn distortion(cfg: &RunConfig, window: Option<&VirialWindow>) -> Result<DistortionParams, Failure> {
    let radius = cfg.distortion.radius.value().or(window.map(|w| w.radius)).unwrap_or(1.0);
    let cutoff = CutoffSpec::new(radius, cfg.model.s).stage("distortion")?;
    let theta = Complex64::new(cfg.distortion.theta_re, cfg.distortion.beta);
    DistortionParams::new(theta, cfg.model.dim, cutoff).stage("distortion")
}

fn grid(cfg: &RunConfig) -> Result<RadialGrid, Failure> {
    RadialGrid::new(cfg.grid.r_min, cfg.grid.r_max, cfg.grid.n, cfg.model.dim).stage("grid")
}

fn scan_rect(cfg: &RunConfig, window: Option<&VirialWindow>) -> Result<ScanRect, Failure> {
    let sc = &cfg.scan;
    if let (Some(re_min), Some(re_max), Some(im_min), Some(im_max)) = (sc.re_min, sc.re_max, sc.im_min, sc.im_max) {
        let rect = ScanRect { re_min, re_max, im_min, im_max, n_re: sc.n_re, n_im: sc.n_im };
        rect.validate().stage("scan")?;
        return Ok(rect);
    }
    let Some(w) = window else {
        return Err(invalid("scan", "give re_min, re_max, im_min, im_max or a [virial] section to centre on"));
    };
    let beta = cfg.distortion.beta;
    let half_re = sc.half_re.unwrap_or(beta * w.gamma);
    let half_im = sc.half_im.unwrap_or(0.5 * beta * w.mu);
    if !(half_re > 0.0 && half_im > 0.0) {
        return Err(invalid("scan", "the centred rectangle is empty; set distortion.beta > 0 or explicit half-widths"));
    }
    let rect = ScanRect::centered(w.target(beta), half_re, half_im, sc.n_re, sc.n_im);
    rect.validate().stage("scan")?;
    Ok(rect)
}

#[derive(Serialize)]
struct SectorSummary {
    ell: usize,
    min_sigma: f64,
    argmin: [f64; 2],
    max_sigma: f64,
    proximity: Option<String>,
    eigenvalues_computed: bool,
    eigenvalues_in_rect: Vec<Eigenpair>,
    interior_eigenvalues_in_rect: usize,
}

/// Assembles every sector, scans `rect` and writes the per-sector tables.
fn scan_sectors(
    cfg: &RunConfig,
    m: &PotentialModel,
    p: &DistortionParams,
    rect: &ScanRect,
    out: &mut Outputs,
) -> Result<Vec<SectorSummary>, Failure> {
    let g = grid(cfg)?;
    let with_eigen = g.n - 2 <= MAX_DENSE_SIZE;
    let beta = cfg.distortion.beta;
    let results: Vec<_> = cfg
        .sectors
        .par_iter()
        .map(|&ell| -> Result<_, Failure> {
            let op = assemble_h_theta(&g, ell, p, m, cfg.model.hbar).stage("assembly")?;
            let mut scan = coercivity_scan(&op, rect).stage("scan")?;
            if with_eigen {
                scan = scan.with_eigenvalues(&op).stage("eigenvalues")?;
            }
            let proximity = if beta > 0.0 { essential_line_proximity(&scan, m.s, beta).stage("scan")? } else { None };
            Ok((ell, scan, proximity))
        })
        .collect::<Result<_, _>>()?;
    let mut summaries = Vec::new();
    for (ell, scan, proximity) in results {
        out.scan_csv(format!("scan_l{ell}.csv"), &scan.points);
        if with_eigen {
            out.eigen_json(format!("eigen_l{ell}.json"), &scan.eigenvalues)?;
        }
        let in_rect = scan.eigenvalues_in_rect();
        summaries.push(SectorSummary {
            ell,
            min_sigma: scan.min_sigma,
            argmin: scan.argmin,
            max_sigma: scan.max_sigma,
            proximity,
            eigenvalues_computed: with_eigen,
            interior_eigenvalues_in_rect: in_rect.iter().filter(|e| e.is_interior_supported()).count(),
            eigenvalues_in_rect: in_rect,
        });
    }
    Ok(summaries)
}

pub fn certify(cfg: &RunConfig) -> Result<Run, Failure> {
    let mut timings = Timings::default();
    let mut out = Outputs::default();
    let mut result = header(cfg, "certify");
    let m = cfg.potential()?;
    if cfg.virial.is_none() {
        return Err(invalid("virial", "certify needs a [virial] section"));
    }
    if !(cfg.distortion.beta > 0.0) {
        return Err(invalid("distortion.beta", "certify needs beta > 0"));
    }
    let window = match timings.time("window", || build_window(cfg))? {
        Some(WindowOutcome::Built(w)) => w,
        Some(WindowOutcome::Rejected(msg)) => {
            result.insert("pass".into(), json!(false));
            result.insert("stage".into(), json!("virial"));
            result.insert("rejection".into(), json!(msg));
            return finish(out, result, timings, EXIT_CERTIFICATE, format!("rejected at virial stage: {msg}"));
        }
        None => unreachable!(),
    };
    let cert = timings.time("virial", || certify_window(&m, &window))?;
    result.insert("window".into(), json!(window));
    result.insert("certificate".into(), json!(cert));
    if !cert.pass {
        result.insert("pass".into(), json!(false));
        result.insert("stage".into(), json!("virial"));
        let summary = format!("virial certificate failed: {}", cert.failures.join("; "));
        return finish(out, result, timings, EXIT_CERTIFICATE, summary);
    }

    let p = distortion(cfg, Some(&window))?;
    let rect = scan_rect(cfg, Some(&window))?;
    let sectors = timings.time("scan", || scan_sectors(cfg, &m, &p, &rect, &mut out))?;

    let beta = cfg.distortion.beta;
    let bound = 0.5 * window.coercivity_scale(beta);
    let min_sigma = sectors.iter().map(|s| s.min_sigma).fold(f64::INFINITY, f64::min);
    let proximity: Vec<&String> = sectors.iter().filter_map(|s| s.proximity.as_ref()).collect();
    let resonances: usize = sectors.iter().map(|s| s.interior_eigenvalues_in_rect).sum();
    let pass = min_sigma > 0.0 && proximity.is_empty() && resonances == 0;

    result.insert("target".into(), json!([window.energy, -beta * window.mu]));
    result.insert("rect".into(), json!(rect));
    result.insert("ess_line".into(), json!(ess_line(m.s, beta).stage("scan")?));
    result.insert("min_sigma".into(), json!(min_sigma));
    result.insert("coercivity_scale".into(), json!(window.coercivity_scale(beta)));
    result.insert("half_scale_bound_met".into(), json!(min_sigma >= bound));
    result.insert("sectors".into(), json!(sectors));
    result.insert("pass".into(), json!(pass));
    let summary = if pass {
        format!("pass: min sigma_min {min_sigma:.6e} (0.5 min(alpha, beta gamma) = {bound:.6e})")
    } else if let Some(msg) = proximity.first() {
        format!("fail: {msg}")
    } else if resonances > 0 {
        format!("fail: {resonances} interior-supported eigenvalue(s) inside the scanned rectangle")
    } else {
        format!("fail: min sigma_min {min_sigma:e}")
    };
    finish(out, result, timings, if pass { EXIT_PASS } else { EXIT_CERTIFICATE }, summary)
}

pub fn scan(cfg: &RunConfig) -> Result<Run, Failure> {
    let mut timings = Timings::default();
    let mut out = Outputs::default();
    let mut result = header(cfg, "scan");
    let m = cfg.potential()?;
    let window = match build_window(cfg)? {
        Some(WindowOutcome::Built(w)) => Some(w),
        _ => None,
    };
    let p = distortion(cfg, window.as_ref())?;
    let rect = scan_rect(cfg, window.as_ref())?;
    let sectors = timings.time("scan", || scan_sectors(cfg, &m, &p, &rect, &mut out))?;
    let min_sigma = sectors.iter().map(|s| s.min_sigma).fold(f64::INFINITY, f64::min);
    result.insert("rect".into(), json!(rect));
    result.insert("min_sigma".into(), json!(min_sigma));
    result.insert("sectors".into(), json!(sectors));
    let summary = format!("scanned {} points per sector; min sigma_min {min_sigma:.6e}", rect.n_re * rect.n_im);
    finish(out, result, timings, EXIT_PASS, summary)
}

pub fn weyl(cfg: &RunConfig) -> Result<Run, Failure> {
    let mut timings = Timings::default();
    let mut out = Outputs::default();
    let mut result = header(cfg, "weyl");
    let m = cfg.potential()?;
    let beta = cfg.distortion.beta;
    if !(beta > 0.0) {
        return Err(invalid("distortion.beta", "weyl needs beta > 0"));
    }
    let p = distortion(cfg, None)?;
    let ell = cfg.sectors[0];
    let w = &cfg.weyl;
    let jobs: Vec<(f64, u32)> =
        w.lambdas.iter().flat_map(|&l| (w.n_first..=w.n_last).map(move |n| (l, n))).collect();
    let rows: Vec<[f64; 6]> = timings.time("residuals", || {
        jobs.par_iter()
            .map(|&(lambda, n)| -> Result<[f64; 6], Failure> {
                let spec = WeylSpec {
                    s: m.s,
                    lambda,
                    n,
                    hbar: cfg.model.hbar,
                    model: m,
                    phase: if w.integral_phase { WeylPhase::Integral } else { WeylPhase::None },
                    cutoff: WeylCutoff::F,
                };
                spec.validate().stage("weyl")?;
                let z = spec.target(beta).stage("weyl")?;
                let on = weyl_residual_continuous(&spec, &p, ell, z).stage("weyl")?;
                let off = weyl_residual_continuous(&spec, &p, ell, z + Complex64::new(0.0, w.offset)).stage("weyl")?;
                Ok([lambda, n as f64, z.re, z.im, on, off])
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    out.csv(
        "weyl.csv",
        &["lambda", "n", "re_z", "im_z", "residual", "offset_residual"],
        rows.iter().map(|r| r.to_vec()),
    );
    let mut decreasing = serde_json::Map::new();
    for &lambda in &w.lambdas {
        let column: Vec<f64> = rows.iter().filter(|r| r[0] == lambda).map(|r| r[4]).collect();
        decreasing.insert(format!("{lambda}"), json!(column.windows(2).all(|v| v[1] < v[0])));
    }
    let all = decreasing.values().all(|v| v == &json!(true));
    result.insert("strictly_decreasing".into(), Value::Object(decreasing));
    result.insert("all_decreasing".into(), json!(all));
    result.insert("ess_line".into(), json!(ess_line(m.s, beta).stage("weyl")?));
    let summary = format!("{} residuals; strictly decreasing in n for every lambda: {all}", rows.len());
    finish(out, result, timings, EXIT_PASS, summary)
}

/// First radius on a 1% geometric ladder from 0.1 where `h = E` is reachable.
fn first_allowed_radius(m: &PotentialModel, energy: f64, dim: usize) -> Result<f64, Failure> {
    let mut r = 0.1;
    while r < 1e6 {
        if radial_shell_point(m, energy, r, dim, true).stage("classical")?.is_some() {
            return Ok(r);
        }
        r *= 1.01;
    }
    Err(invalid("classical.r0", format!("no allowed radius below 1e6 at E = {energy}")))
}

pub fn classical(cfg: &RunConfig) -> Result<Run, Failure> {
    let mut timings = Timings::default();
    let mut out = Outputs::default();
    let mut result = header(cfg, "classical");
    let m = cfg.potential()?;
    let c = &cfg.classical;
    let energy = c.energy.or(cfg.virial.as_ref().map(|v| v.energy)).unwrap_or(-1.0);
    let r0 = match c.r0.value() {
        Some(r0) => r0,
        None => first_allowed_radius(&m, energy, cfg.model.dim)?,
    };
    let start = radial_shell_point(&m, energy, r0, cfg.model.dim, c.outgoing)
        .stage("classical")?
        .ok_or_else(|| invalid("classical.r0", format!("r0 = {r0} is classically forbidden at E = {energy}")))?;
    let bracket = poisson_bracket(&m, &start).stage("classical")?;
    let traj = timings.time("integrate", || integrate_trajectory(&m, &start, c.t_max, c.dt)).stage("classical")?;
    let last = traj.samples.len() - 1;
    out.csv(
        "trajectory.csv",
        &["t", "r", "g", "h"],
        traj.samples
            .iter()
            .enumerate()
            .filter(|(k, _)| k % c.stride == 0 || *k == last)
            .map(|(_, s)| vec![s.t, s.r, s.g, s.h]),
    );
    let fin = &traj.samples[last];
    result.insert("energy".into(), json!(energy));
    result.insert("bracket_at_start".into(), json!(bracket));
    result.insert("t_final".into(), json!(fin.t));
    result.insert("r_final".into(), json!(fin.r));
    result.insert("g_final".into(), json!(fin.g));
    result.insert("max_energy_drift".into(), json!(traj.max_energy_drift()));
    result.insert("truncated".into(), json!(traj.truncated));
    result.insert("r0".into(), json!(r0));
    let summary = format!("r: {r0:.6e} -> {:.6e} over t = {}; relative energy drift {:.2e}", fin.r, fin.t, traj.max_energy_drift());
    finish(out, result, timings, EXIT_PASS, summary)
}

pub fn distort(cfg: &RunConfig) -> Result<Run, Failure> {
    let mut timings = Timings::default();
    let mut out = Outputs::default();
    let mut result = header(cfg, "distort");
    let window = match build_window(cfg)? {
        Some(WindowOutcome::Built(w)) => Some(w),
        _ => None,
    };
    let p = distortion(cfg, window.as_ref())?;
    let g = grid(cfg)?;
    let rows: Vec<Vec<f64>> = timings.time("table", || {
        g.points()
            .par_iter()
            .map(|&r| -> Result<Vec<f64>, Failure> {
                let pt = evaluate(&p, r).stage("distort")?;
                let phi = pt.phi(p.dim);
                Ok(vec![
                    r,
                    pt.r_theta.re,
                    pt.r_theta.im,
                    pt.dr.re,
                    pt.dr.im,
                    pt.jacobian.re,
                    pt.jacobian.im,
                    phi.re,
                    phi.im,
                ])
            })
            .collect::<Result<_, _>>()
    })?;
    out.csv(
        "distort.csv",
        &["r", "r_theta_re", "r_theta_im", "dr_re", "dr_im", "jacobian_re", "jacobian_im", "phi_re", "phi_im"],
        rows,
    );

    // seeded roundtrip of the real map
    let roundtrip = if p.theta.im == 0.0 && p.theta.re != 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let radius = p.cutoff.radius;
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let r_tilde = 10.0 * radius * rng.random::<f64>();
            let inv = invert_r_theta(&p, r_tilde, None).stage("distort")?;
            let back = forward_real(&p, inv.r).stage("distort")?;
            worst = worst.max((back - r_tilde).abs() / r_tilde.max(f64::MIN_POSITIVE));
        }
        Some(worst)
    } else {
        None
    };
    result.insert("radius".into(), json!(p.cutoff.radius));
    result.insert("admissible_radius".into(), json!(p.admissible_radius));
    result.insert("roundtrip_max_relative_error".into(), json!(roundtrip));
    let summary = format!("{} rows; |theta| = {:.4e}, L_s = {:.4e}", g.n, p.theta.norm(), p.admissible_radius);
    finish(out, result, timings, EXIT_PASS, summary)
}

pub fn virial(cfg: &RunConfig) -> Result<Run, Failure> {
    let mut timings = Timings::default();
    let out = Outputs::default();
    let mut result = header(cfg, "virial");
    let m = cfg.potential()?;
    let window = match timings.time("window", || build_window(cfg))? {
        None => return Err(invalid("virial", "needs a [virial] section")),
        Some(WindowOutcome::Rejected(msg)) => {
            result.insert("pass".into(), json!(false));
            result.insert("rejection".into(), json!(msg));
            return finish(out, result, timings, EXIT_CERTIFICATE, format!("rejected: {msg}"));
        }
        Some(WindowOutcome::Built(w)) => w,
    };
    let cert = timings.time("validate", || certify_window(&m, &window))?;
    result.insert("window".into(), json!(window));
    result.insert("certificate".into(), json!(cert));
    result.insert("pass".into(), json!(cert.pass));
    let summary = if cert.pass {
        format!("pass: mu = {}, alpha = {:.6e}, gamma = {:.6e}", window.mu, window.alpha, window.gamma)
    } else {
        format!("fail: {}", cert.failures.join("; "))
    };
    finish(out, result, timings, if cert.pass { EXIT_PASS } else { EXIT_CERTIFICATE }, summary)
}
