//! TOML run configuration.

use crate::failure::Failure;
use resfree_core::{PotentialFamily, PotentialModel};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

/// `"auto"` or an explicit number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr {
    Auto(Auto),
    Value(f64),
}

impl Default for AutoOr {
    fn default() -> Self {
        AutoOr::Auto(Auto::Auto)
    }
}

impl AutoOr {
    pub fn value(self) -> Option<f64> {
        match self {
            AutoOr::Auto(_) => None,
            AutoOr::Value(v) => Some(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub s: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub hbar: f64,
    #[serde(default = "default_family")]
    pub family: PotentialFamily,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_beta0")]
    pub beta0: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionConfig {
    /// Imaginary part of θ.
    #[serde(default)]
    pub beta: f64,
    /// Real part of θ.
    #[serde(default)]
    pub theta_re: f64,
    /// Switch scale `R`; `auto` takes the virial window's value, else 1.
    #[serde(default)]
    pub radius: AutoOr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirialConfig {
    pub energy: f64,
    #[serde(default)]
    pub mu: AutoOr,
}

/// Explicit bounds win; otherwise the rectangle is centred on `E − iβμ`
/// with half-widths `βγ` and `βμ/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub re_min: Option<f64>,
    pub re_max: Option<f64>,
    pub im_min: Option<f64>,
    pub im_max: Option<f64>,
    pub half_re: Option<f64>,
    pub half_im: Option<f64>,
    #[serde(default = "default_n_re")]
    pub n_re: usize,
    #[serde(default = "default_n_im")]
    pub n_im: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            re_min: None,
            re_max: None,
            im_min: None,
            im_max: None,
            half_re: None,
            half_im: None,
            n_re: default_n_re(),
            n_im: default_n_im(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylConfig {
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_n_first")]
    pub n_first: u32,
    #[serde(default = "default_n_last")]
    pub n_last: u32,
    /// Imaginary offset for the off-line control residual.
    #[serde(default = "default_offset")]
    pub offset: f64,
    #[serde(default = "default_true")]
    pub integral_phase: bool,
}

impl Default for WeylConfig {
    fn default() -> Self {
        Self {
            lambdas: default_lambdas(),
            n_first: default_n_first(),
            n_last: default_n_last(),
            offset: default_offset(),
            integral_phase: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalConfig {
    /// Start radius; `auto` steps outward to just past the turning point.
    #[serde(default)]
    pub r0: AutoOr,
    /// Defaults to the virial energy, else `−1`.
    pub energy: Option<f64>,
    #[serde(default = "default_true")]
    pub outgoing: bool,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Rows kept in the trajectory table: every `stride`-th step.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

impl Default for ClassicalConfig {
    fn default() -> Self {
        Self {
            r0: AutoOr::default(),
            energy: None,
            outgoing: true,
            t_max: default_t_max(),
            dt: default_dt(),
            stride: default_stride(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub distortion: DistortionConfig,
    pub grid: GridConfig,
    pub virial: Option<VirialConfig>,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default = "default_sectors")]
    pub sectors: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub weyl: WeylConfig,
    #[serde(default)]
    pub classical: ClassicalConfig,
}

fn default_dim() -> usize {
    3
}
fn default_family() -> PotentialFamily {
    PotentialFamily::Zero
}
fn default_rho() -> f64 {
    0.5
}
fn default_beta0() -> f64 {
    1.0
}
fn default_n_re() -> usize {
    21
}
fn default_n_im() -> usize {
    11
}
fn default_lambdas() -> Vec<f64> {
    vec![-1.0, 0.0, 1.0]
}
fn default_n_first() -> u32 {
    3
}
fn default_n_last() -> u32 {
    7
}
fn default_offset() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}
fn default_t_max() -> f64 {
    5.0
}
fn default_dt() -> f64 {
    resfree_core::classical::DEFAULT_DT
}
fn default_stride() -> usize {
    10
}
fn default_sectors() -> Vec<usize> {
    vec![0]
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::Validation(format!("{field}: {msg}"))
}

fn positive(field: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<(), Failure> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn potential(&self) -> Result<PotentialModel, Failure> {
        let m = &self.model;
        let model = match m.family {
            PotentialFamily::Zero => Ok(PotentialModel::zero(m.s)),
            PotentialFamily::PowerDecay => PotentialModel::power_decay(m.kappa, m.s, m.rho, m.beta0),
            PotentialFamily::LogDecay => {
                if m.s != 1.0 {
                    return Err(invalid("model.family", "log-decay needs s = 1"));
                }
                PotentialModel::log_decay(m.kappa, m.rho, m.beta0)
            }
            PotentialFamily::Quadratic => PotentialModel::quadratic(m.kappa, m.s),
        };
        model.map_err(|e| invalid("model", e))
    }

    /// Field-level checks, all before any computation.
    pub fn validate(&self) -> Result<(), Failure> {
        let m = &self.model;
        if !(m.s > 0.0 && m.s <= 1.0) {
            return Err(invalid("model.s", format!("must lie in (0, 1], got {}", m.s)));
        }
        if m.dim < 2 {
            return Err(invalid("model.dim", format!("must be at least 2, got {}", m.dim)));
        }
        positive("model.hbar", m.hbar)?;
        positive("model.beta0", m.beta0)?;
        self.potential()?;

        let d = &self.distortion;
        finite("distortion.theta_re", d.theta_re)?;
        if !(d.beta >= 0.0 && d.beta.is_finite()) {
            return Err(invalid("distortion.beta", format!("must be non-negative, got {}", d.beta)));
        }
        if let Some(r) = d.radius.value() {
            positive("distortion.radius", r)?;
        }

        let g = &self.grid;
        positive("grid.r_min", g.r_min)?;
        finite("grid.r_max", g.r_max)?;
        if g.r_max <= g.r_min {
            return Err(invalid("grid.r_max", format!("must exceed r_min = {}, got {}", g.r_min, g.r_max)));
        }
        if g.n < 3 {
            return Err(invalid("grid.n", format!("needs at least 3 points, got {}", g.n)));
        }

        if let Some(v) = &self.virial {
            finite("virial.energy", v.energy)?;
            match v.mu.value() {
                Some(mu) => positive("virial.mu", mu)?,
                None if !self.potential()?.is_zero() => {
                    return Err(invalid("virial.mu", "\"auto\" is only available for the zero potential"));
                }
                None => {}
            }
        }

        let sc = &self.scan;
        for (name, v) in [
            ("scan.re_min", sc.re_min),
            ("scan.re_max", sc.re_max),
            ("scan.im_min", sc.im_min),
            ("scan.im_max", sc.im_max),
        ] {
            if let Some(v) = v {
                finite(name, v)?;
            }
        }
        for (name, v) in [("scan.half_re", sc.half_re), ("scan.half_im", sc.half_im)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        if sc.n_re == 0 || sc.n_im == 0 {
            return Err(invalid("scan", "n_re and n_im must be positive"));
        }

        if self.sectors.is_empty() {
            return Err(invalid("sectors", "needs at least one angular momentum"));
        }

        let w = &self.weyl;
        if w.lambdas.iter().any(|l| !l.is_finite()) {
            return Err(invalid("weyl.lambdas", "must be finite"));
        }
        if !(1 <= w.n_first && w.n_first <= w.n_last && w.n_last <= 10) {
            return Err(invalid("weyl", format!("needs 1 <= n_first <= n_last <= 10, got {}..{}", w.n_first, w.n_last)));
        }
        positive("weyl.offset", w.offset)?;

        let c = &self.classical;
        if let Some(r0) = c.r0.value() {
            positive("classical.r0", r0)?;
        }
        positive("classical.dt", c.dt)?;
        if !(c.t_max >= 0.0 && c.t_max.is_finite()) {
            return Err(invalid("classical.t_max", format!("must be non-negative, got {}", c.t_max)));
        }
        if let Some(e) = c.energy {
            finite("classical.energy", e)?;
        }
        if c.stride == 0 {
            return Err(invalid("classical.stride", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [model]
        s = 0.5
        hbar = 0.05
        [grid]
        r_min = 0.5
        r_max = 30.0
        n = 200
    "#;

    #[test]
    fn defaults_fill_in() {
        let cfg: RunConfig = toml::from_str(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.model.dim, 3);
        assert_eq!(cfg.sectors, vec![0]);
        assert_eq!(cfg.scan.n_re, 21);
        assert_eq!(cfg.distortion.radius, AutoOr::default());
    }

    #[test]
    fn auto_and_numbers_parse() {
        let text = format!("{MINIMAL}\n[virial]\nenergy = -1.0\nmu = 0.2\n");
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg.virial.unwrap().mu, AutoOr::Value(0.2));
        let text = format!("{MINIMAL}\n[virial]\nenergy = -1.0\nmu = \"auto\"\n");
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg.virial.unwrap().mu.value(), None);
    }

    #[test]
    fn field_errors_name_the_field() {
        let bad = MINIMAL.replace("hbar = 0.05", "hbar = -1.0");
        let cfg: RunConfig = toml::from_str(&bad).unwrap();
        match cfg.validate() {
            Err(Failure::Validation(msg)) => assert!(msg.starts_with("model.hbar"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn auto_mu_needs_zero_potential() {
        let text = MINIMAL.replace("hbar = 0.05", "hbar = 0.05\nfamily = \"power-decay\"\nkappa = 0.1")
            + "\n[virial]\nenergy = -1.0\n";
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        assert!(matches!(cfg.validate(), Err(Failure::Validation(m)) if m.starts_with("virial.mu")));
    }
}
