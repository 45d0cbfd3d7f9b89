//! Collected run outputs, written by one writer at the end of a run.

use crate::failure::Failure;
use resfree_core::spectral::ScanPoint;
use resfree_core::Eigenpair;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Default)]
pub struct Outputs {
    files: BTreeMap<String, Vec<u8>>,
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.insert(name.into(), bytes);
    }

    pub fn json<T: Serialize>(&mut self, name: impl Into<String>, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        text.push('\n');
        self.add(name, text.into_bytes());
        Ok(())
    }

    pub fn csv(&mut self, name: impl Into<String>, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            let cells: Vec<String> = row.into_iter().map(num).collect();
            let _ = writeln!(text, "{}", cells.join(","));
        }
        self.add(name, text.into_bytes());
    }

    pub fn scan_csv(&mut self, name: impl Into<String>, points: &[ScanPoint]) {
        self.csv(name, &["re_z", "im_z", "sigma_min"], points.iter().map(|p| vec![p.re_z, p.im_z, p.sigma_min]));
    }

    pub fn eigen_json(&mut self, name: impl Into<String>, eig: &[Eigenpair]) -> Result<(), Failure> {
        #[derive(Serialize)]
        struct Row {
            value_re: f64,
            value_im: f64,
            boundary_mass: f64,
            interior_supported: bool,
        }
        let rows: Vec<Row> = eig
            .iter()
            .map(|e| Row {
                value_re: e.value_re,
                value_im: e.value_im,
                boundary_mass: e.boundary_mass,
                interior_supported: e.is_interior_supported(),
            })
            .collect();
        self.json(name, &rows)
    }

    pub fn write_all(&self, dir: &Path) -> Result<(), Failure> {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}
