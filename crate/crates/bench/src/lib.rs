//! Shared fixtures for the benchmarks.

use resfree_core::{assemble_h_theta, CutoffSpec, DistortionParams, PotentialModel, RadialGrid, SectorOperator};

pub const S: f64 = 0.5;
pub const HBAR: f64 = 0.05;
pub const BETA: f64 = 0.05;

pub fn fixture(n: usize) -> (RadialGrid, DistortionParams, PotentialModel) {
    let grid = RadialGrid::new(0.5, 30.0, n, 3).expect("grid");
    let p = DistortionParams::imaginary(BETA, 3, CutoffSpec::new(1.0, S).expect("cutoff")).expect("params");
    (grid, p, PotentialModel::zero(S))
}

pub fn sector(n: usize) -> SectorOperator {
    let (grid, p, m) = fixture(n);
    assemble_h_theta(&grid, 0, &p, &m, HBAR).expect("assembly")
}
