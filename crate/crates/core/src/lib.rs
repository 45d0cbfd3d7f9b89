//! Complex radial distortion of repulsive Schrödinger operators
//! `H = −(ℏ²/2)Δ − ½|x|^{2s} + q`, finite-difference assembly of the
//! distorted operator `H_θ` per angular sector, virial windows, spectral
//! scans and the classical picture behind them.

pub mod classical;
pub mod distortion;
pub mod error;
pub mod jet;
pub mod linalg;
pub mod operator;
pub mod potential;
pub mod spectral;
pub mod switch;
pub mod virial;

pub use classical::{integrate_trajectory, poisson_bracket, PhasePoint, Trajectory, TrajectorySample};
pub use distortion::{
    admissible_theta_radius, cutoff_eval, invert_r_theta, jacobian_eval, phi_coeff, r_theta_eval,
    CutoffSpec, DistortionParams, DistortionPoint, Inversion,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use operator::{assemble_h_theta, AssemblyMethod, RadialGrid, SectorOperator, Tridiagonal};
pub use potential::{PotentialFamily, PotentialModel};
pub use spectral::{
    coercivity_scan, eigenvalues, ess_line, sigma_min, weyl_residual, weyl_vector, Eigenpair, ScanRect,
    SpectralScan, WeylCutoff, WeylPhase, WeylSpec,
};
pub use virial::{free_case_window, validate_window, Certificate, VirialWindow};
