//! Generalized cone (broken-ray) Radon transforms in two dimensions.
//!
//! A curve profile `q` with `q(0) = 0` and `q > 0` on `(0, inf)` generates
//! integration curves `x2 = E q(+-(x1 - x0))`: a branch and its mirror image
//! about the vertical line `x1 = x0`, scaled by the energy `E` and translated
//! by `x0`. This crate provides:
//!
//! - profile families (straight rays, Bragg curves, monomials, sinusoids,
//!   offset Bragg curves, tabulated data) with derivatives and the quotient
//!   analysis `g = q'/q` ([`profiles`]);
//! - a checker for the Bolker condition `g' != 0`, monotone inversion and
//!   level sets of `g` ([`profiles`]);
//! - a sparse forward/adjoint operator pair discretizing the transform in
//!   arc-length measure ([`operator`]);
//! - Lambda filtered backprojection and Landweber iteration ([`recon`]);
//! - the canonical-relation coordinate maps, visibility tests, angular
//!   coverage and artifact prediction for profiles that violate Bolker
//!   ([`microlocal`]);
//! - grid containers with a simple binary format, PGM and CSV export
//!   ([`grid`]), phantoms ([`phantom`]) and experiment presets ([`preset`]).
//!
//! Heavy loops (operator assembly, projections, field scans, artifact
//! sweeps) are data-parallel under the default `parallel` feature and fall
//! back to sequential loops without it; results are identical either way.

pub mod error;
mod exec;
pub mod grid;
pub mod microlocal;
pub mod operator;
pub mod phantom;
pub mod preset;
pub mod profiles;
pub mod recon;

pub use error::{Error, Result};
pub use grid::{GridData, ImageGrid, ScanGeometry, Sinogram};
pub use microlocal::{
    coverage_map, dilate_mask, forward_wavefront_map, inverse_data_map, predict_artifacts,
    visibility_test, ArtifactPoint, ArtifactPrediction, ArtifactSource, CoverageSample,
    DataCovector, Visibility, WavefrontElement,
};
pub use operator::SystemMatrix;
pub use phantom::PhantomSpec;
pub use preset::{AppendixAScan, ExperimentPreset};
pub use profiles::{
    bragg_offset_bolker_scan, bragg_offset_h_prime, bragg_offset_q, BolkerReport, CurveProfile,
    ProfileFamily,
};
pub use recon::{
    lambda_fbp, landweber, second_derivative_e, FbpBoundary, LandweberResult,
    ReconstructionConfig, StepSize,
};
