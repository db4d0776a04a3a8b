//! Reconstruction: generalized Lambda filtered backprojection and Landweber
//! iteration.
//!
//! The Lambda reconstructor backprojects the second energy derivative of the
//! data, `R* (chi_A d^2/dE^2 R f)`; it sharpens edges and is unnormalized,
//! so its values carry qualitative information only. Landweber iteration is
//! gradient descent on the least-squares data fit and approximates the exact
//! solution; with the automatic step it has a monotone residual.

use crate::error::{Error, Result};
use crate::grid::{ImageGrid, Sinogram};
use crate::operator::SystemMatrix;

/// Boundary handling of the energy second-difference filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FbpBoundary {
    /// Treat data beyond the rectangle as zero. Reproduces the sharp-cutoff
    /// boundary behavior of the acquired data.
    #[default]
    ZeroPad,
    /// Second-order one-sided stencils on the first and last energy rows.
    OneSided,
}

/// Step-size policy for Landweber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `tau = 1 / (1.1 ||M||^2)` from a power-iteration estimate; the 10%
    /// margin keeps `tau` below `1 / ||M||^2` even if the estimate is low.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionConfig {
    pub iters: usize,
    pub step: StepSize,
    pub fbp_boundary: FbpBoundary,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self { iters: 200, step: StepSize::Auto, fbp_boundary: FbpBoundary::ZeroPad }
    }
}

/// Final iterate, per-iteration data residuals and step diagnostics.
#[derive(Debug, Clone)]
pub struct LandweberResult {
    pub image: ImageGrid,
    /// `||s - M f_k||_2` after each update, length `iters`.
    pub residual_history: Vec<f64>,
    /// Set when a fixed step exceeds `2 / ||M||^2`: the iteration may
    /// diverge. Never an error.
    pub step_warning: bool,
    pub step_used: f64,
}

/// Central second difference along `E` with the grid's own step:
/// `(s[i-1] - 2 s[i] + s[i+1]) / dE^2`.
pub fn second_derivative_e(s: &Sinogram, boundary: FbpBoundary) -> Result<Sinogram> {
    let n_e = s.n_e();
    if n_e < 3 {
        return Err(Error::Domain(format!("second derivative needs nE >= 3, got {n_e}")));
    }
    if boundary == FbpBoundary::OneSided && n_e < 4 {
        return Err(Error::Domain(format!("one-sided boundary needs nE >= 4, got {n_e}")));
    }
    let de2 = s.de() * s.de();
    let mut out = Sinogram::new(n_e, s.n_x0(), s.extent())?;
    for i_x0 in 0..s.n_x0() {
        let row = &s.values()[i_x0 * n_e..(i_x0 + 1) * n_e];
        let dst = &mut out.values_mut()[i_x0 * n_e..(i_x0 + 1) * n_e];
        for i in 1..n_e - 1 {
            dst[i] = (row[i - 1] - 2.0 * row[i] + row[i + 1]) / de2;
        }
        match boundary {
            FbpBoundary::ZeroPad => {
                dst[0] = (-2.0 * row[0] + row[1]) / de2;
                dst[n_e - 1] = (row[n_e - 2] - 2.0 * row[n_e - 1]) / de2;
            }
            FbpBoundary::OneSided => {
                dst[0] = (2.0 * row[0] - 5.0 * row[1] + 4.0 * row[2] - row[3]) / de2;
                dst[n_e - 1] =
                    (2.0 * row[n_e - 1] - 5.0 * row[n_e - 2] + 4.0 * row[n_e - 3] - row[n_e - 4])
                        / de2;
            }
        }
    }
    Ok(out)
}

/// Generalized Lambda reconstruction: backprojection of the filtered data.
pub fn lambda_fbp(m: &SystemMatrix, s: &Sinogram, boundary: FbpBoundary) -> Result<ImageGrid> {
    m.adjoint(&second_derivative_e(s, boundary)?)
}

/// Landweber iteration `f <- f + tau M^T (s - M f)` from `f = 0`.
pub fn landweber(m: &SystemMatrix, s: &Sinogram, cfg: &ReconstructionConfig) -> Result<LandweberResult> {
    let norm = m.operator_norm(50)?;
    let l = norm * norm;
    let (tau, step_warning) = match cfg.step {
        StepSize::Auto => {
            if l == 0.0 {
                (0.0, false)
            } else {
                (1.0 / (1.1 * l), false)
            }
        }
        StepSize::Fixed(t) => {
            if !(t > 0.0) {
                return Err(Error::Domain(format!("step must be positive, got {t}")));
            }
            (t, l > 0.0 && t > 2.0 / l)
        }
    };

    let mut f = m.geometry().image_grid();
    let mut residual_history = Vec::with_capacity(cfg.iters);
    let mut residual = s.clone();
    for _ in 0..cfg.iters {
        let update = m.adjoint(&residual)?;
        for (fv, uv) in f.values_mut().iter_mut().zip(update.values()) {
            *fv += tau * uv;
        }
        let mf = m.forward(&f)?;
        for (rv, (sv, mv)) in residual.values_mut().iter_mut().zip(s.values().iter().zip(mf.values()))
        {
            *rv = sv - mv;
        }
        residual_history.push(residual.values().iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    Ok(LandweberResult { image: f, residual_history, step_warning, step_used: tau })
}

/// Writes a residual history as CSV with columns `iter,residual`.
pub fn write_residuals_csv(history: &[f64], path: impl AsRef<std::path::Path>) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "iter,residual")?;
    for (i, r) in history.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ScanGeometry;
    use crate::profiles::CurveProfile;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_geometry() -> ScanGeometry {
        ScanGeometry::new(0.01, 2.83, 2.0, (-1.0, 1.0, 0.0, 2.0), 16, 16, 16, 32, None).unwrap()
    }

    fn quadratic_sinogram() -> Sinogram {
        let mut s = Sinogram::new(16, 4, (0.5, 2.5, -1.0, 1.0)).unwrap();
        for i_x0 in 0..4 {
            for i_e in 0..16 {
                let e = s.e_center(i_e);
                s.set(i_e, i_x0, e * e);
            }
        }
        s
    }

    #[test]
    fn second_difference_exact_on_quadratic() {
        let s = quadratic_sinogram();
        let d = second_derivative_e(&s, FbpBoundary::ZeroPad).unwrap();
        for i_x0 in 0..4 {
            for i_e in 1..15 {
                assert!(
                    (d.get(i_e, i_x0) - 2.0).abs() < 1e-10,
                    "interior bin ({i_e},{i_x0}) = {}",
                    d.get(i_e, i_x0)
                );
            }
        }
        // One-sided boundary stencil is also exact for quadratics.
        let d1 = second_derivative_e(&s, FbpBoundary::OneSided).unwrap();
        assert!((d1.get(0, 0) - 2.0).abs() < 1e-8);
        assert!((d1.get(15, 0) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn second_difference_annihilates_affine() {
        let mut s = Sinogram::new(12, 3, (0.5, 2.5, -1.0, 1.0)).unwrap();
        for i_x0 in 0..3 {
            for i_e in 0..12 {
                let e = s.e_center(i_e);
                s.set(i_e, i_x0, 3.0 * e - 1.5 + i_x0 as f64);
            }
        }
        let d = second_derivative_e(&s, FbpBoundary::ZeroPad).unwrap();
        for i_x0 in 0..3 {
            for i_e in 1..11 {
                assert!(d.get(i_e, i_x0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn second_difference_matches_stencil_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut s = Sinogram::new(10, 5, (0.2, 1.2, -1.0, 1.0)).unwrap();
        for v in s.values_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let d = second_derivative_e(&s, FbpBoundary::ZeroPad).unwrap();
        let de2 = s.de() * s.de();
        for i_x0 in 0..5 {
            for i_e in 0..10 {
                let at = |i: isize| -> f64 {
                    if i < 0 || i >= 10 {
                        0.0
                    } else {
                        s.get(i as usize, i_x0)
                    }
                };
                let i = i_e as isize;
                let oracle = (at(i - 1) - 2.0 * at(i) + at(i + 1)) / de2;
                assert!(
                    (d.get(i_e, i_x0) - oracle).abs() <= 1e-14 * (1.0 + oracle.abs()) * (1.0 / de2),
                    "stencil mismatch at ({i_e},{i_x0})"
                );
            }
        }
    }

    #[test]
    fn second_difference_size_errors() {
        let s = Sinogram::new(2, 2, (0.5, 1.5, -1.0, 1.0)).unwrap();
        assert!(matches!(second_derivative_e(&s, FbpBoundary::ZeroPad), Err(Error::Domain(_))));
        let s3 = Sinogram::new(3, 2, (0.5, 1.5, -1.0, 1.0)).unwrap();
        assert!(second_derivative_e(&s3, FbpBoundary::ZeroPad).is_ok());
        assert!(matches!(second_derivative_e(&s3, FbpBoundary::OneSided), Err(Error::Domain(_))));
    }

    #[test]
    fn lambda_fbp_zero_and_linear() {
        let geom = small_geometry();
        let m = SystemMatrix::build(&CurveProfile::compton(), &geom).unwrap();
        let zero = geom.sinogram();
        let img = lambda_fbp(&m, &zero, FbpBoundary::ZeroPad).unwrap();
        assert!(img.values().iter().all(|v| *v == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s1 = geom.sinogram();
        let mut s2 = geom.sinogram();
        for v in s1.values_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        for v in s2.values_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let a = lambda_fbp(&m, &s1, FbpBoundary::ZeroPad).unwrap();
        let b = lambda_fbp(&m, &s2, FbpBoundary::ZeroPad).unwrap();
        let mut sum = geom.sinogram();
        for i in 0..sum.values().len() {
            sum.values_mut()[i] = s1.values()[i] + s2.values()[i];
        }
        let ab = lambda_fbp(&m, &sum, FbpBoundary::ZeroPad).unwrap();
        for i in 0..ab.values().len() {
            let rhs = a.values()[i] + b.values()[i];
            assert!((ab.values()[i] - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn landweber_zero_data() {
        let geom = small_geometry();
        let m = SystemMatrix::build(&CurveProfile::compton(), &geom).unwrap();
        let cfg = ReconstructionConfig { iters: 5, ..Default::default() };
        let res = landweber(&m, &geom.sinogram(), &cfg).unwrap();
        assert!(res.image.values().iter().all(|v| *v == 0.0));
        assert!(res.residual_history.iter().all(|r| *r == 0.0));
        assert!(!res.step_warning);
    }

    #[test]
    fn landweber_zero_iterations() {
        let geom = small_geometry();
        let m = SystemMatrix::build(&CurveProfile::compton(), &geom).unwrap();
        let mut s = geom.sinogram();
        s.values_mut().fill(1.0);
        let cfg = ReconstructionConfig { iters: 0, ..Default::default() };
        let res = landweber(&m, &s, &cfg).unwrap();
        assert!(res.image.values().iter().all(|v| *v == 0.0));
        assert!(res.residual_history.is_empty());
    }

    #[test]
    fn landweber_monotone_residual_on_consistent_data() {
        let geom = small_geometry();
        let m = SystemMatrix::build(&CurveProfile::compton(), &geom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut f_true = geom.image_grid();
        for v in f_true.values_mut() {
            *v = rng.gen_range(0.0..1.0);
        }
        let s = m.forward(&f_true).unwrap();
        let cfg = ReconstructionConfig { iters: 50, ..Default::default() };
        let res = landweber(&m, &s, &cfg).unwrap();
        for w in res.residual_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "residual increased: {} -> {}", w[0], w[1]);
        }
        assert!(res.residual_history[49] < res.residual_history[0]);
        assert!(!res.step_warning);
    }

    #[test]
    fn landweber_flags_oversized_fixed_step() {
        let geom = small_geometry();
        let m = SystemMatrix::build(&CurveProfile::compton(), &geom).unwrap();
        let norm = m.operator_norm(50).unwrap();
        let mut s = geom.sinogram();
        s.values_mut().fill(1.0);
        let cfg = ReconstructionConfig {
            iters: 2,
            step: StepSize::Fixed(10.0 / (norm * norm)),
            fbp_boundary: FbpBoundary::ZeroPad,
        };
        let res = landweber(&m, &s, &cfg).unwrap();
        assert!(res.step_warning, "step beyond 2/||M||^2 must be flagged");
    }
}
