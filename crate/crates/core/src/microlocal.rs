//! Canonical-relation coordinate maps, visibility of singularities, angular
//! coverage, and artifact prediction.
//!
//! In 2D the canonical relation of the two-branch transform is coordinatized
//! by `(E, x0, r, omega, sigma)` with branch sign `omega` in `{-1, +1}`. The
//! data-side projection sends these to `(E, x0, eta, xi_d)` with
//! `eta = -sigma q(r)` and `xi_d = -sigma E q'(r) omega`; the image-side
//! projection sends them to the point `(x0 + r omega, E q(r))` with covector
//! `(sigma E q'(r) omega, -sigma)`. Solving the image-side projection for a
//! given covector recovers
//!
//! `omega = -sign(xi1 xi2)`, `r = g^-1(|xi1| / (x2 |xi2|))`, `sigma = -xi2`.
//!
//! When `g` is injective these maps pair each image singularity with exactly
//! one data singularity. When `g` is not injective, radii `r1 != r2` with
//! `g(r1) = g(r2)` generate artifacts on the partner curve points; their
//! relative amplitude is `sqrt(q^2(r1) + q'(r1)^2) / sqrt(q^2(r2) + q'(r2)^2)`.

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{ImageGrid, ScanGeometry};
use crate::profiles::CurveProfile;

/// An image-space singularity: base point with `x2 > 0` and a nonzero
/// covector.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefrontElement {
    pub x: [f64; 2],
    pub xi: [f64; 2],
}

impl WavefrontElement {
    pub fn new(x: [f64; 2], xi: [f64; 2]) -> Result<Self> {
        if xi == [0.0, 0.0] {
            return Err(Error::Domain("covector must be nonzero".into()));
        }
        if !(x[1] > 0.0) {
            return Err(Error::Domain(format!(
                "wavefront base point must have x2 > 0, got {}",
                x[1]
            )));
        }
        Ok(Self { x, xi })
    }
}

/// A data-space singularity `(E, x0, eta, xi_d)` together with its canonical
/// coordinates `(r, omega, sigma)` on the relation.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCovector {
    pub e: f64,
    pub x0: f64,
    /// Covector component dual to `E`: `-sigma q(r)`.
    pub eta: f64,
    /// Covector component dual to `x0`: `-sigma E q'(r) omega`.
    pub xi_d: f64,
    pub r: f64,
    /// Branch sign, `+1` for `x1 > x0` and `-1` for `x1 < x0`.
    pub omega: f64,
    pub sigma: f64,
}

/// Outcome of the visibility test for one covector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visibility {
    /// Maps into the open data rectangle; recoverable by filtered
    /// backprojection.
    Visible,
    /// Maps outside the closed data rectangle, or has a vanishing component.
    Invisible,
    /// Maps exactly onto the data-rectangle boundary; deliberately left
    /// unclassified.
    Boundary,
}

/// One sampled direction of a coverage map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageSample {
    pub angle: f64,
    pub visibility: Visibility,
}

/// A predicted artifact point with its covector and relative amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactPoint {
    pub x: [f64; 2],
    pub xi: [f64; 2],
    /// `sigma2 / sigma1 = sqrt(q^2(r1) + q'(r1)^2) / sqrt(q^2(r2) + q'(r2)^2)`.
    pub amplitude: f64,
    pub r1: f64,
    pub r2: f64,
    pub e: f64,
    pub x0: f64,
}

/// Artifacts generated by one source singularity.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactPrediction {
    pub source: WavefrontElement,
    pub points: Vec<ArtifactPoint>,
}

/// What seeds an artifact sweep.
#[derive(Debug, Clone)]
pub enum ArtifactSource<'a> {
    /// Explicit wavefront elements (e.g. disc boundary normals).
    Covectors(&'a [WavefrontElement]),
    /// A point singular in all directions; realized by sweeping the vertex
    /// position over `[-c, c]`, since every acquired curve through the point
    /// carries a normal covector there.
    Point([f64; 2]),
}

/// Branch sign and the `g`-value a covector must solve: `omega = -sign(xi1
/// xi2)` and `w = |xi1| / (x2 |xi2|)`. Fails on vanishing components.
fn covector_coords(w: &WavefrontElement) -> Result<(f64, f64)> {
    let [xi1, xi2] = w.xi;
    if xi1 == 0.0 || xi2 == 0.0 {
        return Err(Error::InvisibleCovector);
    }
    if !(w.x[1] > 0.0) {
        return Err(Error::Domain(format!("base point must have x2 > 0, got {}", w.x[1])));
    }
    let omega = -(xi1 * xi2).signum();
    let wval = xi1.abs() / (w.x[1] * xi2.abs());
    Ok((omega, wval))
}

/// Maps an image singularity to its data singularity through the canonical
/// relation, inverting `g` on `[r_min, r_max]`. Requires a profile whose `g`
/// is strictly monotone there.
pub fn forward_wavefront_map(
    profile: &CurveProfile,
    w: &WavefrontElement,
    r_min: f64,
    r_max: f64,
) -> Result<DataCovector> {
    let (omega, wval) = covector_coords(w)?;
    let r = profile.invert_g(wval, r_min, r_max)?;
    let (q, qp, _) = profile.q_derivs(r)?;
    let sigma = -w.xi[1];
    let e = w.x[1] / q;
    let x0 = w.x[0] - r * omega;
    Ok(DataCovector {
        e,
        x0,
        eta: -sigma * q,
        xi_d: -sigma * e * qp * omega,
        r,
        omega,
        sigma,
    })
}

/// Maps a data singularity back to image space:
/// `x = (x0 + r omega, E q(r))`, `xi = (sigma E q'(r) omega, -sigma)`.
pub fn inverse_data_map(profile: &CurveProfile, d: &DataCovector) -> Result<WavefrontElement> {
    if !(d.e > 0.0) {
        return Err(Error::Domain(format!("energy must be positive, got {}", d.e)));
    }
    if d.sigma == 0.0 {
        return Err(Error::Domain("sigma must be nonzero".into()));
    }
    if d.omega != 1.0 && d.omega != -1.0 {
        return Err(Error::Domain(format!("omega must be +-1, got {}", d.omega)));
    }
    let (q, qp, _) = profile.q_derivs(d.r)?;
    WavefrontElement::new(
        [d.x0 + d.r * d.omega, d.e * q],
        [d.sigma * d.e * qp * d.omega, -d.sigma],
    )
}

/// Tests whether a covector maps into the open data rectangle
/// `(a, b) x (-c, c)`. Exact boundary hits are reported as
/// [`Visibility::Boundary`], never classified. For profiles violating the
/// Bolker condition every solution of `g(r) = w` is tried; one visible
/// solution suffices.
pub fn visibility_test(
    profile: &CurveProfile,
    geom: &ScanGeometry,
    w: &WavefrontElement,
) -> Result<Visibility> {
    let (omega, wval) = match covector_coords(w) {
        Ok(v) => v,
        Err(Error::InvisibleCovector) => return Ok(Visibility::Invisible),
        Err(e) => return Err(e),
    };
    let (r_min, r_max) = geom.r_range();
    let roots = profile.g_level_set_value(wval, r_min, r_max)?;
    let tol_e = 1e-9 * (geom.b - geom.a);
    let tol_x0 = 1e-9 * geom.c;
    let mut any_boundary = false;
    for r in roots {
        let e = w.x[1] / profile.q(r)?;
        let x0 = w.x[0] - r * omega;
        let inside_e = e > geom.a && e < geom.b;
        let inside_x0 = x0 > -geom.c && x0 < geom.c;
        if inside_e && inside_x0 {
            return Ok(Visibility::Visible);
        }
        let on_e_edge = (e - geom.a).abs() <= tol_e || (e - geom.b).abs() <= tol_e;
        let on_x0_edge = (x0 - geom.c).abs() <= tol_x0 || (x0 + geom.c).abs() <= tol_x0;
        if (on_e_edge && (inside_x0 || on_x0_edge)) || (on_x0_edge && (inside_e || on_e_edge)) {
            any_boundary = true;
        }
    }
    Ok(if any_boundary { Visibility::Boundary } else { Visibility::Invisible })
}

/// Samples covector directions on the half-circle (antipodal directions are
/// equivalent under the test) and classifies each.
pub fn coverage_map(
    profile: &CurveProfile,
    geom: &ScanGeometry,
    x: [f64; 2],
    n_angles: usize,
) -> Result<Vec<CoverageSample>> {
    if !(x[1] > 0.0) {
        return Err(Error::Domain(format!("coverage point must have x2 > 0, got {}", x[1])));
    }
    if n_angles == 0 {
        return Err(Error::Domain("need at least one angle".into()));
    }
    let samples: Vec<Result<CoverageSample>> = exec::map_indexed(n_angles, |k| {
        let angle = std::f64::consts::PI * (k as f64 / n_angles as f64);
        let xi = [angle.cos(), angle.sin()];
        let w = WavefrontElement { x, xi };
        visibility_test(profile, geom, &w).map(|visibility| CoverageSample { angle, visibility })
    });
    samples.into_iter().collect()
}

/// Fraction of sampled directions classified visible.
pub fn visible_fraction(samples: &[CoverageSample]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().filter(|s| s.visibility == Visibility::Visible).count() as f64
        / samples.len() as f64
}

/// Predicts artifacts for the given sources and rasterizes them into a mask
/// over the geometry's image grid.
///
/// For each source curve with radius `r1`, every partner radius `r2 != r1`
/// with `g(r2) = g(r1)` on the scan window contributes an artifact at
/// `(x0 + omega r2, E q(r2))` with covector `(sigma2 E q'(r2) omega, -sigma2)`
/// where `sigma2 = sigma1 * amplitude`. Curves whose `(E, x0)` falls outside
/// the data rectangle are skipped: they are never acquired. Sources with no
/// partners produce no predictions, so under the Bolker condition the result
/// is empty.
pub fn predict_artifacts(
    profile: &CurveProfile,
    geom: &ScanGeometry,
    source: ArtifactSource<'_>,
    x0_samples: usize,
) -> Result<(Vec<ArtifactPrediction>, ImageGrid)> {
    let (r_min, r_max) = geom.r_range();
    let predictions: Vec<Result<Option<ArtifactPrediction>>> = match source {
        ArtifactSource::Covectors(ws) => exec::map_indexed(ws.len(), |i| {
            predict_for_covector(profile, geom, &ws[i], r_min, r_max)
        }),
        ArtifactSource::Point(p) => {
            if x0_samples == 0 {
                return Err(Error::Domain("need at least one x0 sample".into()));
            }
            if !(p[1] > 0.0) {
                return Err(Error::Domain(format!("point must have x2 > 0, got {}", p[1])));
            }
            let dx0 = 2.0 * geom.c / x0_samples as f64;
            exec::map_indexed(x0_samples, |k| {
                let x0 = -geom.c + (k as f64 + 0.5) * dx0;
                predict_for_point(profile, geom, p, x0, r_min, r_max)
            })
        }
    };
    let mut out = Vec::new();
    for p in predictions {
        if let Some(pred) = p? {
            out.push(pred);
        }
    }
    let mut mask = geom.image_grid();
    for pred in &out {
        for pt in &pred.points {
            if let Some((ix, iy)) = mask.pixel_containing(pt.x[0], pt.x[1]) {
                mask.set(ix, iy, 1.0);
            }
        }
    }
    Ok((out, mask))
}

/// Artifact partners for one explicit covector. For non-injective `g` every
/// solution `r1` of `g(r1) = w` identifies a curve through the base point
/// normal to the covector; each acquired one spawns artifacts at the other
/// solutions.
fn predict_for_covector(
    profile: &CurveProfile,
    geom: &ScanGeometry,
    w: &WavefrontElement,
    r_min: f64,
    r_max: f64,
) -> Result<Option<ArtifactPrediction>> {
    let (omega, wval) = match covector_coords(w) {
        Ok(v) => v,
        Err(Error::InvisibleCovector) => return Ok(None),
        Err(e) => return Err(e),
    };
    let roots = profile.g_level_set_value(wval, r_min, r_max)?;
    if roots.len() < 2 {
        return Ok(None);
    }
    let sigma1 = -w.xi[1];
    let mut points = Vec::new();
    for &r1 in &roots {
        let e = w.x[1] / profile.q(r1)?;
        let x0 = w.x[0] - r1 * omega;
        if !(e > geom.a && e < geom.b) || !(x0 > -geom.c && x0 < geom.c) {
            continue;
        }
        emit_partners(profile, &roots, r1, e, x0, omega, sigma1, &mut points)?;
    }
    if points.is_empty() {
        return Ok(None);
    }
    Ok(Some(ArtifactPrediction { source: w.clone(), points }))
}

/// Artifact partners for a point singularity seen from the vertex at `x0`.
fn predict_for_point(
    profile: &CurveProfile,
    geom: &ScanGeometry,
    p: [f64; 2],
    x0: f64,
    r_min: f64,
    r_max: f64,
) -> Result<Option<ArtifactPrediction>> {
    let d = p[0] - x0;
    if d == 0.0 {
        return Ok(None); // vertex axis through the point; no branch radius
    }
    let omega = d.signum();
    let r1 = d.abs();
    if !(r1 >= r_min && r1 <= r_max) {
        return Ok(None);
    }
    let (q1, qp1, _) = profile.q_derivs(r1)?;
    let e = p[1] / q1;
    if !(e > geom.a && e < geom.b) {
        return Ok(None);
    }
    let sigma1 = 1.0;
    let source = WavefrontElement::new(p, [sigma1 * e * qp1 * omega, -sigma1])?;
    let roots = profile.g_level_set(r1, r_min, r_max)?;
    let mut points = Vec::new();
    emit_partners(profile, &roots, r1, e, x0, omega, sigma1, &mut points)?;
    if points.is_empty() {
        return Ok(None);
    }
    Ok(Some(ArtifactPrediction { source, points }))
}

#[allow(clippy::too_many_arguments)]
fn emit_partners(
    profile: &CurveProfile,
    roots: &[f64],
    r1: f64,
    e: f64,
    x0: f64,
    omega: f64,
    sigma1: f64,
    points: &mut Vec<ArtifactPoint>,
) -> Result<()> {
    let (q1, qp1, _) = profile.q_derivs(r1)?;
    let merge = 1e-7 * r1.max(1.0);
    for &r2 in roots {
        if (r2 - r1).abs() <= merge {
            continue; // the diagonal pair reproduces the true singularity
        }
        let (q2, qp2, _) = profile.q_derivs(r2)?;
        let amplitude = (q1 * q1 + qp1 * qp1).sqrt() / (q2 * q2 + qp2 * qp2).sqrt();
        let sigma2 = sigma1 * amplitude;
        points.push(ArtifactPoint {
            x: [x0 + omega * r2, e * q2],
            xi: [sigma2 * e * qp2 * omega, -sigma2],
            amplitude,
            r1,
            r2,
            e,
            x0,
        });
    }
    Ok(())
}

/// Chebyshev dilation of a binary mask by `radius` pixels.
pub fn dilate_mask(mask: &ImageGrid, radius: usize) -> ImageGrid {
    let (nx, ny) = (mask.nx(), mask.ny());
    let mut out = ImageGrid::new(nx, ny, mask.extent()).expect("same shape");
    let r = radius as isize;
    for iy in 0..ny as isize {
        for ix in 0..nx as isize {
            if mask.get(ix as usize, iy as usize) == 0.0 {
                continue;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    let (jx, jy) = (ix + dx, iy + dy);
                    if jx >= 0 && jx < nx as isize && jy >= 0 && jy < ny as isize {
                        out.set(jx as usize, jy as usize, 1.0);
                    }
                }
            }
        }
    }
    out
}

/// Writes artifact predictions as CSV with columns
/// `x1,x2,xi1,xi2,amplitude,r1,r2,E,x0`.
pub fn write_artifacts_csv(
    predictions: &[ArtifactPrediction],
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x1,x2,xi1,xi2,amplitude,r1,r2,E,x0")?;
    for pred in predictions {
        for p in &pred.points {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                p.x[0], p.x[1], p.xi[0], p.xi[1], p.amplitude, p.r1, p.r2, p.e, p.x0
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a coverage map as CSV with columns `angle,state`.
pub fn write_coverage_csv(
    samples: &[CoverageSample],
    path: impl AsRef<std::path::Path>,
) -> Result<()> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "angle,state")?;
    for s in samples {
        let state = match s.visibility {
            Visibility::Visible => "visible",
            Visibility::Invisible => "invisible",
            Visibility::Boundary => "boundary",
        };
        writeln!(w, "{},{}", s.angle, state)?;
    }
    w.flush()?;
    Ok(())
}
