//! Curve profiles `q` and the scalar analysis derived from them.
//!
//! A profile generates the integration curves `x2 = E * q(|x1 - x0|)`. The
//! quotient `g = q'/q` controls everything microlocal about the transform:
//! the broken-ray operator satisfies the Bolker condition exactly when `g'`
//! never vanishes (equivalently `q*q'' - q'^2` is nowhere zero), and the
//! canonical-relation coordinate maps invert `g`. This module houses the
//! profile families, their derivatives, the Bolker checker, monotone
//! inversion and level sets of `g`, and the offset Bragg curve analysis.

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::ImageGrid;

/// Default step for finite-difference derivatives of profiles without
/// closed-form derivatives (offset Bragg, tabulated).
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// The supported curve families.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileFamily {
    /// `q(r) = r^alpha`, `alpha > 0`.
    Monomial { alpha: f64 },
    /// Straight broken rays, `q(r) = r` (monomial with `alpha = 1`).
    Compton,
    /// Bragg curves, `q(r) = r / sqrt(r^2 + 1)`.
    Bragg,
    /// `q(r) = (1 + eps) r + sin r`, `eps > 0`. Violates Bolker.
    Sinusoid { eps: f64 },
    /// Offset Bragg curve `q(r) = bragg_offset_q(r, x2)` for a scan-line
    /// offset `x2` in `(-1, 1)`. Derivatives by finite differences.
    BraggOffset { x2: f64 },
    /// Monotone cubic interpolation of `(r, q)` knots. The first knot must be
    /// `(0, 0)` and all later values positive.
    Tabulated { knots: Vec<(f64, f64)> },
}

/// A curve profile together with the finite-difference step used for families
/// without analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveProfile {
    family: ProfileFamily,
    fd_step: f64,
}

impl CurveProfile {
    pub fn compton() -> Self {
        Self { family: ProfileFamily::Compton, fd_step: DEFAULT_FD_STEP }
    }

    pub fn bragg() -> Self {
        Self { family: ProfileFamily::Bragg, fd_step: DEFAULT_FD_STEP }
    }

    pub fn monomial(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!("monomial exponent must be positive, got {alpha}")));
        }
        Ok(Self { family: ProfileFamily::Monomial { alpha }, fd_step: DEFAULT_FD_STEP })
    }

    pub fn sinusoid(eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("sinusoid eps must be positive, got {eps}")));
        }
        Ok(Self { family: ProfileFamily::Sinusoid { eps }, fd_step: DEFAULT_FD_STEP })
    }

    pub fn bragg_offset(x2: f64) -> Result<Self> {
        if !(x2.abs() < 1.0) {
            return Err(Error::Domain(format!("bragg offset x2 must lie in (-1, 1), got {x2}")));
        }
        Ok(Self { family: ProfileFamily::BraggOffset { x2 }, fd_step: DEFAULT_FD_STEP })
    }

    /// Builds a tabulated profile. Knots must have strictly increasing `r`,
    /// start at `(0, 0)` and have `q > 0` afterwards.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 3 {
            return Err(Error::InvalidProfile("tabulated profile needs at least 3 knots".into()));
        }
        if knots[0] != (0.0, 0.0) {
            return Err(Error::InvalidProfile("tabulated profile must start at the knot (0, 0)".into()));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidProfile("tabulated knot radii must be strictly increasing".into()));
            }
        }
        if knots.iter().skip(1).any(|&(_, q)| !(q > 0.0)) {
            return Err(Error::InvalidProfile("tabulated q values must be positive for r > 0".into()));
        }
        Ok(Self { family: ProfileFamily::Tabulated { knots }, fd_step: DEFAULT_FD_STEP })
    }

    pub fn with_fd_step(mut self, fd_step: f64) -> Result<Self> {
        if !(fd_step > 0.0) {
            return Err(Error::Domain(format!("fd step must be positive, got {fd_step}")));
        }
        self.fd_step = fd_step;
        Ok(self)
    }

    pub fn family(&self) -> &ProfileFamily {
        &self.family
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    /// Parses the CLI profile string: `compton`, `bragg`, `monomial:<alpha>`,
    /// `sinusoid:<eps>`, `bragg-offset:<x2>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Domain(format!("profile spec '{spec}': {msg}"));
        let mut it = spec.splitn(2, ':');
        let name = it.next().unwrap_or("");
        let arg = it.next();
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| bad("missing numeric parameter"))?
                .parse::<f64>()
                .map_err(|_| bad("parameter is not a decimal literal"))
        };
        match name {
            "compton" if arg.is_none() => Ok(Self::compton()),
            "bragg" if arg.is_none() => Ok(Self::bragg()),
            "monomial" => Self::monomial(num(arg)?),
            "sinusoid" => Self::sinusoid(num(arg)?),
            "bragg-offset" => Self::bragg_offset(num(arg)?),
            _ => Err(bad("unknown profile family")),
        }
    }

    /// True when the family has analytic first and second derivatives.
    pub fn has_analytic_derivatives(&self) -> bool {
        matches!(
            self.family,
            ProfileFamily::Monomial { .. }
                | ProfileFamily::Compton
                | ProfileFamily::Bragg
                | ProfileFamily::Sinusoid { .. }
        )
    }

    /// Evaluates `q(r)` for `r >= 0`.
    pub fn q(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("q is defined for r >= 0, got r = {r}")));
        }
        Ok(match &self.family {
            ProfileFamily::Compton => r,
            ProfileFamily::Monomial { alpha } => {
                if *alpha == 1.0 {
                    r
                } else {
                    r.powf(*alpha)
                }
            }
            ProfileFamily::Bragg => r / (r * r + 1.0).sqrt(),
            ProfileFamily::Sinusoid { eps } => (1.0 + eps) * r + r.sin(),
            ProfileFamily::BraggOffset { x2 } => bragg_offset_q(r, *x2)?,
            ProfileFamily::Tabulated { knots } => eval_monotone_cubic(knots, r)?,
        })
    }

    /// Evaluates `(q, q', q'')` at `r > 0`. Closed-form families use analytic
    /// derivatives; the rest use central finite differences with `fd_step`.
    pub fn q_derivs(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("derivatives are defined for r > 0, got r = {r}")));
        }
        match &self.family {
            ProfileFamily::Compton => Ok((r, 1.0, 0.0)),
            ProfileFamily::Monomial { alpha } => {
                let a = *alpha;
                if a == 1.0 {
                    Ok((r, 1.0, 0.0))
                } else {
                    Ok((r.powf(a), a * r.powf(a - 1.0), a * (a - 1.0) * r.powf(a - 2.0)))
                }
            }
            ProfileFamily::Bragg => {
                let t = r * r + 1.0;
                let st = t.sqrt();
                Ok((r / st, 1.0 / (t * st), -3.0 * r / (t * t * st)))
            }
            ProfileFamily::Sinusoid { eps } => {
                Ok(((1.0 + eps) * r + r.sin(), (1.0 + eps) + r.cos(), -r.sin()))
            }
            _ => self.fd_derivs(r),
        }
    }

    fn fd_derivs(&self, r: f64) -> Result<(f64, f64, f64)> {
        let h = self.fd_step;
        let q0 = self.q(r)?;
        if r > h {
            let qp = self.q(r + h)?;
            let qm = self.q(r - h)?;
            Ok((q0, (qp - qm) / (2.0 * h), (qp - 2.0 * q0 + qm) / (h * h)))
        } else {
            // Too close to the vertex for a central stencil; fall back to a
            // one-sided stencil on [r, r + 2h].
            let q1 = self.q(r + h)?;
            let q2 = self.q(r + 2.0 * h)?;
            Ok((q0, (-3.0 * q0 + 4.0 * q1 - q2) / (2.0 * h), (q0 - 2.0 * q1 + q2) / (h * h)))
        }
    }

    /// Evaluates `g(r) = q'(r) / q(r)` for `r > 0`.
    pub fn g(&self, r: f64) -> Result<f64> {
        let (q, qp, _) = self.q_derivs(r)?;
        if q == 0.0 {
            return Err(Error::Singularity(format!("q({r}) = 0, g = q'/q undefined")));
        }
        if q < 0.0 {
            return Err(Error::InvalidProfile(format!("q({r}) = {q} < 0 violates positivity")));
        }
        Ok(qp / q)
    }

    /// Evaluates `g'(r) = q''/q - (q'/q)^2 = (q q'' - q'^2)/q^2`.
    pub fn g_prime(&self, r: f64) -> Result<f64> {
        let (q, qp, qpp) = self.q_derivs(r)?;
        if q == 0.0 {
            return Err(Error::Singularity(format!("q({r}) = 0, g' undefined")));
        }
        if q < 0.0 {
            return Err(Error::InvalidProfile(format!("q({r}) = {q} < 0 violates positivity")));
        }
        let w = qp / q;
        Ok(qpp / q - w * w)
    }

    /// Determinant of the left-projection differential for one branch:
    /// `sigma * E * (q(r) q''(r) - q'(r)^2)`. Its zero set in `r` coincides
    /// with the zero set of `g'`.
    pub fn left_projection_jacobian_det(&self, e: f64, sigma: f64, r: f64) -> Result<f64> {
        if !(e > 0.0) {
            return Err(Error::Domain(format!("energy must be positive, got {e}")));
        }
        if sigma == 0.0 || !sigma.is_finite() {
            return Err(Error::Domain("sigma must be nonzero and finite".into()));
        }
        let (q, qp, qpp) = self.q_derivs(r)?;
        Ok(sigma * e * (q * qpp - qp * qp))
    }

    /// Samples `g'` on `[r_min, r_max]`, brackets its sign changes, refines
    /// each zero by bisection and checks strict monotonicity of `g`.
    pub fn check_bolker(&self, r_min: f64, r_max: f64, n_samples: usize) -> Result<BolkerReport> {
        if !(r_min > 0.0 && r_min < r_max) {
            return Err(Error::Domain(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if n_samples < 100 {
            return Err(Error::Domain(format!("need at least 100 samples, got {n_samples}")));
        }
        let step = (r_max - r_min) / (n_samples - 1) as f64;
        let rs: Vec<f64> = (0..n_samples).map(|i| r_min + step * i as f64).collect();

        let mut gs = Vec::with_capacity(n_samples);
        let mut gps = Vec::with_capacity(n_samples);
        let mut g_positive = true;
        for &r in &rs {
            let (q, qp, qpp) = self.q_derivs(r)?;
            if !(q > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "q({r}) = {q} is not positive on the scan range"
                )));
            }
            let g = qp / q;
            if !(g > 0.0) {
                g_positive = false;
            }
            gs.push(g);
            let w = qp / q;
            gps.push(qpp / q - w * w);
        }

        let max_abs_gp = gps.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let touch_tol = 1e-9 * max_abs_gp;

        let gp_at = |r: f64| self.g_prime(r).unwrap_or(f64::NAN);
        let mut zeros: Vec<f64> = Vec::new();
        for i in 0..n_samples - 1 {
            let (a, b) = (gps[i], gps[i + 1]);
            if a == 0.0 {
                zeros.push(rs[i]);
                continue;
            }
            if b == 0.0 {
                continue; // picked up as the left endpoint of the next cell
            }
            if a.signum() != b.signum() {
                zeros.push(bisect_to(&gp_at, rs[i], rs[i + 1], 1e-10));
            }
        }
        // A near-zero sample without a sign change may still be a touching
        // zero; refine by minimising |g'| locally.
        for i in 1..n_samples - 1 {
            if gps[i] != 0.0
                && gps[i].abs() < touch_tol
                && gps[i - 1].signum() == gps[i].signum()
                && gps[i].signum() == gps[i + 1].signum()
            {
                let z = minimize_abs(&gp_at, rs[i - 1], rs[i + 1]);
                if gp_at(z).abs() < touch_tol {
                    zeros.push(z);
                }
            }
        }
        zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
        zeros.dedup_by(|a, b| (*a - *b).abs() < step * 1e-6);

        let g_monotone = {
            let mut incr = true;
            let mut decr = true;
            for w in gs.windows(2) {
                if !(w[1] > w[0]) {
                    incr = false;
                }
                if !(w[1] < w[0]) {
                    decr = false;
                }
            }
            incr || decr
        };

        let min_abs_g_prime = rs
            .iter()
            .zip(&gps)
            .filter(|(r, _)| zeros.iter().all(|z| (*r - z).abs() > 2.0 * step))
            .map(|(_, gp)| gp.abs())
            .fold(f64::INFINITY, f64::min);

        Ok(BolkerReport {
            satisfied: zeros.is_empty() && g_monotone,
            r_range: (r_min, r_max),
            g_prime_zeros: zeros,
            g_monotone,
            min_abs_g_prime,
            g_positive,
        })
    }

    /// Inverts the strictly monotone `g` on `[r_min, r_max]`: returns the
    /// unique `r` with `g(r) = w`, to relative tolerance 1e-12.
    pub fn invert_g(&self, w: f64, r_min: f64, r_max: f64) -> Result<f64> {
        if !(r_min > 0.0 && r_min < r_max) {
            return Err(Error::Domain(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        // Cheap monotonicity screen; callers wanting a certificate run
        // check_bolker first.
        let n = 257;
        let step = (r_max - r_min) / (n - 1) as f64;
        let mut prev = self.g(r_min)?;
        let mut incr = true;
        let mut decr = true;
        for i in 1..n {
            let cur = self.g(r_min + step * i as f64)?;
            if !(cur > prev) {
                incr = false;
            }
            if !(cur < prev) {
                decr = false;
            }
            prev = cur;
        }
        if !(incr || decr) {
            return Err(Error::BolkerViolation(format!(
                "g is not monotone on [{r_min}, {r_max}]; invert_g refused"
            )));
        }
        let g_lo = self.g(r_min)?;
        let g_hi = self.g(r_max)?;
        let (wmin, wmax) = if g_lo < g_hi { (g_lo, g_hi) } else { (g_hi, g_lo) };
        if !(w > wmin && w < wmax) {
            return Err(Error::OutOfRange(format!(
                "w = {w} outside the open range ({wmin}, {wmax}) of g on [{r_min}, {r_max}]"
            )));
        }
        let f = |r: f64| self.g(r).map(|v| v - w).unwrap_or(f64::NAN);
        Ok(bisect_rel(&f, r_min, r_max, 1e-12))
    }

    /// All `r` in `[r_min, r_max]` with `g(r) = g(r1)`, including `r1`.
    pub fn g_level_set(&self, r1: f64, r_min: f64, r_max: f64) -> Result<Vec<f64>> {
        if !(r_min > 0.0 && r_min <= r1 && r1 <= r_max) {
            return Err(Error::Domain(format!(
                "need 0 < r_min <= r1 <= r_max, got r1 = {r1} on [{r_min}, {r_max}]"
            )));
        }
        let target = self.g(r1)?;
        let mut roots = self.g_level_set_value(target, r_min, r_max)?;
        let merge = (r_max - r_min) * 1e-7;
        if roots.iter().all(|r| (r - r1).abs() > merge) {
            roots.push(r1);
            roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        }
        Ok(roots)
    }

    /// All `r` in `[r_min, r_max]` with `g(r) = w`, found by dense bracketing
    /// followed by bisection. Empty when `w` misses the range of `g`.
    pub fn g_level_set_value(&self, w: f64, r_min: f64, r_max: f64) -> Result<Vec<f64>> {
        if !(r_min > 0.0 && r_min < r_max) {
            return Err(Error::Domain(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        let n = 4097;
        let step = (r_max - r_min) / (n - 1) as f64;
        let mut vals = Vec::with_capacity(n);
        for i in 0..n {
            vals.push(self.g(r_min + step * i as f64)? - w);
        }
        let f = |r: f64| self.g(r).map(|v| v - w).unwrap_or(f64::NAN);
        let mut roots = Vec::new();
        for i in 0..n - 1 {
            let (a, b) = (vals[i], vals[i + 1]);
            let ra = r_min + step * i as f64;
            let rb = r_min + step * (i + 1) as f64;
            if a == 0.0 {
                roots.push(ra);
            } else if b != 0.0 && a.signum() != b.signum() {
                roots.push(bisect_rel(&f, ra, rb, 1e-12));
            }
        }
        if vals[n - 1] == 0.0 {
            roots.push(r_max);
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots.dedup_by(|a, b| (*a - *b).abs() < (r_max - r_min) * 1e-7);
        Ok(roots)
    }
}

impl std::fmt::Display for CurveProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.family {
            ProfileFamily::Compton => write!(f, "compton"),
            ProfileFamily::Monomial { alpha } => write!(f, "monomial:{alpha}"),
            ProfileFamily::Bragg => write!(f, "bragg"),
            ProfileFamily::Sinusoid { eps } => write!(f, "sinusoid:{eps}"),
            ProfileFamily::BraggOffset { x2 } => write!(f, "bragg-offset:{x2}"),
            ProfileFamily::Tabulated { knots } => write!(f, "tabulated[{}]", knots.len()),
        }
    }
}

/// Outcome of scanning `g'` for zeros on an interval.
#[derive(Debug, Clone)]
pub struct BolkerReport {
    /// True exactly when no zero of `g'` was found and `g` is strictly
    /// monotone on the scanned range.
    pub satisfied: bool,
    /// The scanned interval `(r_min, r_max)`.
    pub r_range: (f64, f64),
    /// Refined locations of the zeros of `g'`.
    pub g_prime_zeros: Vec<f64>,
    /// Strict monotonicity of the sampled `g`.
    pub g_monotone: bool,
    /// Smallest `|g'|` observed away from detected zeros.
    pub min_abs_g_prime: f64,
    /// Whether `g > 0` held at every sample. The Bolker equivalence assumes
    /// `g` maps into `(0, inf)`; a false value flags that assumption instead
    /// of silently classifying.
    pub g_positive: bool,
}

impl BolkerReport {
    /// Human-readable report.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "Bolker condition on [{:.6}, {:.6}]: {}\n",
            self.r_range.0,
            self.r_range.1,
            if self.satisfied { "satisfied" } else { "VIOLATED" }
        ));
        s.push_str(&format!("  g strictly monotone: {}\n", self.g_monotone));
        s.push_str(&format!("  g positive on range: {}\n", self.g_positive));
        s.push_str(&format!("  min |g'| away from zeros: {:.6e}\n", self.min_abs_g_prime));
        if self.g_prime_zeros.is_empty() {
            s.push_str("  zeros of g': none\n");
        } else {
            s.push_str(&format!("  zeros of g' ({}):\n", self.g_prime_zeros.len()));
            for z in &self.g_prime_zeros {
                s.push_str(&format!("    r = {z:.12}\n"));
            }
        }
        s
    }

    /// Machine-readable `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let zeros = self
            .g_prime_zeros
            .iter()
            .map(|z| format!("{z:.12e}"))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "satisfied={}\nr_min={}\nr_max={}\ng_monotone={}\ng_positive={}\nmin_abs_g_prime={:e}\nn_zeros={}\ng_prime_zeros={}\n",
            self.satisfied,
            self.r_range.0,
            self.r_range.1,
            self.g_monotone,
            self.g_positive,
            self.min_abs_g_prime,
            self.g_prime_zeros.len(),
            zeros
        )
    }
}

/// The offset Bragg curve generator for a scan-line offset `x2` in `(-1, 1)`:
///
/// `q_B(x1, x2) = sqrt( (1 + (x1^2 - (1 - x2^2)) / (s1 s2)) / 2 )`
///
/// with `s1 = sqrt(x1^2 + (x2+1)^2)` and `s2 = sqrt(x1^2 + (1-x2)^2)`.
/// Reduces to `x1 / sqrt(x1^2 + 1)` at `x2 = 0` and is even in `x1`.
pub fn bragg_offset_q(x1: f64, x2: f64) -> Result<f64> {
    if !(x2.abs() < 1.0) {
        return Err(Error::Domain(format!("offset x2 must lie in (-1, 1), got {x2}")));
    }
    let s1 = (x1 * x1 + (x2 + 1.0) * (x2 + 1.0)).sqrt();
    let s2 = (x1 * x1 + (1.0 - x2) * (1.0 - x2)).sqrt();
    let inner = 1.0 + (x1 * x1 - (1.0 - x2 * x2)) / (s1 * s2);
    // Roundoff can push `inner` a hair below zero at the vertex.
    Ok((0.5 * inner.max(0.0)).sqrt())
}

/// `h_B'(x1, x2)` where `h_B = q_B / q_B'` is the reciprocal of `g_B`, with
/// `q_B'` and `h_B'` both by central finite differences of step `fd_step`.
pub fn bragg_offset_h_prime(x1: f64, x2: f64, fd_step: f64) -> Result<f64> {
    if !(fd_step > 0.0) {
        return Err(Error::Domain(format!("fd step must be positive, got {fd_step}")));
    }
    let h = |x: f64| -> Result<f64> {
        let q = bragg_offset_q(x, x2)?;
        let qp = (bragg_offset_q(x + fd_step, x2)? - bragg_offset_q(x - fd_step, x2)?)
            / (2.0 * fd_step);
        if qp == 0.0 {
            return Err(Error::Singularity(format!("q_B'({x}, {x2}) = 0, h = q/q' undefined")));
        }
        Ok(q / qp)
    };
    Ok((h(x1 + fd_step)? - h(x1 - fd_step)?) / (2.0 * fd_step))
}

/// Scans `h_B' = (q_B/q_B')'` over the cell centers of `(0, x1_max] x (-1, 1)`
/// on an `n1 x n2` grid. Returns the minimum value and the full field; a
/// minimum bounded away from zero certifies the Bolker condition for every
/// scan-line offset in the range.
pub fn bragg_offset_bolker_scan(
    x1_max: f64,
    n1: usize,
    n2: usize,
    fd_step: f64,
) -> Result<(f64, ImageGrid)> {
    if !(x1_max > 0.0) {
        return Err(Error::Domain(format!("x1_max must be positive, got {x1_max}")));
    }
    if n1 < 50 || n2 < 50 {
        return Err(Error::Domain(format!("need n1, n2 >= 50, got {n1} x {n2}")));
    }
    let dx1 = x1_max / n1 as f64;
    let dx2 = 2.0 / n2 as f64;
    let rows: Vec<Result<Vec<f64>>> = exec::map_indexed(n2, |j| {
        let x2 = -1.0 + (j as f64 + 0.5) * dx2;
        (0..n1)
            .map(|i| {
                let x1 = (i as f64 + 0.5) * dx1;
                bragg_offset_h_prime(x1, x2, fd_step)
            })
            .collect()
    });
    let mut values = Vec::with_capacity(n1 * n2);
    for row in rows {
        values.extend(row?);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let grid = ImageGrid::from_values(n1, n2, (0.0, x1_max, -1.0, 1.0), values)?;
    Ok((min, grid))
}

/// Bisection on a bracket with sign change, refined until the bracket width
/// falls below `tol` (absolute).
fn bisect_to<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection refined to relative tolerance on the abscissa.
fn bisect_rel<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimisation of `|f|` on `[lo, hi]`.
fn minimize_abs<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c).abs();
    let mut fd = f(d).abs();
    for _ in 0..100 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c).abs();
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d).abs();
        }
    }
    0.5 * (lo + hi)
}

/// Monotone (Fritsch-Carlson) cubic Hermite evaluation of tabulated knots.
fn eval_monotone_cubic(knots: &[(f64, f64)], r: f64) -> Result<f64> {
    let last = knots.len() - 1;
    if r > knots[last].0 {
        return Err(Error::Domain(format!(
            "r = {r} beyond the last tabulated knot {}",
            knots[last].0
        )));
    }
    // Locate the interval.
    let k = match knots.binary_search_by(|&(rk, _)| rk.partial_cmp(&r).unwrap()) {
        Ok(i) => return Ok(knots[i].1),
        Err(i) => i - 1,
    };
    let (r0, q0) = knots[k];
    let (r1, q1) = knots[k + 1];
    let hk = r1 - r0;

    let secant = |i: usize| (knots[i + 1].1 - knots[i].1) / (knots[i + 1].0 - knots[i].0);
    let tangent = |i: usize| -> f64 {
        if i == 0 {
            secant(0)
        } else if i == last {
            secant(last - 1)
        } else {
            let (d0, d1) = (secant(i - 1), secant(i));
            if d0 * d1 <= 0.0 {
                0.0
            } else {
                0.5 * (d0 + d1)
            }
        }
    };
    let d = secant(k);
    let (mut m0, mut m1) = (tangent(k), tangent(k + 1));
    if d == 0.0 {
        m0 = 0.0;
        m1 = 0.0;
    } else {
        // Fritsch-Carlson limiter keeps the interpolant monotone on the cell.
        let a = m0 / d;
        let b = m1 / d;
        let s = a * a + b * b;
        if s > 9.0 {
            let t = 3.0 / s.sqrt();
            m0 = t * a * d;
            m1 = t * b * d;
        }
    }
    let t = (r - r0) / hk;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    Ok(h00 * q0 + h10 * hk * m0 + h01 * q1 + h11 * hk * m1)
}
