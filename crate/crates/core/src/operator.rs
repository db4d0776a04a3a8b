//! Sparse discretization of the two-branch transform: forward projection,
//! exact-transpose adjoint, operator-norm estimation and an on-disk cache.
//!
//! Each sinogram bin `(E, x0)` integrates the image along the two mirror
//! branches `x2 = E q(+-(x1 - x0))` in the weight `sqrt(1 + E^2 q'^2)`, which
//! realizes arc-length measure parametrized by `x1`. The integral is
//! discretized by a composite midpoint rule in the branch radius `r`, each
//! sample scattered into its four surrounding pixels by bilinear weights.
//! The matrix is assembled once per (profile, geometry) pair; the adjoint is
//! its exact transpose, so the inner-product identity holds to roundoff.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::exec;
use crate::grid::{ImageGrid, ScanGeometry, Sinogram};
use crate::profiles::CurveProfile;

/// Sparse forward operator in CSR form plus its transpose, bound to the
/// generating profile and geometry by a fingerprint.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    vals: Vec<f64>,
    // Transpose, indexed by pixel, for the adjoint.
    t_ptr: Vec<usize>,
    t_idx: Vec<u32>,
    t_vals: Vec<f64>,
    fingerprint: String,
    geom: ScanGeometry,
}

impl SystemMatrix {
    /// Discretizes the forward operator for the given profile and geometry.
    ///
    /// Rows are built independently in fixed order, so the result is
    /// bit-reproducible regardless of thread count. Bins whose curves miss
    /// the image region get empty rows.
    pub fn build(profile: &CurveProfile, geom: &ScanGeometry) -> Result<Self> {
        let sino = geom.sinogram();
        let template = geom.image_grid();
        let n_rows = geom.n_e * geom.n_x0;
        let n_cols = geom.nx * geom.ny;

        let rows: Vec<Result<Vec<(u32, f64)>>> = exec::map_indexed(n_rows, |row| {
            let i_e = row % geom.n_e;
            let i_x0 = row / geom.n_e;
            build_row(profile, geom, &template, sino.e_center(i_e), sino.x0_center(i_x0))
        });

        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0usize);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        for r in rows {
            let entries = r?;
            for (c, v) in entries {
                col_idx.push(c);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }

        let mut m = Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
            t_ptr: Vec::new(),
            t_idx: Vec::new(),
            t_vals: Vec::new(),
            fingerprint: fingerprint_of(profile, geom),
            geom: geom.clone(),
        };
        m.build_transpose();
        Ok(m)
    }

    fn build_transpose(&mut self) {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let mut t_idx = vec![0u32; self.col_idx.len()];
        let mut t_vals = vec![0.0f64; self.vals.len()];
        let mut cursor = counts.clone();
        for row in 0..self.n_rows {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let c = self.col_idx[k] as usize;
                let dst = cursor[c];
                t_idx[dst] = row as u32;
                t_vals[dst] = self.vals[k];
                cursor[c] += 1;
            }
        }
        self.t_ptr = counts;
        self.t_idx = t_idx;
        self.t_vals = t_vals;
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn geometry(&self) -> &ScanGeometry {
        &self.geom
    }

    /// Entries `(pixel, weight)` of one sinogram-bin row.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    fn check_image(&self, f: &ImageGrid) -> Result<()> {
        if f.nx() != self.geom.nx || f.ny() != self.geom.ny || f.extent() != self.geom.image_extent
        {
            return Err(Error::DimensionMismatch(format!(
                "image {}x{} over {:?} does not match the operator geometry",
                f.nx(),
                f.ny(),
                f.extent()
            )));
        }
        Ok(())
    }

    fn check_sinogram(&self, s: &Sinogram) -> Result<()> {
        let expect = (self.geom.a, self.geom.b, -self.geom.c, self.geom.c);
        if s.n_e() != self.geom.n_e || s.n_x0() != self.geom.n_x0 || s.extent() != expect {
            return Err(Error::DimensionMismatch(format!(
                "sinogram {}x{} over {:?} does not match the operator geometry",
                s.n_e(),
                s.n_x0(),
                s.extent()
            )));
        }
        Ok(())
    }

    /// Forward projection: matrix-vector product.
    pub fn forward(&self, f: &ImageGrid) -> Result<Sinogram> {
        self.check_image(f)?;
        let x = f.values();
        let mut s = self.geom.sinogram();
        let (row_ptr, col_idx, vals) = (&self.row_ptr, &self.col_idx, &self.vals);
        exec::fill_indexed(s.values_mut(), |row| {
            let mut acc = 0.0;
            for k in row_ptr[row]..row_ptr[row + 1] {
                acc += vals[k] * x[col_idx[k] as usize];
            }
            acc
        });
        Ok(s)
    }

    /// Adjoint (backprojection): exact transpose matrix-vector product.
    pub fn adjoint(&self, s: &Sinogram) -> Result<ImageGrid> {
        self.check_sinogram(s)?;
        let y = s.values();
        let mut f = self.geom.image_grid();
        let (t_ptr, t_idx, t_vals) = (&self.t_ptr, &self.t_idx, &self.t_vals);
        exec::fill_indexed(f.values_mut(), |col| {
            let mut acc = 0.0;
            for k in t_ptr[col]..t_ptr[col + 1] {
                acc += t_vals[k] * y[t_idx[k] as usize];
            }
            acc
        });
        Ok(f)
    }

    fn apply_raw(&self, x: &[f64], out: &mut [f64]) {
        let (row_ptr, col_idx, vals) = (&self.row_ptr, &self.col_idx, &self.vals);
        exec::fill_indexed(out, |row| {
            let mut acc = 0.0;
            for k in row_ptr[row]..row_ptr[row + 1] {
                acc += vals[k] * x[col_idx[k] as usize];
            }
            acc
        });
    }

    fn apply_transpose_raw(&self, y: &[f64], out: &mut [f64]) {
        let (t_ptr, t_idx, t_vals) = (&self.t_ptr, &self.t_idx, &self.t_vals);
        exec::fill_indexed(out, |col| {
            let mut acc = 0.0;
            for k in t_ptr[col]..t_ptr[col + 1] {
                acc += t_vals[k] * y[t_idx[k] as usize];
            }
            acc
        });
    }

    /// Estimates the operator norm `||M||_2` by power iteration on `M^T M`
    /// from a fixed starting vector. The Rayleigh estimate is nondecreasing
    /// in the iteration count; a zero matrix yields 0.
    pub fn operator_norm(&self, iters: usize) -> Result<f64> {
        if iters < 10 {
            return Err(Error::Domain(format!("need at least 10 iterations, got {iters}")));
        }
        let n = self.n_cols;
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut mv = vec![0.0; self.n_rows];
        let mut w = vec![0.0; n];
        let mut lambda = 0.0f64;
        for _ in 0..iters {
            self.apply_raw(&v, &mut mv);
            self.apply_transpose_raw(&mv, &mut w);
            // Rayleigh quotient for M^T M at the unit vector v.
            lambda = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Ok(0.0);
            }
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / norm;
            }
        }
        Ok(lambda.max(0.0).sqrt())
    }

    /// Writes the CSR payload with a CRGRID-style header and the generating
    /// fingerprint.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "CRMAT 1")?;
        writeln!(w, "{}", self.fingerprint)?;
        writeln!(w, "{} {} {}", self.n_rows, self.n_cols, self.nnz())?;
        writeln!(w, "csr u64-rowptr u32-colidx float64-vals le")?;
        for p in &self.row_ptr {
            w.write_all(&(*p as u64).to_le_bytes())?;
        }
        for c in &self.col_idx {
            w.write_all(&c.to_le_bytes())?;
        }
        for v in &self.vals {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a cached matrix and verifies it was built for exactly this
    /// profile and geometry.
    pub fn load(path: impl AsRef<Path>, profile: &CurveProfile, geom: &ScanGeometry) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut lines = Vec::new();
        let mut line = Vec::new();
        let mut byte = [0u8; 1];
        while lines.len() < 4 {
            match r.read(&mut byte)? {
                0 => return Err(Error::Format("truncated matrix header".into())),
                _ => {
                    if byte[0] == b'\n' {
                        lines.push(
                            String::from_utf8(std::mem::take(&mut line))
                                .map_err(|_| Error::Format("matrix header is not UTF-8".into()))?,
                        );
                    } else {
                        line.push(byte[0]);
                    }
                }
            }
        }
        if lines[0] != "CRMAT 1" {
            return Err(Error::Format(format!("bad magic '{}', expected 'CRMAT 1'", lines[0])));
        }
        let expect = fingerprint_of(profile, geom);
        if lines[1] != expect {
            return Err(Error::Format(format!(
                "matrix fingerprint mismatch:\n  file: {}\n  want: {expect}",
                lines[1]
            )));
        }
        let dims: Vec<usize> = lines[2]
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Format(format!("bad dims line '{}'", lines[2]))))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(Error::Format(format!("bad dims line '{}'", lines[2])));
        }
        if lines[3] != "csr u64-rowptr u32-colidx float64-vals le" {
            return Err(Error::Format(format!("unsupported matrix payload '{}'", lines[3])));
        }
        let (n_rows, n_cols, nnz) = (dims[0], dims[1], dims[2]);
        if n_rows != geom.n_e * geom.n_x0 || n_cols != geom.nx * geom.ny {
            return Err(Error::Format("matrix dims disagree with geometry".into()));
        }
        let mut payload = Vec::new();
        r.read_to_end(&mut payload)?;
        let expect_len = 8 * (n_rows + 1) + 4 * nnz + 8 * nnz;
        if payload.len() != expect_len {
            return Err(Error::Format(format!(
                "matrix payload size mismatch: expected {expect_len} bytes, got {}",
                payload.len()
            )));
        }
        let (ptr_bytes, rest) = payload.split_at(8 * (n_rows + 1));
        let (idx_bytes, val_bytes) = rest.split_at(4 * nnz);
        let row_ptr: Vec<usize> = ptr_bytes
            .chunks_exact(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()) as usize)
            .collect();
        if row_ptr[0] != 0 || row_ptr[n_rows] != nnz || row_ptr.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Format("corrupt row pointer array".into()));
        }
        let col_idx: Vec<u32> =
            idx_bytes.chunks_exact(4).map(|b| u32::from_le_bytes(b.try_into().unwrap())).collect();
        if col_idx.iter().any(|&c| c as usize >= n_cols) {
            return Err(Error::Format("column index out of range".into()));
        }
        let vals: Vec<f64> =
            val_bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        let mut m = Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
            t_ptr: Vec::new(),
            t_idx: Vec::new(),
            t_vals: Vec::new(),
            fingerprint: expect,
            geom: geom.clone(),
        };
        m.build_transpose();
        Ok(m)
    }

    #[cfg(test)]
    pub(crate) fn from_parts_for_tests(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<u32>,
        vals: Vec<f64>,
    ) -> Self {
        let geom = ScanGeometry::new(
            0.5,
            1.5,
            1.0,
            (0.0, 1.0, 0.0, 1.0),
            n_cols.max(1),
            1,
            n_rows.max(1),
            1,
            None,
        )
        .unwrap();
        let mut m = Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
            t_ptr: Vec::new(),
            t_idx: Vec::new(),
            t_vals: Vec::new(),
            fingerprint: "test".into(),
            geom,
        };
        m.build_transpose();
        m
    }
}

fn fingerprint_of(profile: &CurveProfile, geom: &ScanGeometry) -> String {
    format!("profile={profile} fd={} {}", profile.fd_step(), geom.fingerprint())
}

/// Quadrature of one bin: both branches, midpoint rule in the radius,
/// bilinear scatter, entries merged per pixel in index order.
fn build_row(
    profile: &CurveProfile,
    geom: &ScanGeometry,
    grid: &ImageGrid,
    e: f64,
    x0: f64,
) -> Result<Vec<(u32, f64)>> {
    let (x1_min, x1_max, x2_min, x2_max) = geom.image_extent;
    let h_q = geom.h_q;
    let mut raw: Vec<(u32, f64)> = Vec::new();

    for branch in [-1.0f64, 1.0] {
        // Radii of curve points whose x1 lies in the image extent.
        let (r_lo, r_hi) = if branch > 0.0 {
            ((x1_min - x0).max(0.0), x1_max - x0)
        } else {
            ((x0 - x1_max).max(0.0), x0 - x1_min)
        };
        if !(r_hi > r_lo) {
            continue;
        }
        let n = ((r_hi - r_lo) / h_q).ceil().max(1.0) as usize;
        let h = (r_hi - r_lo) / n as f64;
        for k in 0..n {
            let r = r_lo + (k as f64 + 0.5) * h;
            let q = profile.q(r)?;
            let x2 = e * q;
            if x2 < x2_min || x2 > x2_max {
                continue;
            }
            let x1 = x0 + branch * r;
            // Weight sqrt(1 + E^2 q'^2); the slope is taken no closer to the
            // vertex than h_q/2 so integrable blowups of q' stay bounded.
            let r_w = r.max(0.5 * h_q);
            let qp = profile.q_derivs(r_w)?.1;
            let w = (1.0 + e * e * qp * qp).sqrt() * h;
            scatter_bilinear(grid, x1, x2, w, &mut raw);
        }
    }

    raw.sort_unstable_by_key(|(c, _)| *c);
    let mut merged: Vec<(u32, f64)> = Vec::with_capacity(raw.len());
    for (c, v) in raw {
        match merged.last_mut() {
            Some((lc, lv)) if *lc == c => *lv += v,
            _ => merged.push((c, v)),
        }
    }
    Ok(merged)
}

/// Splats `w` at `(x1, x2)` into the four surrounding pixel centers.
/// Neighbor cells outside the grid receive nothing.
fn scatter_bilinear(grid: &ImageGrid, x1: f64, x2: f64, w: f64, out: &mut Vec<(u32, f64)>) {
    let (x1_min, _, x2_min, _) = grid.extent();
    let u = (x1 - x1_min) / grid.dx() - 0.5;
    let v = (x2 - x2_min) / grid.dy() - 0.5;
    let i0 = u.floor();
    let j0 = v.floor();
    let fu = u - i0;
    let fv = v - j0;
    let (i0, j0) = (i0 as isize, j0 as isize);
    let nx = grid.nx() as isize;
    let ny = grid.ny() as isize;
    for (di, wu) in [(0isize, 1.0 - fu), (1, fu)] {
        for (dj, wv) in [(0isize, 1.0 - fv), (1, fv)] {
            let (ii, jj) = (i0 + di, j0 + dj);
            if ii >= 0 && ii < nx && jj >= 0 && jj < ny {
                let coeff = wu * wv;
                if coeff != 0.0 {
                    out.push(((jj * nx + ii) as u32, w * coeff));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Geometry with a single sinogram bin centered at (E, x0) = (1, 0).
    fn single_bin_geometry(n: usize, h_q: Option<f64>) -> ScanGeometry {
        ScanGeometry::new(0.9, 1.1, 0.1, (-1.0, 1.0, 0.0, 2.0), n, n, 1, 1, h_q).unwrap()
    }

    fn ex1_geometry(nx: usize, n_e: usize) -> ScanGeometry {
        ScanGeometry::new(0.01, 2.83, 2.0, (-1.0, 1.0, 0.0, 2.0), nx, nx, n_e, 2 * n_e, None)
            .unwrap()
    }

    fn ones(geom: &ScanGeometry) -> ImageGrid {
        let mut f = geom.image_grid();
        f.values_mut().fill(1.0);
        f
    }

    #[test]
    fn forward_of_ones_matches_arc_length() {
        // Straight branches of unit slope from (0,0) to (+-1,1): total length
        // 2 sqrt(2), weight constant sqrt(2) per unit x1.
        let geom = single_bin_geometry(128, None);
        let m = SystemMatrix::build(&CurveProfile::compton(), &geom).unwrap();
        let s = m.forward(&ones(&geom)).unwrap();
        let exact = 2.0 * 2.0_f64.sqrt();
        let got = s.values()[0];
        assert!(
            (got - exact).abs() <= 0.01 * exact,
            "Rf = {got}, arc length {exact}"
        );
    }

    #[test]
    fn forward_linearity_and_zero() {
        let geom = ex1_geometry(24, 12);
        let m = SystemMatrix::build(&CurveProfile::bragg(), &geom).unwrap();
        let zero = geom.image_grid();
        assert!(m.forward(&zero).unwrap().values().iter().all(|v| *v == 0.0));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut f = geom.image_grid();
        let mut g = geom.image_grid();
        for v in f.values_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        for v in g.values_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
        let (alpha, beta) = (1.7, -0.4);
        let mut combo = geom.image_grid();
        for i in 0..combo.values().len() {
            combo.values_mut()[i] = alpha * f.values()[i] + beta * g.values()[i];
        }
        let lhs = m.forward(&combo).unwrap();
        let rf = m.forward(&f).unwrap();
        let rg = m.forward(&g).unwrap();
        for i in 0..lhs.values().len() {
            let rhs = alpha * rf.values()[i] + beta * rg.values()[i];
            assert!(
                (lhs.values()[i] - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()),
                "linearity off at bin {i}"
            );
        }
    }

    #[test]
    fn entries_are_nonnegative() {
        let geom = ex1_geometry(32, 16);
        for profile in [CurveProfile::compton(), CurveProfile::monomial(0.5).unwrap()] {
            let m = SystemMatrix::build(&profile, &geom).unwrap();
            assert!(m.nnz() > 0);
            assert!(m.vals.iter().all(|v| *v >= 0.0), "{profile}: negative entry");
        }
    }

    #[test]
    fn adjoint_is_exact_transpose() {
        let geom = ex1_geometry(24, 12);
        let m = SystemMatrix::build(&CurveProfile::compton(), &geom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let mut f = geom.image_grid();
            let mut s = geom.sinogram();
            for v in f.values_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            for v in s.values_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let mf = m.forward(&f).unwrap();
            let mts = m.adjoint(&s).unwrap();
            let lhs: f64 = mf.values().iter().zip(s.values()).map(|(a, b)| a * b).sum();
            let rhs: f64 = f.values().iter().zip(mts.values()).map(|(a, b)| a * b).sum();
            let scale = mf.values().iter().map(|v| v * v).sum::<f64>().sqrt()
                * s.values().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(
                (lhs - rhs).abs() <= 1e-12 * scale.max(1e-300),
                "adjoint identity off: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn adjoint_of_zero_and_one_hot_support() {
        let geom = ex1_geometry(48, 24);
        let m = SystemMatrix::build(&CurveProfile::compton(), &geom).unwrap();
        let zero = geom.sinogram();
        assert!(m.adjoint(&zero).unwrap().values().iter().all(|v| *v == 0.0));

        // One-hot bin: the backprojection is supported within a cell of the
        // broken-ray curve of that bin.
        let mut s = geom.sinogram();
        let (i_e, i_x0) = (12, 13);
        s.set(i_e, i_x0, 1.0);
        let (e, x0) = (s.e_center(i_e), s.x0_center(i_x0));
        let img = m.adjoint(&s).unwrap();
        let tol = 2.0 * (img.dy() + e * img.dx());
        for iy in 0..img.ny() {
            for ix in 0..img.nx() {
                if img.get(ix, iy) != 0.0 {
                    let x1 = img.x1_center(ix);
                    let x2 = img.x2_center(iy);
                    let dist = (x2 - e * (x1 - x0).abs()).abs();
                    assert!(
                        dist <= tol,
                        "pixel ({ix},{iy}) off-curve by {dist} (tol {tol})"
                    );
                }
            }
        }
    }

    #[test]
    fn branch_contributions_balance_for_even_data() {
        // f = 1 is even about x1 = x0 = 0; both branches must integrate equally.
        let geom = single_bin_geometry(64, None);
        let m = SystemMatrix::build(&CurveProfile::bragg(), &geom).unwrap();
        let f = ones(&geom);
        let mid = geom.nx / 2;
        let mut left = 0.0;
        let mut right = 0.0;
        for (c, v) in m.row(0) {
            let ix = c as usize % geom.nx;
            let contrib = v * f.values()[c as usize];
            if ix < mid {
                left += contrib;
            } else {
                right += contrib;
            }
        }
        assert!(
            (left - right).abs() <= 1e-10 * (left + right),
            "branch asymmetry: {left} vs {right}"
        );
    }

    #[test]
    fn quadrature_second_order_in_h() {
        let geom_h = |h: f64| single_bin_geometry(64, Some(h));
        let p = CurveProfile::bragg();
        let value = |h: f64| {
            let geom = geom_h(h);
            let m = SystemMatrix::build(&p, &geom).unwrap();
            m.forward(&ones(&geom)).unwrap().values()[0]
        };
        let (v1, v2, v4) = (value(0.02), value(0.01), value(0.005));
        let d1 = (v1 - v2).abs();
        let d2 = (v2 - v4).abs();
        assert!(
            d2 <= 0.6 * d1 || (d1 <= 1e-8 && d2 <= 1e-8),
            "not second order: |dh| = {d1}, |dh/2| = {d2}"
        );
    }

    #[test]
    fn operator_norm_known_matrix() {
        // Diagonal matrix with entries 3, 2, 1: norm 3.
        let m = SystemMatrix::from_parts_for_tests(
            3,
            3,
            vec![0, 1, 2, 3],
            vec![0, 1, 2],
            vec![3.0, 2.0, 1.0],
        );
        let est = m.operator_norm(50).unwrap();
        assert!((est - 3.0).abs() <= 0.03, "norm estimate {est}");

        let zero = SystemMatrix::from_parts_for_tests(2, 2, vec![0, 0, 0], vec![], vec![]);
        assert_eq!(zero.operator_norm(10).unwrap(), 0.0);
    }

    #[test]
    fn operator_norm_nondecreasing() {
        let geom = ex1_geometry(16, 8);
        let m = SystemMatrix::build(&CurveProfile::compton(), &geom).unwrap();
        let mut prev = 0.0;
        for iters in [10, 20, 40, 80] {
            let est = m.operator_norm(iters).unwrap();
            assert!(est + 1e-9 >= prev, "estimate decreased: {est} < {prev}");
            prev = est;
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let geom = ex1_geometry(16, 8);
        let m = SystemMatrix::build(&CurveProfile::compton(), &geom).unwrap();
        let other = ImageGrid::new(8, 8, (-1.0, 1.0, 0.0, 2.0)).unwrap();
        assert!(matches!(m.forward(&other), Err(Error::DimensionMismatch(_))));
        let other_s = Sinogram::new(4, 4, (0.01, 2.83, -2.0, 2.0)).unwrap();
        assert!(matches!(m.adjoint(&other_s), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn cache_roundtrip_and_fingerprint_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.crmat");
        let geom = ex1_geometry(16, 8);
        let p = CurveProfile::bragg();
        let m = SystemMatrix::build(&p, &geom).unwrap();
        m.save(&path).unwrap();
        let loaded = SystemMatrix::load(&path, &p, &geom).unwrap();
        assert_eq!(loaded.row_ptr, m.row_ptr);
        assert_eq!(loaded.col_idx, m.col_idx);
        assert_eq!(loaded.vals, m.vals);

        let wrong_profile = CurveProfile::compton();
        assert!(matches!(
            SystemMatrix::load(&path, &wrong_profile, &geom),
            Err(Error::Format(_))
        ));
        let wrong_geom = ex1_geometry(16, 4);
        assert!(matches!(
            SystemMatrix::load(&path, &p, &wrong_geom),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn delta_forward_tracks_support_curve() {
        // Forward of a near-delta at (0, 1): per x0 column, mass sits within
        // two E bins of E(x0) = 1 / q(|x0|).
        let geom = ex1_geometry(64, 64);
        let p = CurveProfile::compton();
        let m = SystemMatrix::build(&p, &geom).unwrap();
        let phantom = crate::phantom::PhantomSpec::pixel_delta([0.0, 1.0], 0.03)
            .unwrap()
            .rasterize(geom.image_extent, geom.nx, geom.ny)
            .unwrap();
        let s = m.forward(&phantom).unwrap();
        let mut on_mass = 0.0;
        let mut total = 0.0;
        for i_x0 in 0..s.n_x0() {
            let x0 = s.x0_center(i_x0);
            let e_curve = 1.0 / p.q(x0.abs()).unwrap_or(f64::INFINITY);
            for i_e in 0..s.n_e() {
                let v = s.get(i_e, i_x0).abs();
                total += v;
                if ((s.e_center(i_e) - e_curve) / s.de()).abs() <= 2.0 {
                    on_mass += v;
                }
            }
        }
        assert!(total > 0.0);
        assert!(on_mass / total >= 0.99, "support fraction {}", on_mass / total);
    }
}
