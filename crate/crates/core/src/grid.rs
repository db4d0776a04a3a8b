//! Uniform grid containers for image and data space, the CRGRID on-disk
//! format, and PGM / CSV export.
//!
//! Values live at cell centers. The on-disk format is a five-line ASCII
//! header followed by raw little-endian `f64` values in row-major order, so a
//! grid round-trips bit-exactly and stays inspectable with `head`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// A scalar field on a uniform 2D grid over image space `(x1, x2)`.
///
/// Row-major with `x1` fastest: `values[iy * nx + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    nx: usize,
    ny: usize,
    extent: (f64, f64, f64, f64),
    values: Vec<f64>,
}

impl ImageGrid {
    /// Zero-filled grid. `extent = (x1_min, x1_max, x2_min, x2_max)`.
    pub fn new(nx: usize, ny: usize, extent: (f64, f64, f64, f64)) -> Result<Self> {
        Self::from_values(nx, ny, extent, vec![0.0; nx.checked_mul(ny).unwrap_or(0)])
    }

    pub fn from_values(
        nx: usize,
        ny: usize,
        extent: (f64, f64, f64, f64),
        values: Vec<f64>,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Domain("grid dimensions must be positive".into()));
        }
        if !(extent.0 < extent.1 && extent.2 < extent.3) {
            return Err(Error::Domain(format!("degenerate grid extent {extent:?}")));
        }
        if values.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {nx}x{ny} grid, got {}",
                nx * ny,
                values.len()
            )));
        }
        Ok(Self { nx, ny, extent, values })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn extent(&self) -> (f64, f64, f64, f64) {
        self.extent
    }

    pub fn dx(&self) -> f64 {
        (self.extent.1 - self.extent.0) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.extent.3 - self.extent.2) / self.ny as f64
    }

    /// x1 coordinate of the center of column `ix`.
    pub fn x1_center(&self, ix: usize) -> f64 {
        self.extent.0 + (ix as f64 + 0.5) * self.dx()
    }

    /// x2 coordinate of the center of row `iy`.
    pub fn x2_center(&self, iy: usize) -> f64 {
        self.extent.2 + (iy as f64 + 0.5) * self.dy()
    }

    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Pixel indices of the cell containing `(x1, x2)`, or `None` outside the
    /// extent. Exact inverse of the center computation for in-range points.
    pub fn pixel_containing(&self, x1: f64, x2: f64) -> Option<(usize, usize)> {
        let (x1_min, x1_max, x2_min, x2_max) = self.extent;
        if !(x1 >= x1_min && x1 < x1_max && x2 >= x2_min && x2 < x2_max) {
            return None;
        }
        let ix = (((x1 - x1_min) / self.dx()) as usize).min(self.nx - 1);
        let iy = (((x2 - x2_min) / self.dy()) as usize).min(self.ny - 1);
        Some((ix, iy))
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.idx(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        let i = self.idx(ix, iy);
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_field(path, "image", self.nx, self.ny, self.extent, &self.values)
    }

    pub fn export_pgm(&self, path: impl AsRef<Path>, clip: Option<(f64, f64)>) -> Result<()> {
        write_pgm16(path, self.nx, self.ny, &self.values, clip)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_csv(path, self.nx, self.ny, &self.values)
    }
}

/// A scalar field on the data rectangle, sampled at cell centers of
/// `[E_min, E_max] x [x0_min, x0_max]`.
///
/// Row-major with `E` fastest: `values[i_x0 * n_e + i_e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    n_e: usize,
    n_x0: usize,
    extent: (f64, f64, f64, f64),
    values: Vec<f64>,
}

impl Sinogram {
    pub fn new(n_e: usize, n_x0: usize, extent: (f64, f64, f64, f64)) -> Result<Self> {
        Self::from_values(n_e, n_x0, extent, vec![0.0; n_e.checked_mul(n_x0).unwrap_or(0)])
    }

    pub fn from_values(
        n_e: usize,
        n_x0: usize,
        extent: (f64, f64, f64, f64),
        values: Vec<f64>,
    ) -> Result<Self> {
        if n_e == 0 || n_x0 == 0 {
            return Err(Error::Domain("sinogram dimensions must be positive".into()));
        }
        if !(extent.0 > 0.0) {
            return Err(Error::Domain(format!(
                "sinogram E_min must be strictly positive, got {}",
                extent.0
            )));
        }
        if !(extent.0 < extent.1 && extent.2 < extent.3) {
            return Err(Error::Domain(format!("degenerate sinogram extent {extent:?}")));
        }
        if values.len() != n_e * n_x0 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {n_e}x{n_x0} sinogram, got {}",
                n_e * n_x0,
                values.len()
            )));
        }
        Ok(Self { n_e, n_x0, extent, values })
    }

    pub fn n_e(&self) -> usize {
        self.n_e
    }

    pub fn n_x0(&self) -> usize {
        self.n_x0
    }

    pub fn extent(&self) -> (f64, f64, f64, f64) {
        self.extent
    }

    pub fn de(&self) -> f64 {
        (self.extent.1 - self.extent.0) / self.n_e as f64
    }

    pub fn dx0(&self) -> f64 {
        (self.extent.3 - self.extent.2) / self.n_x0 as f64
    }

    pub fn e_center(&self, i_e: usize) -> f64 {
        self.extent.0 + (i_e as f64 + 0.5) * self.de()
    }

    pub fn x0_center(&self, i_x0: usize) -> f64 {
        self.extent.2 + (i_x0 as f64 + 0.5) * self.dx0()
    }

    pub fn idx(&self, i_e: usize, i_x0: usize) -> usize {
        i_x0 * self.n_e + i_e
    }

    pub fn get(&self, i_e: usize, i_x0: usize) -> f64 {
        self.values[self.idx(i_e, i_x0)]
    }

    pub fn set(&mut self, i_e: usize, i_x0: usize, v: f64) {
        let i = self.idx(i_e, i_x0);
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_field(path, "sinogram", self.n_e, self.n_x0, self.extent, &self.values)
    }

    pub fn export_pgm(&self, path: impl AsRef<Path>, clip: Option<(f64, f64)>) -> Result<()> {
        write_pgm16(path, self.n_e, self.n_x0, &self.values, clip)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_csv(path, self.n_e, self.n_x0, &self.values)
    }
}

/// Scan setup: data rectangle `A = [a, b] x [-c, c]` in `(E, x0)`, the image
/// region, grid resolutions, and the quadrature step for curve integration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGeometry {
    /// Lower energy bound, `a > 0`.
    pub a: f64,
    /// Upper energy bound, `b > a`.
    pub b: f64,
    /// Vertex translation half-range: `x0` in `[-c, c]`.
    pub c: f64,
    /// Image region `(x1_min, x1_max, x2_min, x2_max)` with `x2_min >= 0`.
    pub image_extent: (f64, f64, f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub n_e: usize,
    pub n_x0: usize,
    /// Quadrature step along `x1` for curve integration.
    pub h_q: f64,
}

impl ScanGeometry {
    /// Validates and builds a geometry. `h_q = None` defaults to half the
    /// image pixel width.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: f64,
        b: f64,
        c: f64,
        image_extent: (f64, f64, f64, f64),
        nx: usize,
        ny: usize,
        n_e: usize,
        n_x0: usize,
        h_q: Option<f64>,
    ) -> Result<Self> {
        if !(a > 0.0 && a < b) {
            return Err(Error::Domain(format!("need 0 < a < b, got a = {a}, b = {b}")));
        }
        if !(c > 0.0) {
            return Err(Error::Domain(format!("need c > 0, got {c}")));
        }
        let (x1_min, x1_max, x2_min, x2_max) = image_extent;
        if !(x1_min < x1_max && x2_min < x2_max) {
            return Err(Error::Domain(format!("degenerate image extent {image_extent:?}")));
        }
        if !(x2_min >= 0.0) {
            return Err(Error::Domain(format!(
                "image region must lie in the upper half plane, got x2_min = {x2_min}"
            )));
        }
        if nx == 0 || ny == 0 || n_e == 0 || n_x0 == 0 {
            return Err(Error::Domain("grid resolutions must be positive".into()));
        }
        let dx = (x1_max - x1_min) / nx as f64;
        let h_q = h_q.unwrap_or(0.5 * dx);
        if !(h_q > 0.0) {
            return Err(Error::Domain(format!("quadrature step must be positive, got {h_q}")));
        }
        Ok(Self { a, b, c, image_extent, nx, ny, n_e, n_x0, h_q })
    }

    /// Zero-filled image grid over the image region.
    pub fn image_grid(&self) -> ImageGrid {
        ImageGrid::new(self.nx, self.ny, self.image_extent).expect("validated in new")
    }

    /// Zero-filled sinogram over the data rectangle.
    pub fn sinogram(&self) -> Sinogram {
        Sinogram::new(self.n_e, self.n_x0, (self.a, self.b, -self.c, self.c))
            .expect("validated in new")
    }

    /// Largest `|x1 - x0|` over the image x1-extent and the vertex range;
    /// curve points beyond this radius never enter the image region.
    pub fn max_radius(&self) -> f64 {
        let (x1_min, x1_max, _, _) = self.image_extent;
        [x1_min - self.c, x1_min + self.c, x1_max - self.c, x1_max + self.c]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    /// Default scan window for `g`-inversion and level sets.
    pub fn r_range(&self) -> (f64, f64) {
        let r_max = self.max_radius();
        (1e-3 * r_max, r_max)
    }

    /// Compact fingerprint used to pair a system matrix with its geometry.
    pub fn fingerprint(&self) -> String {
        let (x1_min, x1_max, x2_min, x2_max) = self.image_extent;
        format!(
            "a={} b={} c={} image=({},{},{},{}) nx={} ny={} nE={} nx0={} hq={}",
            self.a, self.b, self.c, x1_min, x1_max, x2_min, x2_max, self.nx, self.ny, self.n_e,
            self.n_x0, self.h_q
        )
    }
}

/// A grid read back from disk: either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    Image(ImageGrid),
    Sinogram(Sinogram),
}

impl GridData {
    pub fn kind(&self) -> &'static str {
        match self {
            GridData::Image(_) => "image",
            GridData::Sinogram(_) => "sinogram",
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            GridData::Image(g) => (g.nx(), g.ny()),
            GridData::Sinogram(s) => (s.n_e(), s.n_x0()),
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            GridData::Image(g) => g.values(),
            GridData::Sinogram(s) => s.values(),
        }
    }

    pub fn export_pgm(&self, path: impl AsRef<Path>, clip: Option<(f64, f64)>) -> Result<()> {
        match self {
            GridData::Image(g) => g.export_pgm(path, clip),
            GridData::Sinogram(s) => s.export_pgm(path, clip),
        }
    }
}

const MAGIC: &str = "CRGRID 1";

fn write_field(
    path: impl AsRef<Path>,
    kind: &str,
    nx: usize,
    ny: usize,
    extent: (f64, f64, f64, f64),
    values: &[f64],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "{kind}")?;
    writeln!(w, "{nx} {ny}")?;
    writeln!(w, "{} {} {} {}", extent.0, extent.1, extent.2, extent.3)?;
    writeln!(w, "float64 le row-major")?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CRGRID file of either kind.
pub fn read_grid(path: impl AsRef<Path>) -> Result<GridData> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = Vec::new();
    // Header = 5 newline-terminated ASCII lines.
    let mut lines = Vec::new();
    {
        let mut line = Vec::new();
        let mut byte = [0u8; 1];
        while lines.len() < 5 {
            match r.read(&mut byte)? {
                0 => return Err(Error::Format("truncated header".into())),
                _ => {
                    header.push(byte[0]);
                    if byte[0] == b'\n' {
                        lines.push(
                            String::from_utf8(std::mem::take(&mut line))
                                .map_err(|_| Error::Format("header is not UTF-8".into()))?,
                        );
                    } else {
                        line.push(byte[0]);
                    }
                }
            }
        }
    }
    if lines[0] != MAGIC {
        return Err(Error::Format(format!("bad magic '{}', expected '{MAGIC}'", lines[0])));
    }
    let kind = lines[1].as_str();
    if kind != "image" && kind != "sinogram" {
        return Err(Error::Format(format!("unknown grid kind '{kind}'")));
    }
    let dims: Vec<usize> =
        lines[2].split_whitespace().map(|t| t.parse().map_err(|_| ())).collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format(format!("bad dims line '{}'", lines[2])))?;
    if dims.len() != 2 {
        return Err(Error::Format(format!("bad dims line '{}'", lines[2])));
    }
    let extent: Vec<f64> =
        lines[3].split_whitespace().map(|t| t.parse().map_err(|_| ())).collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Format(format!("bad extent line '{}'", lines[3])))?;
    if extent.len() != 4 {
        return Err(Error::Format(format!("bad extent line '{}'", lines[3])));
    }
    if lines[4] != "float64 le row-major" {
        return Err(Error::Format(format!("unsupported payload descriptor '{}'", lines[4])));
    }
    let (nx, ny) = (dims[0], dims[1]);
    let n = nx.checked_mul(ny).ok_or_else(|| Error::Format("dims overflow".into()))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != 8 * n {
        return Err(Error::Format(format!(
            "payload size mismatch: expected {} bytes, got {}",
            8 * n,
            payload.len()
        )));
    }
    let values: Vec<f64> =
        payload.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    let ext = (extent[0], extent[1], extent[2], extent[3]);
    Ok(match kind {
        "image" => GridData::Image(ImageGrid::from_values(nx, ny, ext, values)?),
        _ => GridData::Sinogram(Sinogram::from_values(nx, ny, ext, values)?),
    })
}

/// 16-bit binary graymap (P5, maxval 65535, big-endian samples). Values map
/// linearly from `[lo, hi]` (default: data min/max) and clip outside. Rows
/// are written top-down, i.e. the last grid row first.
fn write_pgm16(
    path: impl AsRef<Path>,
    nx: usize,
    ny: usize,
    values: &[f64],
    clip: Option<(f64, f64)>,
) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("cannot export non-finite values to PGM".into()));
    }
    let (lo, hi) = clip.unwrap_or_else(|| {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    });
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{nx} {ny}\n65535\n")?;
    let span = hi - lo;
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let v = values[iy * nx + ix];
            let sample: u16 = if span == 0.0 {
                32768
            } else {
                let t = ((v - lo) / span).clamp(0.0, 1.0);
                (t * 65535.0).round() as u16
            };
            w.write_all(&sample.to_be_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_csv(path: impl AsRef<Path>, nx: usize, ny: usize, values: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for iy in 0..ny {
        let row: Vec<String> =
            (0..nx).map(|ix| format!("{}", values[iy * nx + ix])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}
