//! Test phantoms and their wavefront-set samples.
//!
//! Phantoms are characteristic functions: a near-delta pixel block and a
//! disc. Rasterization is binary by pixel-center membership, matching the
//! inverse-crime testing setup the operators are validated under.

use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::microlocal::WavefrontElement;

/// Phantom shape with value 1 inside and 0 outside.
#[derive(Debug, Clone, PartialEq)]
pub enum PhantomSpec {
    /// Axis-aligned block `[cx - hw1, cx + hw1] x [cy - hw2, cy + hw2]`
    /// standing in for a delta function.
    PixelDelta { center: [f64; 2], half_widths: [f64; 2] },
    /// Open disc of the given radius.
    Disc { center: [f64; 2], radius: f64 },
}

impl PhantomSpec {
    pub fn pixel_delta(center: [f64; 2], half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::Domain(format!("delta half-width must be positive, got {half_width}")));
        }
        Ok(PhantomSpec::PixelDelta { center, half_widths: [half_width, half_width] })
    }

    pub fn disc(center: [f64; 2], radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("disc radius must be positive, got {radius}")));
        }
        Ok(PhantomSpec::Disc { center, radius })
    }

    /// Parses the CLI phantom string: `delta:cx,cy[,hw]` or `disc:cx,cy,r`.
    /// A delta without explicit half-width uses `default_half_width`.
    pub fn parse(spec: &str, default_half_width: f64) -> Result<Self> {
        let bad = |msg: &str| Error::Domain(format!("phantom spec '{spec}': {msg}"));
        let (name, rest) = spec.split_once(':').ok_or_else(|| bad("expected kind:params"))?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("parameters must be decimal literals"))?;
        match (name, nums.len()) {
            ("delta", 2) => Self::pixel_delta([nums[0], nums[1]], default_half_width),
            ("delta", 3) => Self::pixel_delta([nums[0], nums[1]], nums[2]),
            ("disc", 3) => Self::disc([nums[0], nums[1]], nums[2]),
            ("delta", _) => Err(bad("delta takes cx,cy[,hw]")),
            ("disc", _) => Err(bad("disc takes cx,cy,r")),
            _ => Err(bad("unknown phantom kind")),
        }
    }

    /// Bounding box of the support.
    fn bounds(&self) -> (f64, f64, f64, f64) {
        match self {
            PhantomSpec::PixelDelta { center, half_widths } => (
                center[0] - half_widths[0],
                center[0] + half_widths[0],
                center[1] - half_widths[1],
                center[1] + half_widths[1],
            ),
            PhantomSpec::Disc { center, radius } => (
                center[0] - radius,
                center[0] + radius,
                center[1] - radius,
                center[1] + radius,
            ),
        }
    }

    /// Binary rasterization onto pixel centers of an `nx x ny` grid over
    /// `extent`. The support must lie strictly inside the extent with
    /// `x2 > 0` and cover at least one pixel center.
    pub fn rasterize(
        &self,
        extent: (f64, f64, f64, f64),
        nx: usize,
        ny: usize,
    ) -> Result<ImageGrid> {
        let (lo1, hi1, lo2, hi2) = self.bounds();
        let (x1_min, x1_max, x2_min, x2_max) = extent;
        if !(lo1 > x1_min && hi1 < x1_max && lo2 > x2_min && hi2 < x2_max) {
            return Err(Error::Domain(format!(
                "phantom support [{lo1}, {hi1}] x [{lo2}, {hi2}] is not strictly inside the image extent {extent:?}"
            )));
        }
        if !(lo2 > 0.0) {
            return Err(Error::Domain(format!(
                "phantom support must satisfy x2 > 0, got lower bound {lo2}"
            )));
        }
        let mut grid = ImageGrid::new(nx, ny, extent)?;
        let mut hits = 0usize;
        for iy in 0..ny {
            let x2 = grid.x2_center(iy);
            for ix in 0..nx {
                let x1 = grid.x1_center(ix);
                let inside = match self {
                    PhantomSpec::PixelDelta { center, half_widths } => {
                        (x1 - center[0]).abs() <= half_widths[0]
                            && (x2 - center[1]).abs() <= half_widths[1]
                    }
                    PhantomSpec::Disc { center, radius } => {
                        let dx = x1 - center[0];
                        let dy = x2 - center[1];
                        dx * dx + dy * dy < radius * radius
                    }
                };
                if inside {
                    grid.set(ix, iy, 1.0);
                    hits += 1;
                }
            }
        }
        if hits == 0 {
            return Err(Error::Domain(
                "phantom support contains no pixel center at this resolution".into(),
            ));
        }
        Ok(grid)
    }

    /// Wavefront-set samples. A disc yields `n` boundary points with unit
    /// outward normals in both signs; a pixel delta yields its center with
    /// `n` uniformly spaced unit covectors.
    pub fn wavefront_samples(&self, n: usize) -> Result<Vec<WavefrontElement>> {
        if n < 4 {
            return Err(Error::Domain(format!("need at least 4 samples, got {n}")));
        }
        let tau = std::f64::consts::TAU;
        match self {
            PhantomSpec::Disc { center, radius } => {
                let mut out = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let t = tau * i as f64 / n as f64;
                    let nu = [t.cos(), t.sin()];
                    let p = [center[0] + radius * nu[0], center[1] + radius * nu[1]];
                    out.push(WavefrontElement::new(p, nu)?);
                    out.push(WavefrontElement::new(p, [-nu[0], -nu[1]])?);
                }
                Ok(out)
            }
            PhantomSpec::PixelDelta { center, .. } => (0..n)
                .map(|i| {
                    let t = tau * i as f64 / n as f64;
                    WavefrontElement::new(*center, [t.cos(), t.sin()])
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX1_EXTENT: (f64, f64, f64, f64) = (-1.0, 1.0, 0.0, 2.0);

    #[test]
    fn delta_rasterizes_to_small_block() {
        let spec = PhantomSpec::pixel_delta([0.0, 1.0], 0.015).unwrap();
        let g = spec.rasterize(EX1_EXTENT, 128, 128).unwrap();
        let count = g.values().iter().filter(|v| **v == 1.0).count();
        // Columns/rows hit: centers within +-0.015 of the point, i.e. a 2- or
        // 3-pixel-wide block at this resolution.
        let cols: Vec<usize> = (0..128).filter(|&ix| (0..128).any(|iy| g.get(ix, iy) == 1.0)).collect();
        let rows: Vec<usize> = (0..128).filter(|&iy| (0..128).any(|ix| g.get(ix, iy) == 1.0)).collect();
        assert!((2..=3).contains(&cols.len()), "block width {} columns", cols.len());
        assert!((2..=3).contains(&rows.len()), "block height {} rows", rows.len());
        assert_eq!(count, cols.len() * rows.len());
        // The block contains the pixel holding (0, 1).
        let (ix, iy) = g.pixel_containing(0.0, 1.0).unwrap();
        assert_eq!(g.get(ix, iy), 1.0);
    }

    #[test]
    fn disc_pixel_count_matches_area() {
        let spec = PhantomSpec::disc([0.0, 1.0], 0.2).unwrap();
        let g = spec.rasterize(EX1_EXTENT, 128, 128).unwrap();
        let count = g.values().iter().filter(|v| **v == 1.0).count() as f64;
        let expected = std::f64::consts::PI * 0.2 * 0.2 / (g.dx() * g.dy());
        assert!(
            (count - expected).abs() <= 0.05 * expected,
            "disc pixel count {count} vs area estimate {expected}"
        );
    }

    #[test]
    fn rasterize_is_binary() {
        let spec = PhantomSpec::disc([0.3, 0.9], 0.25).unwrap();
        let g = spec.rasterize(EX1_EXTENT, 64, 64).unwrap();
        assert!(g.values().iter().all(|v| *v == 0.0 || *v == 1.0));
    }

    #[test]
    fn support_outside_extent_errors() {
        let spec = PhantomSpec::disc([0.0, 1.0], 5.0).unwrap();
        assert!(matches!(spec.rasterize(EX1_EXTENT, 64, 64), Err(Error::Domain(_))));
        // Support dipping into x2 <= 0.
        let low = PhantomSpec::disc([0.0, 0.1], 0.2).unwrap();
        assert!(matches!(low.rasterize((-1.0, 1.0, -1.0, 2.0), 64, 64), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_rasterization_errors() {
        // Half-width smaller than half a pixel, centered between pixel centers.
        let spec = PhantomSpec::pixel_delta([0.0, 1.0], 1e-4).unwrap();
        assert!(matches!(spec.rasterize(EX1_EXTENT, 32, 32), Err(Error::Domain(_))));
    }

    #[test]
    fn disc_wavefront_samples_normals() {
        let spec = PhantomSpec::disc([0.0, 1.0], 0.2).unwrap();
        let ws = spec.wavefront_samples(4).unwrap();
        assert_eq!(ws.len(), 8);
        // Outward samples at the four axis points.
        let expect = [
            ([0.2, 1.0], [1.0, 0.0]),
            ([0.0, 1.2], [0.0, 1.0]),
            ([-0.2, 1.0], [-1.0, 0.0]),
            ([0.0, 0.8], [0.0, -1.0]),
        ];
        for (p, nu) in expect {
            assert!(
                ws.iter().any(|w| (w.x[0] - p[0]).abs() < 1e-12
                    && (w.x[1] - p[1]).abs() < 1e-12
                    && (w.xi[0] - nu[0]).abs() < 1e-12
                    && (w.xi[1] - nu[1]).abs() < 1e-12),
                "missing sample at {p:?} with normal {nu:?}"
            );
        }
        // Normals are unit and orthogonal to the boundary tangent.
        for w in &ws {
            let norm = (w.xi[0] * w.xi[0] + w.xi[1] * w.xi[1]).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
            let radial = [w.x[0] - 0.0, w.x[1] - 1.0];
            let cross = radial[0] * w.xi[1] - radial[1] * w.xi[0];
            assert!(cross.abs() < 1e-12, "normal not radial: cross = {cross}");
        }
    }

    #[test]
    fn delta_wavefront_samples_cover_directions() {
        let spec = PhantomSpec::pixel_delta([0.0, 1.0], 0.015).unwrap();
        let ws = spec.wavefront_samples(8).unwrap();
        assert_eq!(ws.len(), 8);
        for (i, w) in ws.iter().enumerate() {
            assert_eq!(w.x, [0.0, 1.0]);
            let angle = w.xi[1].atan2(w.xi[0]).rem_euclid(std::f64::consts::TAU);
            let expect = std::f64::consts::TAU * i as f64 / 8.0;
            assert!((angle - expect).abs() < 1e-12, "sample {i} at angle {angle}");
            let norm = (w.xi[0] * w.xi[0] + w.xi[1] * w.xi[1]).sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn parse_specs() {
        let d = PhantomSpec::parse("delta:0,1", 0.015).unwrap();
        assert_eq!(d, PhantomSpec::PixelDelta { center: [0.0, 1.0], half_widths: [0.015, 0.015] });
        let d2 = PhantomSpec::parse("delta:0,10,0.5", 0.015).unwrap();
        assert_eq!(d2, PhantomSpec::PixelDelta { center: [0.0, 10.0], half_widths: [0.5, 0.5] });
        let c = PhantomSpec::parse("disc:0,1,0.2", 0.015).unwrap();
        assert_eq!(c, PhantomSpec::Disc { center: [0.0, 1.0], radius: 0.2 });
        assert!(PhantomSpec::parse("disc:0,1", 0.015).is_err());
        assert!(PhantomSpec::parse("blob:1,2", 0.015).is_err());
        assert!(PhantomSpec::parse("delta:a,b", 0.015).is_err());
    }
}
