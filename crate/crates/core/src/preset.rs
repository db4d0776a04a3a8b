//! Experiment presets: bound profiles, geometries and phantoms for the
//! standard scanning setups.

use crate::error::{Error, Result};
use crate::grid::ScanGeometry;
use crate::phantom::PhantomSpec;
use crate::profiles::CurveProfile;

/// A named scanning setup with its profile, data rectangle, image region and
/// reference phantoms.
#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub profile: CurveProfile,
    pub geometry: ScanGeometry,
    /// Near-delta phantom: a small pixel block.
    pub delta: PhantomSpec,
    /// Disc phantom.
    pub disc: PhantomSpec,
}

impl ExperimentPreset {
    /// Straight broken rays on `[-1, 1] x [0, 2]`, data `E` in `(0.01, 2.83)`
    /// and `x0` in `[-2, 2]`.
    pub fn ex1_compton() -> Self {
        Self {
            name: "ex1-compton",
            profile: CurveProfile::compton(),
            geometry: standard_geometry(2.83, 2.0, (-1.0, 1.0, 0.0, 2.0)),
            delta: PhantomSpec::pixel_delta([0.0, 1.0], 0.015).expect("static"),
            disc: PhantomSpec::disc([0.0, 1.0], 0.2).expect("static"),
        }
    }

    /// Bragg curves on the same region and data rectangle as `ex1-compton`.
    pub fn ex2_bragg() -> Self {
        Self {
            name: "ex2-bragg",
            profile: CurveProfile::bragg(),
            geometry: standard_geometry(2.83, 2.0, (-1.0, 1.0, 0.0, 2.0)),
            delta: PhantomSpec::pixel_delta([0.0, 1.0], 0.015).expect("static"),
            disc: PhantomSpec::disc([0.0, 1.0], 0.2).expect("static"),
        }
    }

    /// Sinusoid curves (`eps = 0.1`) on `[-10, 10] x [0, 20]`, data `E` in
    /// `(0.01, 3.77)` and `x0` in `[-20, 20]` - ten times the ex1 scale so the
    /// curves oscillate within the region.
    pub fn ex4_sinusoid() -> Self {
        Self {
            name: "ex4-sinusoid",
            profile: CurveProfile::sinusoid(0.1).expect("static"),
            geometry: standard_geometry(3.77, 20.0, (-10.0, 10.0, 0.0, 20.0)),
            delta: PhantomSpec::pixel_delta([0.0, 10.0], 0.15).expect("static"),
            disc: PhantomSpec::disc([0.0, 10.0], 2.0).expect("static"),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "ex1-compton" => Ok(Self::ex1_compton()),
            "ex2-bragg" => Ok(Self::ex2_bragg()),
            "ex4-sinusoid" => Ok(Self::ex4_sinusoid()),
            _ => Err(Error::Domain(format!(
                "unknown preset '{name}'; available: ex1-compton, ex2-bragg, ex4-sinusoid"
            ))),
        }
    }

    pub fn names() -> [&'static str; 3] {
        ["ex1-compton", "ex2-bragg", "ex4-sinusoid"]
    }

    /// Same preset at a different resolution.
    pub fn with_resolution(mut self, nx: usize, ny: usize, n_e: usize, n_x0: usize) -> Result<Self> {
        let g = &self.geometry;
        self.geometry = ScanGeometry::new(g.a, g.b, g.c, g.image_extent, nx, ny, n_e, n_x0, None)?;
        Ok(self)
    }
}

/// Default resolutions: 128 x 128 image, 128 (E) x 256 (x0) sinogram.
fn standard_geometry(b: f64, c: f64, image_extent: (f64, f64, f64, f64)) -> ScanGeometry {
    ScanGeometry::new(0.01, b, c, image_extent, 128, 128, 128, 256, None).expect("static preset")
}

/// Parameters of the offset-Bragg Bolker scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppendixAScan {
    pub x1_max: f64,
    pub n1: usize,
    pub n2: usize,
    pub fd_step: f64,
}

impl Default for AppendixAScan {
    fn default() -> Self {
        Self { x1_max: 3.0, n1: 300, n2: 200, fd_step: 1e-4 }
    }
}
