//! Function spaces over axis-aligned boxes.
//!
//! [`PolyField`] carries exact polynomial multivector fields for identity checks;
//! [`GridFunction`] carries nodal multilinear data for the discrete solver.

mod grid;
mod poly;

pub use grid::{Grid, GridFunction, ReferenceElement};
pub use poly::{PolyField, DEFAULT_DEGREE_CAP};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clifford::MAX_DIM;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Euclidean,
    Hyperbolic,
    Spherical,
}

impl FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Geometry> {
        match s {
            "euclidean" => Ok(Geometry::Euclidean),
            "hyperbolic" => Ok(Geometry::Hyperbolic),
            "spherical" => Ok(Geometry::Spherical),
            _ => Err(Error::Config(format!("unknown geometry '{s}'"))),
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Geometry::Euclidean => "euclidean",
            Geometry::Hyperbolic => "hyperbolic",
            Geometry::Spherical => "spherical",
        };
        f.write_str(s)
    }
}

/// Open box Π(loᵢ, hiᵢ). In hyperbolic geometry the last coordinate is y > 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
    geometry: Geometry,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, geometry: Geometry) -> Result<BoxDomain> {
        let n = lo.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidDomain(format!("{n} axes")));
        }
        if hi.len() != n {
            return Err(Error::InvalidDomain(format!(
                "lo has {n} entries, hi has {}",
                hi.len()
            )));
        }
        for i in 0..n {
            if !(lo[i].is_finite() && hi[i].is_finite() && lo[i] < hi[i]) {
                return Err(Error::InvalidDomain(format!(
                    "axis {}: ({}, {})",
                    i + 1,
                    lo[i],
                    hi[i]
                )));
            }
        }
        if geometry == Geometry::Hyperbolic {
            if n < 2 {
                return Err(Error::InvalidDomain("hyperbolic boxes need n >= 2".into()));
            }
            if lo[n - 1] <= 0.0 {
                return Err(Error::InvalidDomain(format!(
                    "hyperbolic boxes need y > 0, got lower bound {}",
                    lo[n - 1]
                )));
            }
        }
        Ok(BoxDomain { lo, hi, geometry })
    }

    /// The unit cube (0,1)ⁿ.
    pub fn unit(n: usize, geometry: Geometry) -> Result<BoxDomain> {
        BoxDomain::new(vec![0.0; n], vec![1.0; n], geometry)
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).collect()
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// (m, M): extrema of y for hyperbolic boxes, of |x| over the closed box otherwise
    /// (euclidean boxes report m = 0).
    pub fn extrema(&self) -> (f64, f64) {
        let n = self.n();
        match self.geometry {
            Geometry::Hyperbolic => (self.lo[n - 1], self.hi[n - 1]),
            Geometry::Spherical => (self.min_abs_x(), self.max_abs_x()),
            Geometry::Euclidean => (0.0, self.max_abs_x()),
        }
    }

    fn min_abs_x(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| {
                let d = if a > 0.0 {
                    a
                } else if b < 0.0 {
                    -b
                } else {
                    0.0
                };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    fn max_abs_x(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Sharp Poincaré constant of the box, (Σ (π/Lᵢ)²)^{−1/2}.
    pub fn poincare_constant(&self) -> f64 {
        self.lengths()
            .iter()
            .map(|l| (PI / l).powi(2))
            .sum::<f64>()
            .powf(-0.5)
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lo[i] && v <= self.hi[i])
    }
}

/// Free-function form of [`BoxDomain::extrema`].
pub fn domain_extrema(d: &BoxDomain) -> (f64, f64) {
    d.extrema()
}

/// Free-function form of [`BoxDomain::poincare_constant`].
pub fn poincare_constant_box(d: &BoxDomain) -> f64 {
    d.poincare_constant()
}
