//! Uniform linear array geometry: steering vectors and channel matrices.
//!
//! The first sensor is the phase reference. For a plane wave from `theta`
//! (degrees from broadside), sensor `j` (0-based) sees the phase factor
//! `exp(-i * j * mu)` with `mu = 2 * pi * (d / lambda) * sin(theta)`.
//! Every module in the crate uses this sign convention, including the angle
//! inversion in ESPRIT ([`angle_from_phase_step`]).

use nalgebra::DMatrix;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

/// Half-wavelength spacing, the usual ULA default.
pub const DEFAULT_SPACING_RATIO: f64 = 0.5;

/// Geometry of a uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    sensors: usize,
    spacing_ratio: f64,
}

impl ArrayConfig {
    /// `sensors >= 2` and `0 < spacing_ratio <= 0.5` (inter-element distance
    /// in wavelengths; larger spacings alias).
    pub fn new(sensors: usize, spacing_ratio: f64) -> Result<Self> {
        if sensors < 2 {
            return Err(Error::Domain(format!(
                "array needs at least 2 sensors, got {sensors}"
            )));
        }
        if !(spacing_ratio > 0.0 && spacing_ratio <= 0.5) {
            return Err(Error::Domain(format!(
                "spacing ratio d/lambda must lie in (0, 0.5], got {spacing_ratio}"
            )));
        }
        Ok(Self {
            sensors,
            spacing_ratio,
        })
    }

    /// Half-wavelength array with `sensors` elements.
    pub fn half_wavelength(sensors: usize) -> Result<Self> {
        Self::new(sensors, DEFAULT_SPACING_RATIO)
    }

    pub fn sensors(&self) -> usize {
        self.sensors
    }

    pub fn spacing_ratio(&self) -> f64 {
        self.spacing_ratio
    }
}

/// Channel matrix `A(theta)`: one steering vector per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringMatrix {
    entries: CMatrix,
    angles_deg: Vec<f64>,
}

impl SteeringMatrix {
    /// N x P complex entries.
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn sensors(&self) -> usize {
        self.entries.nrows()
    }

    pub fn sources(&self) -> usize {
        self.entries.ncols()
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }
}

pub(crate) fn check_angle(angle_deg: f64) -> Result<()> {
    if angle_deg.is_finite() && angle_deg > -90.0 && angle_deg < 90.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "angle {angle_deg} deg outside the open interval (-90, 90)"
        )))
    }
}

/// Inter-sensor phase step `mu` for a wave arriving from `angle_deg`.
pub fn phase_step(config: &ArrayConfig, angle_deg: f64) -> f64 {
    2.0 * PI * config.spacing_ratio * angle_deg.to_radians().sin()
}

/// Inverse of [`phase_step`]. `step` is the argument of the per-sensor
/// rotation factor `exp(i * step)`; under the steering convention that factor
/// is `exp(-i * mu)`. Out-of-range arguments are clamped onto endfire.
pub fn angle_from_phase_step(config: &ArrayConfig, step: f64) -> f64 {
    let s = (-step / (2.0 * PI * config.spacing_ratio)).clamp(-1.0, 1.0);
    s.asin().to_degrees()
}

/// Steering vector `a(theta)` of length N.
pub fn steering_vector(config: &ArrayConfig, angle_deg: f64) -> Result<CVector> {
    check_angle(angle_deg)?;
    Ok(steering_unchecked(config, angle_deg))
}

pub(crate) fn steering_unchecked(config: &ArrayConfig, angle_deg: f64) -> CVector {
    let mu = phase_step(config, angle_deg);
    CVector::from_fn(config.sensors, |j, _| {
        C64::from_polar(1.0, -(j as f64) * mu)
    })
}

/// Channel matrix for a set of distinct directions. Columns keep the order
/// of `angles_deg`.
pub fn channel_matrix(config: &ArrayConfig, angles_deg: &[f64]) -> Result<SteeringMatrix> {
    if angles_deg.is_empty() {
        return Err(Error::Empty("angle list"));
    }
    for &a in angles_deg {
        check_angle(a)?;
    }
    for (i, a) in angles_deg.iter().enumerate() {
        if angles_deg[i + 1..].contains(a) {
            return Err(Error::DegenerateScenario(format!(
                "angle {a} deg appears more than once"
            )));
        }
    }
    let mut entries = CMatrix::zeros(config.sensors, angles_deg.len());
    for (col, &a) in angles_deg.iter().enumerate() {
        entries.set_column(col, &steering_unchecked(config, a));
    }
    Ok(SteeringMatrix {
        entries,
        angles_deg: angles_deg.to_vec(),
    })
}

/// Exchange (reversal) matrix: ones on the anti-diagonal.
pub fn exchange_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { 1.0 } else { 0.0 })
}
