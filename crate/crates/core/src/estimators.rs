//! Angular spectra and point estimates.
//!
//! Spectral estimators evaluate, for each scan angle, the reciprocal of the
//! orthogonality measure `a(theta)^H M^H M a(theta)`, where the rows of `M`
//! span (an approximation of) the noise subspace. DoAs therefore show up as
//! peaks. [`esprit`] is the non-spectral baseline.

use nalgebra::linalg::Schur;
use std::cmp::Ordering;

use crate::array_model::{angle_from_phase_step, steering_unchecked, ArrayConfig};
use crate::covariance::CovarianceEstimate;
use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse_with_rank, thin_svd, CMatrix};
use crate::propagators::{PropagatorKind, PropagatorOperator};
use crate::synthesis::SnapshotBlock;

/// Largest value a spectrum may take; quadratic forms below
/// [`MIN_QUADRATIC_FORM`] map here instead of to infinity.
pub const MAX_SPECTRUM_VALUE: f64 = 1e30;
pub const MIN_QUADRATIC_FORM: f64 = 1e-30;

/// Grid points are snapped to this resolution (degrees) so that
/// `start + i * step` does not drift off round values.
const GRID_SNAP_INV: f64 = 1e9;

/// Uniform scan grid from `start` to `stop` (both inclusive) in steps of
/// `step` degrees. Points at exactly +/-90 degrees are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for GridSpec {
    /// -90 to 90 degrees at 0.1 degree: 1799 interior points.
    fn default() -> Self {
        Self {
            start: -90.0,
            stop: 90.0,
            step: 0.1,
        }
    }
}

impl GridSpec {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let g = Self { start, stop, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Domain(format!(
                "grid step must be positive, got {}",
                self.step
            )));
        }
        if !(self.start.is_finite() && self.stop.is_finite() && self.start < self.stop) {
            return Err(Error::Domain(format!(
                "grid needs start < stop, got {}..{}",
                self.start, self.stop
            )));
        }
        if self.start < -90.0 || self.stop > 90.0 {
            return Err(Error::Domain(format!(
                "grid {}..{} leaves [-90, 90]",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    /// Scan angles in ascending order.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| snap(self.start + i as f64 * self.step))
            .filter(|x| x.abs() < 90.0)
            .collect()
    }
}

/// Nearest multiple of 1e-9, as the correctly rounded decimal.
fn snap(x: f64) -> f64 {
    (x * GRID_SNAP_INV).round() / GRID_SNAP_INV
}

/// Pseudo-spectrum over a scan grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularSpectrum {
    grid_deg: Vec<f64>,
    values: Vec<f64>,
    method_id: String,
}

impl AngularSpectrum {
    /// Values must be finite and non-negative, the grid strictly increasing.
    pub fn new(grid_deg: Vec<f64>, values: Vec<f64>, method_id: impl Into<String>) -> Result<Self> {
        if grid_deg.len() != values.len() {
            return Err(Error::LengthMismatch(format!(
                "{} grid points but {} values",
                grid_deg.len(),
                values.len()
            )));
        }
        if grid_deg.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Domain(
                "spectrum grid must be strictly increasing".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Numerical(format!(
                "spectrum value {v} is not finite and >= 0"
            )));
        }
        Ok(Self {
            grid_deg,
            values,
            method_id: method_id.into(),
        })
    }

    pub fn grid_deg(&self) -> &[f64] {
        &self.grid_deg
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method_id(&self) -> &str {
        &self.method_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Estimated directions, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    angles_deg: Vec<f64>,
    method_id: String,
}

impl DoaEstimate {
    pub fn new(mut angles_deg: Vec<f64>, method_id: impl Into<String>) -> Self {
        angles_deg.sort_by(|a, b| a.total_cmp(b));
        Self {
            angles_deg,
            method_id: method_id.into(),
        }
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn method_id(&self) -> &str {
        &self.method_id
    }
}

/// Signal and noise eigenspaces of a covariance.
#[derive(Debug, Clone)]
pub struct EigenSubspaces {
    pub signal_basis: CMatrix,
    pub noise_basis: CMatrix,
    /// All N eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

/// Hermitian eigendecomposition; the top-P eigenvectors span the signal
/// subspace, the remaining N - P the noise subspace.
pub fn eigen_subspaces(cov: &CovarianceEstimate, p: usize) -> Result<EigenSubspaces> {
    let n = cov.sensors();
    if p == 0 || p >= n {
        return Err(Error::Scenario(format!(
            "subspace split needs 1 <= P < N, got P={p}, N={n}"
        )));
    }
    let eig = cov.entries().clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "eigendecomposition did not converge".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let basis = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(EigenSubspaces {
        signal_basis: basis.columns(0, p).into_owned(),
        noise_basis: basis.columns(p, n - p).into_owned(),
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
    })
}

/// N x G matrix of steering vectors over the grid.
fn steering_grid(config: &ArrayConfig, grid: &[f64]) -> CMatrix {
    let mut a = CMatrix::zeros(config.sensors(), grid.len());
    for (c, &theta) in grid.iter().enumerate() {
        a.set_column(c, &steering_unchecked(config, theta));
    }
    a
}

/// Spectrum `1 / ||M a(theta)||^2` for an arbitrary row operator `M`.
pub fn spectrum_from_matrix(
    m: &CMatrix,
    config: &ArrayConfig,
    grid: &GridSpec,
    method_id: impl Into<String>,
) -> Result<AngularSpectrum> {
    grid.validate()?;
    if m.nrows() == 0 {
        return Err(Error::Empty("operator rows"));
    }
    if m.ncols() != config.sensors() {
        return Err(Error::LengthMismatch(format!(
            "operator has {} columns, array has {} sensors",
            m.ncols(),
            config.sensors()
        )));
    }
    let points = grid.points();
    let projected = m * steering_grid(config, &points);
    let values = projected
        .column_iter()
        .map(|col| {
            let q = col.norm_squared();
            if q < MIN_QUADRATIC_FORM {
                MAX_SPECTRUM_VALUE
            } else {
                (1.0 / q).min(MAX_SPECTRUM_VALUE)
            }
        })
        .collect();
    AngularSpectrum::new(points, values, method_id)
}

/// Identifier of an operator in the `psi:<n>:<i>` / `prop*` grammar.
pub fn operator_id(op: &PropagatorOperator) -> String {
    match (op.kind(), op.order_n(), op.block_i()) {
        (PropagatorKind::Standard, ..) => "prop".into(),
        (PropagatorKind::Q1, ..) => "prop-q1".into(),
        (PropagatorKind::Q2, ..) => "prop-q2".into(),
        (PropagatorKind::Extended, Some(n), Some(i)) => format!("psi:{n}:{i}"),
        (PropagatorKind::Extended, Some(n), None) => format!("psi:{n}"),
        (PropagatorKind::Extended, None, _) => "psi".into(),
    }
}

pub fn spectrum_from_operator(
    op: &PropagatorOperator,
    config: &ArrayConfig,
    grid: &GridSpec,
) -> Result<AngularSpectrum> {
    spectrum_from_matrix(op.entries(), config, grid, operator_id(op))
}

/// MUSIC pseudo-spectrum from the noise eigenvectors.
pub fn music_spectrum(
    cov: &CovarianceEstimate,
    p: usize,
    config: &ArrayConfig,
    grid: &GridSpec,
) -> Result<AngularSpectrum> {
    let sub = eigen_subspaces(cov, p)?;
    spectrum_from_matrix(&sub.noise_basis.adjoint(), config, grid, "music")
}

fn esprit_subarray(n: usize, p: usize, m: Option<usize>) -> Result<usize> {
    let m = m.unwrap_or(n - 1);
    if m < p || m > n - 1 {
        return Err(Error::Domain(format!(
            "ESPRIT subarray size must satisfy P <= m <= N-1, got m={m}, P={p}, N={n}"
        )));
    }
    Ok(m)
}

/// Rotational-invariance step on a signal basis `us` (N x P).
fn esprit_from_basis(
    us: &CMatrix,
    config: &ArrayConfig,
    m: usize,
    method_id: String,
) -> Result<DoaEstimate> {
    let (n, p) = us.shape();
    let head = us.rows(0, m).into_owned();
    let tail = us.rows(n - m, m).into_owned();
    let (head_pinv, rank) = pseudo_inverse_with_rank(&head, 1e-10 * n as f64);
    if rank < p {
        return Err(Error::IllConditioned(format!(
            "ESPRIT subarray basis has rank {rank} < P={p}"
        )));
    }
    let rotation = head_pinv * tail;
    let eigenvalues = Schur::new(rotation)
        .eigenvalues()
        .ok_or_else(|| Error::Numerical("ESPRIT rotation eigenvalues did not converge".into()))?;
    // The shift between subarrays is n - m sensors.
    let shift = (n - m) as f64;
    let angles = eigenvalues
        .iter()
        .map(|z| angle_from_phase_step(config, z.arg() / shift))
        .collect();
    Ok(DoaEstimate::new(angles, method_id))
}

fn esprit_id(m: usize, n: usize) -> String {
    if m == n - 1 {
        "esprit".into()
    } else {
        format!("esprit:{m}")
    }
}

/// ESPRIT from a covariance. `m` defaults to N - 1.
///
/// The two subarrays are the first and last `m` sensors, so they are shifted
/// by `N - m` elements; for `m < N - 1` directions are unambiguous only while
/// `(N - m) * |mu| < pi`.
pub fn esprit(
    cov: &CovarianceEstimate,
    p: usize,
    config: &ArrayConfig,
    m: Option<usize>,
) -> Result<DoaEstimate> {
    let n = cov.sensors();
    if n != config.sensors() {
        return Err(Error::LengthMismatch(format!(
            "covariance covers {n} sensors, array has {}",
            config.sensors()
        )));
    }
    let sub = eigen_subspaces(cov, p)?;
    let m = esprit_subarray(n, p, m)?;
    esprit_from_basis(&sub.signal_basis, config, m, esprit_id(m, n))
}

/// ESPRIT with the signal basis taken from the left singular vectors of the
/// snapshot matrix.
pub fn esprit_from_snapshots(
    x: &SnapshotBlock,
    p: usize,
    config: &ArrayConfig,
    m: Option<usize>,
) -> Result<DoaEstimate> {
    let n = x.sensors();
    if n != config.sensors() {
        return Err(Error::LengthMismatch(format!(
            "snapshots cover {n} sensors, array has {}",
            config.sensors()
        )));
    }
    if p == 0 || p >= n || x.snapshots() < p {
        return Err(Error::Scenario(format!(
            "ESPRIT needs 1 <= P < N and at least P snapshots, got P={p}, N={n}, K={}",
            x.snapshots()
        )));
    }
    let m = esprit_subarray(n, p, m)?;
    let us = thin_svd(x.samples()).u.columns(0, p).into_owned();
    esprit_from_basis(&us, config, m, esprit_id(m, n))
}

/// Top-`p` peaks of a spectrum.
///
/// Local maxima are points (or flat runs) strictly above both neighbours; a
/// flat run counts once, at its smallest angle. They are ranked by value,
/// ties going to the smaller angle. If fewer than `p` exist the remaining
/// slots are filled with the highest unused grid values. The result is
/// sorted ascending.
pub fn find_peaks(spectrum: &AngularSpectrum, p: usize) -> Result<DoaEstimate> {
    let v = spectrum.values();
    let len = v.len();
    if len < 3 {
        return Err(Error::Domain(format!(
            "peak search needs at least 3 grid points, got {len}"
        )));
    }
    if p == 0 || p > len {
        return Err(Error::Domain(format!(
            "cannot pick {p} peaks from {len} grid points"
        )));
    }
    let mut maxima = Vec::new();
    let mut idx = 1;
    while idx + 1 < len {
        if v[idx] > v[idx - 1] {
            let mut end = idx;
            while end + 1 < len && v[end + 1] == v[idx] {
                end += 1;
            }
            if end + 1 < len && v[end + 1] < v[idx] {
                maxima.push(idx);
            }
            idx = end + 1;
        } else {
            idx += 1;
        }
    }
    let by_value = |a: &usize, b: &usize| -> Ordering { v[*b].total_cmp(&v[*a]).then(a.cmp(b)) };
    maxima.sort_by(by_value);
    maxima.truncate(p);
    if maxima.len() < p {
        let mut rest: Vec<usize> = (0..len).filter(|i| !maxima.contains(i)).collect();
        rest.sort_by(by_value);
        maxima.extend(rest.into_iter().take(p - maxima.len()));
    }
    let grid = spectrum.grid_deg();
    Ok(DoaEstimate::new(
        maxima.into_iter().map(|i| grid[i]).collect(),
        spectrum.method_id(),
    ))
}
