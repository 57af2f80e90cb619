//! Covariance estimates and their block partition.
//!
//! A partition of order `n` splits the N sensors into `n` consecutive groups:
//! `n - 1` groups of P sensors followed by one group holding the remaining
//! `N - (n - 1) P`. Block indices are 1-based throughout, matching the
//! `psi:<n>:<i>` operator names.

use nalgebra::DMatrix;

use crate::array_model::SteeringMatrix;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, CMatrix, C64};
use crate::synthesis::SnapshotBlock;

/// Scale of the default pseudo-inverse cutoff, multiplied by `max(N, K)`.
pub const PINV_TOL_SCALE: f64 = 1e-10;

/// Hermitian N x N covariance, plus the relative singular-value cutoff used
/// by every pseudo-inverse taken from it.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    entries: CMatrix,
    snapshots: Option<usize>,
    pinv_rel_tol: f64,
}

impl CovarianceEstimate {
    fn build(raw: CMatrix, snapshots: Option<usize>) -> Self {
        let n = raw.nrows();
        let entries = hermitian_part(&raw);
        let pinv_rel_tol = PINV_TOL_SCALE * n.max(snapshots.unwrap_or(0)) as f64;
        Self {
            entries,
            snapshots,
            pinv_rel_tol,
        }
    }

    /// Wrap an arbitrary square matrix. It is symmetrized and must be
    /// positive semidefinite up to `1e-10 * ||m||`.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Domain(format!(
                "covariance must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("covariance has non-finite entries".into()));
        }
        let cov = Self::build(m, None);
        let scale = cov.entries.norm();
        let min_eig = cov.entries.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 * scale {
            return Err(Error::Domain(format!(
                "covariance is not positive semidefinite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(cov)
    }

    /// Override the pseudo-inverse cutoff.
    pub fn with_pinv_tolerance(mut self, rel_tol: f64) -> Self {
        self.pinv_rel_tol = rel_tol;
        self
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn sensors(&self) -> usize {
        self.entries.nrows()
    }

    /// K for sample estimates, `None` for model covariances.
    pub fn snapshots(&self) -> Option<usize> {
        self.snapshots
    }

    pub fn pinv_rel_tol(&self) -> f64 {
        self.pinv_rel_tol
    }

    /// `c * Gamma`, keeping tolerance and provenance.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: &self.entries * C64::new(c, 0.0),
            ..self.clone()
        }
    }
}

/// `(1/K) X X^H`, symmetrized.
pub fn sample_covariance(x: &SnapshotBlock) -> Result<CovarianceEstimate> {
    let k = x.snapshots();
    if k == 0 || x.sensors() == 0 {
        return Err(Error::Empty("snapshot block"));
    }
    let s = x.samples();
    let raw = (s * s.adjoint()) / C64::new(k as f64, 0.0);
    Ok(CovarianceEstimate::build(raw, Some(k)))
}

/// Model covariance `A diag(powers) A^H + sigma^2 I`.
pub fn theoretical_covariance(
    a: &SteeringMatrix,
    source_powers: &[f64],
    noise_var: f64,
) -> Result<CovarianceEstimate> {
    if source_powers.len() != a.sources() {
        return Err(Error::LengthMismatch(format!(
            "{} steering columns but {} powers",
            a.sources(),
            source_powers.len()
        )));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::Domain(format!(
            "noise variance must be >= 0, got {noise_var}"
        )));
    }
    let entries = a.entries();
    let mut scaled = entries.clone();
    for (c, &w) in source_powers.iter().enumerate() {
        scaled.column_mut(c).scale_mut(w);
    }
    let mut raw = scaled * entries.adjoint();
    for d in 0..raw.nrows() {
        raw[(d, d)] += C64::new(noise_var, 0.0);
    }
    Ok(CovarianceEstimate::build(raw, None))
}

/// Block layout of an order-`n` partition over N sensors and P sources.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionScheme {
    sensors: usize,
    sources: usize,
    order: usize,
    block_sizes: Vec<usize>,
}

impl PartitionScheme {
    pub fn sensors(&self) -> usize {
        self.sensors
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    /// Number of blocks `n`.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    /// Whether every block has exactly P rows (N = nP).
    pub fn is_uniform(&self) -> bool {
        self.sensors == self.order * self.sources
    }

    /// Size of block `i` (1-based).
    pub fn block_size(&self, i: usize) -> Result<usize> {
        self.check_index(i)?;
        Ok(self.block_sizes[i - 1])
    }

    /// First sensor row (0-based) of block `i` (1-based).
    pub fn block_offset(&self, i: usize) -> Result<usize> {
        self.check_index(i)?;
        Ok((i - 1) * self.sources)
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.order {
            Err(Error::IndexOutOfRange {
                what: "partition block",
                index: i,
                max: self.order,
            })
        } else {
            Ok(())
        }
    }
}

/// Largest admissible partition order `floor(N/P)`.
pub fn max_order(sensors: usize, sources: usize) -> usize {
    sensors.checked_div(sources).unwrap_or(0)
}

/// Partition N sensors into `n` blocks for P sources; requires
/// `2 <= n <= floor(N/P)`.
pub fn make_partition(sensors: usize, sources: usize, order: usize) -> Result<PartitionScheme> {
    if sources == 0 || sensors <= sources {
        return Err(Error::Scenario(format!(
            "partitioning needs N > P >= 1, got N={sensors}, P={sources}"
        )));
    }
    let n_max = max_order(sensors, sources);
    if order < 2 || order > n_max {
        let range = if n_max >= 2 {
            format!("2 <= n <= {n_max}")
        } else {
            format!("empty (floor(N/P) = {n_max} < 2)")
        };
        return Err(Error::Partition {
            sensors,
            sources,
            order,
            range,
        });
    }
    let mut block_sizes = vec![sources; order];
    block_sizes[order - 1] = sensors - (order - 1) * sources;
    Ok(PartitionScheme {
        sensors,
        sources,
        order,
        block_sizes,
    })
}

/// Selection matrix `e_i`: N x size_i, identity on block `i`'s rows.
pub fn selection_matrix(scheme: &PartitionScheme, i: usize) -> Result<DMatrix<f64>> {
    let size = scheme.block_size(i)?;
    let offset = scheme.block_offset(i)?;
    let mut e = DMatrix::zeros(scheme.sensors, size);
    for c in 0..size {
        e[(offset + c, c)] = 1.0;
    }
    Ok(e)
}

/// `Gamma_ij = e_i^T Gamma e_j`.
pub fn covariance_block(
    cov: &CovarianceEstimate,
    scheme: &PartitionScheme,
    i: usize,
    j: usize,
) -> Result<CMatrix> {
    if cov.sensors() != scheme.sensors {
        return Err(Error::LengthMismatch(format!(
            "covariance is {0}x{0} but partition covers {1} sensors",
            cov.sensors(),
            scheme.sensors
        )));
    }
    let (ri, rs) = (scheme.block_offset(i)?, scheme.block_size(i)?);
    let (cj, cs) = (scheme.block_offset(j)?, scheme.block_size(j)?);
    Ok(cov.entries.view((ri, cj), (rs, cs)).into_owned())
}
