//! Propagator operators: linear maps whose rows annihilate the channel
//! matrix and which are read directly off covariance blocks, with no
//! eigendecomposition.
//!
//! Three classical forms split the covariance into a P-row head and an
//! `N - P` row tail:
//!
//! * `Q  = [ (Gs^+ Gn)^H | -I ]` from the column split `Gamma = [Gs | Gn]`,
//! * `Q1 = [ G21 G11^-1 | -I ]`,
//! * `Q2 = [ -I | G12 G22^+ ]` (needs N >= 2P).
//!
//! The extended family partitions the covariance into `n x n` blocks
//! ([`PartitionScheme`]). Blocks of the channel matrix are related through
//! off-diagonal covariance blocks only,
//!
//! ```text
//! A_i = Gamma_ik Gamma_jk^+ A_j        for any k not in {i, j},
//! ```
//!
//! so summing over every `j != i` gives the block-`i` operator
//!
//! ```text
//! Psi_ni = sum_{j != i} Gamma_ik(j) Gamma_jk(j)^+ e_j^T  -  (n - 1) e_i^T
//! ```
//!
//! with `Psi_ni A = 0` in the noiseless limit. Stacking the `n` operators
//! gives the N x N assembled operator `Psi_n`, whose trace is `-(n - 1) N`.
//!
//! For `n = 2` no third block exists; the free index falls back to `k = j`,
//! which reproduces `Q2` (i = 1) and `Q1` (i = 2).

use crate::covariance::{covariance_block, max_order, CovarianceEstimate, PartitionScheme};
use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse_with_rank, scaled_identity, CMatrix};

pub use crate::linalg::pseudo_inverse;

/// Which construction produced an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PropagatorKind {
    /// `Q`, column split of the covariance.
    Standard,
    Q1,
    Q2,
    /// `Psi_ni`, or the assembled `Psi_n` when `block_i` is `None`.
    Extended,
}

/// Rule for picking the free block index `k` of each transfer term.
///
/// The default is the cyclic successor: for target block `i` and source
/// block `j`, `k` is the first index after `j` in the cyclic order `1..=n`
/// that is neither `i` nor `j`. Individual `(i, j)` pairs can be pinned to a
/// different `k`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KStrategy {
    overrides: Vec<((usize, usize), usize)>,
}

impl KStrategy {
    pub fn cyclic() -> Self {
        Self::default()
    }

    /// Use `k` for the transfer term of block `j` inside operator `i`.
    pub fn with_override(mut self, i: usize, j: usize, k: usize) -> Self {
        self.overrides.retain(|&(key, _)| key != (i, j));
        self.overrides.push(((i, j), k));
        self
    }

    /// The `k` used for term `j` of operator `i` under an order-`n` partition.
    pub fn choose(&self, order: usize, i: usize, j: usize) -> Result<usize> {
        if let Some(&(_, k)) = self.overrides.iter().find(|(key, _)| *key == (i, j)) {
            check_k(order, i, j, k)?;
            return Ok(k);
        }
        if order == 2 {
            return Ok(j);
        }
        let mut k = j;
        loop {
            k = k % order + 1;
            if k != i && k != j {
                return Ok(k);
            }
        }
    }
}

fn check_k(order: usize, i: usize, j: usize, k: usize) -> Result<()> {
    if k == 0 || k > order {
        return Err(Error::IndexOutOfRange {
            what: "transfer index k",
            index: k,
            max: order,
        });
    }
    let ok = if order == 2 { k == j } else { k != i && k != j };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "k={k} is not admissible for i={i}, j={j} with n={order}"
        )))
    }
}

/// A noise-subspace operator together with how it was built.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorOperator {
    entries: CMatrix,
    kind: PropagatorKind,
    order_n: Option<usize>,
    block_i: Option<usize>,
    k_choices: Option<Vec<usize>>,
}

impl PropagatorOperator {
    /// rows x N coefficient matrix.
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn kind(&self) -> PropagatorKind {
        self.kind
    }

    pub fn order_n(&self) -> Option<usize> {
        self.order_n
    }

    pub fn block_i(&self) -> Option<usize> {
        self.block_i
    }

    /// For `Psi_ni`: the `k` used for each `j = 1..=n` (the entry at `i` is
    /// `i` itself and carries no meaning).
    pub fn k_choices(&self) -> Option<&[usize]> {
        self.k_choices.as_deref()
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }
}

fn check_sources(cov: &CovarianceEstimate, p: usize) -> Result<usize> {
    let n = cov.sensors();
    if p == 0 || p >= n {
        return Err(Error::Scenario(format!(
            "propagators need 1 <= P < N, got P={p}, N={n}"
        )));
    }
    Ok(n)
}

/// `Q = [ (Gs^+ Gn)^H | -I_{N-P} ]`, (N - P) x N.
pub fn standard_propagator(cov: &CovarianceEstimate, p: usize) -> Result<PropagatorOperator> {
    let n = check_sources(cov, p)?;
    let g = cov.entries();
    let gs = g.columns(0, p).into_owned();
    let gn = g.columns(p, n - p);
    let (gs_pinv, rank) = pseudo_inverse_with_rank(&gs, cov.pinv_rel_tol());
    if rank < p {
        return Err(Error::IllConditioned(format!(
            "first {p} covariance columns have rank {rank}"
        )));
    }
    let pi_h = gs_pinv * gn;
    let mut q = CMatrix::zeros(n - p, n);
    q.view_mut((0, 0), (n - p, p)).copy_from(&pi_h.adjoint());
    q.view_mut((0, p), (n - p, n - p))
        .copy_from(&scaled_identity(n - p, -1.0));
    Ok(PropagatorOperator {
        entries: q,
        kind: PropagatorKind::Standard,
        order_n: None,
        block_i: None,
        k_choices: None,
    })
}

/// `Q1 = [ G21 G11^-1 | -I_{N-P} ]`.
pub fn propagator_q1(cov: &CovarianceEstimate, p: usize) -> Result<PropagatorOperator> {
    let n = check_sources(cov, p)?;
    let g = cov.entries();
    let g11 = g.view((0, 0), (p, p)).into_owned();
    let g21 = g.view((p, 0), (n - p, p));
    let (g11_inv, rank) = pseudo_inverse_with_rank(&g11, cov.pinv_rel_tol());
    if rank < p {
        return Err(Error::IllConditioned(format!(
            "leading {p}x{p} covariance block has rank {rank}"
        )));
    }
    let mut q = CMatrix::zeros(n - p, n);
    q.view_mut((0, 0), (n - p, p)).copy_from(&(g21 * g11_inv));
    q.view_mut((0, p), (n - p, n - p))
        .copy_from(&scaled_identity(n - p, -1.0));
    Ok(PropagatorOperator {
        entries: q,
        kind: PropagatorKind::Q1,
        order_n: None,
        block_i: None,
        k_choices: None,
    })
}

/// `Q2 = [ -I_P | G12 G22^+ ]`, P x N; needs N >= 2P.
pub fn propagator_q2(cov: &CovarianceEstimate, p: usize) -> Result<PropagatorOperator> {
    let n = check_sources(cov, p)?;
    if n < 2 * p {
        return Err(Error::Applicability(format!(
            "Q2 needs N >= 2P, got N={n}, P={p}"
        )));
    }
    let g = cov.entries();
    let g12 = g.view((0, p), (p, n - p));
    let g22 = g.view((p, p), (n - p, n - p)).into_owned();
    let (g22_pinv, rank) = pseudo_inverse_with_rank(&g22, cov.pinv_rel_tol());
    if rank < p {
        return Err(Error::IllConditioned(format!(
            "trailing covariance block has rank {rank} < P={p}"
        )));
    }
    let mut q = CMatrix::zeros(p, n);
    q.view_mut((0, 0), (p, p))
        .copy_from(&scaled_identity(p, -1.0));
    q.view_mut((0, p), (p, n - p)).copy_from(&(g12 * g22_pinv));
    Ok(PropagatorOperator {
        entries: q,
        kind: PropagatorKind::Q2,
        order_n: None,
        block_i: None,
        k_choices: None,
    })
}

/// `Gamma_ik Gamma_jk^+`, mapping channel block `j` onto block `i`.
///
/// Requires `i != j` and `k` outside `{i, j}`.
pub fn transfer_operator(
    cov: &CovarianceEstimate,
    scheme: &PartitionScheme,
    i: usize,
    j: usize,
    k: usize,
) -> Result<CMatrix> {
    scheme.check_index(i)?;
    scheme.check_index(j)?;
    scheme.check_index(k)?;
    if i == j || k == i || k == j {
        return Err(Error::Domain(format!(
            "transfer operator needs distinct i, j and k outside them; got i={i}, j={j}, k={k}"
        )));
    }
    transfer_unchecked(cov, scheme, i, j, k)
}

fn transfer_unchecked(
    cov: &CovarianceEstimate,
    scheme: &PartitionScheme,
    i: usize,
    j: usize,
    k: usize,
) -> Result<CMatrix> {
    let g_ik = covariance_block(cov, scheme, i, k)?;
    let g_jk = covariance_block(cov, scheme, j, k)?;
    let (g_jk_pinv, rank) = pseudo_inverse_with_rank(&g_jk, cov.pinv_rel_tol());
    let p = scheme.sources();
    if rank < p {
        return Err(Error::IllConditioned(format!(
            "covariance block ({j},{k}) has rank {rank} < P={p}"
        )));
    }
    Ok(g_ik * g_jk_pinv)
}

/// `Psi_ni`: block-`i` extended propagator, `size_i x N`.
pub fn extended_propagator(
    cov: &CovarianceEstimate,
    scheme: &PartitionScheme,
    i: usize,
    strategy: &KStrategy,
) -> Result<PropagatorOperator> {
    scheme.check_index(i)?;
    let order = scheme.order();
    if order < 2 {
        return Err(Error::Applicability(
            "extended propagators need n >= 2; use the standard propagator".into(),
        ));
    }
    let rows = scheme.block_size(i)?;
    let mut psi = CMatrix::zeros(rows, scheme.sensors());
    let mut k_choices = Vec::with_capacity(order);
    for j in 1..=order {
        let col = scheme.block_offset(j)?;
        if j == i {
            k_choices.push(i);
            psi.view_mut((0, col), (rows, rows))
                .copy_from(&scaled_identity(rows, -((order - 1) as f64)));
            continue;
        }
        let k = strategy.choose(order, i, j)?;
        k_choices.push(k);
        let t = transfer_unchecked(cov, scheme, i, j, k)?;
        psi.view_mut((0, col), t.shape()).copy_from(&t);
    }
    Ok(PropagatorOperator {
        entries: psi,
        kind: PropagatorKind::Extended,
        order_n: Some(order),
        block_i: Some(i),
        k_choices: Some(k_choices),
    })
}

/// `Psi_n`: all `n` block operators stacked into an N x N matrix.
pub fn assembled_psi(
    cov: &CovarianceEstimate,
    scheme: &PartitionScheme,
    strategy: &KStrategy,
) -> Result<PropagatorOperator> {
    let n = scheme.sensors();
    let mut psi = CMatrix::zeros(n, n);
    for i in 1..=scheme.order() {
        let block = extended_propagator(cov, scheme, i, strategy)?;
        let row = scheme.block_offset(i)?;
        psi.view_mut((row, 0), (block.rows(), n))
            .copy_from(block.entries());
    }
    Ok(PropagatorOperator {
        entries: psi,
        kind: PropagatorKind::Extended,
        order_n: Some(scheme.order()),
        block_i: None,
        k_choices: None,
    })
}

/// Which propagators exist for a given (N, P).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Applicability {
    /// `floor(N/P) >= 2`: extended operators up to order `n_max`.
    Extended { n_max: usize },
    /// `1 < N/P < 2`: only the classical propagator.
    StandardOnly,
    /// `N <= P`: no propagator can separate the sources.
    None,
}

impl Applicability {
    pub fn of(sensors: usize, sources: usize) -> Self {
        let n_max = max_order(sensors, sources);
        if n_max >= 2 {
            Applicability::Extended { n_max }
        } else if sensors > sources {
            Applicability::StandardOnly
        } else {
            Applicability::None
        }
    }

    pub fn verdict(&self) -> String {
        match self {
            Applicability::Extended { n_max } => format!(
                "{} extended propagators available for 2 <= n <= {n_max}",
                n_max * (n_max + 1) / 2 - 1
            ),
            Applicability::StandardOnly => {
                "no extended propagator; standard propagator available".to_string()
            }
            Applicability::None => {
                "no extended propagator; no propagator available (N <= P)".to_string()
            }
        }
    }
}

/// Every `(n, i)` pair naming a valid extended propagator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorCatalog {
    sensors: usize,
    sources: usize,
    entries: Vec<(usize, usize)>,
    applicability: Applicability,
}

impl OperatorCatalog {
    pub fn sensors(&self) -> usize {
        self.sensors
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    pub fn cardinality(&self) -> usize {
        self.entries.len()
    }

    pub fn applicability(&self) -> Applicability {
        self.applicability
    }

    /// Admissible partition orders, ascending.
    pub fn orders(&self) -> std::ops::RangeInclusive<usize> {
        match self.applicability {
            Applicability::Extended { n_max } => 2..=n_max,
            #[allow(clippy::reversed_empty_ranges)]
            _ => 1..=0,
        }
    }
}

/// Enumerate all extended propagators for N sensors and P sources.
///
/// When `floor(N/P) < 2` the catalog is empty and its
/// [`applicability`](OperatorCatalog::applicability) says why.
pub fn enumerate_operators(sensors: usize, sources: usize) -> Result<OperatorCatalog> {
    if sensors == 0 || sources == 0 {
        return Err(Error::Domain(format!(
            "sensor and source counts must be positive, got N={sensors}, P={sources}"
        )));
    }
    let applicability = Applicability::of(sensors, sources);
    let mut entries = Vec::new();
    if let Applicability::Extended { n_max } = applicability {
        for n in 2..=n_max {
            entries.extend((1..=n).map(|i| (n, i)));
        }
    }
    Ok(OperatorCatalog {
        sensors,
        sources,
        entries,
        applicability,
    })
}
