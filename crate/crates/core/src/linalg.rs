//! Dense complex matrix helpers shared by the estimators.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Thin singular value decomposition `M = U diag(sigma) V^H`, singular
/// values descending, `min(rows, cols)` triplets.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

/// Thin SVD from the Hermitian eigendecomposition of `[[0, M], [M^H, 0]]`,
/// whose eigenpairs are `(+-sigma, [u; +-v] / sqrt 2)`.
///
/// nalgebra's complex bidiagonal SVD returns wrong factors for some
/// rank-deficient square Hermitian inputs; its Hermitian eigensolver does
/// not. Triplets whose singular values vanish are not unique and their
/// vectors carry no meaning.
pub fn thin_svd(m: &CMatrix) -> ThinSvd {
    let (rows, cols) = m.shape();
    let q = rows.min(cols);
    let size = rows + cols;
    let mut aug = CMatrix::zeros(size, size);
    aug.view_mut((0, rows), (rows, cols)).copy_from(m);
    aug.view_mut((rows, 0), (cols, rows))
        .copy_from(&m.adjoint());
    let eig = aug.symmetric_eigen();
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale = C64::new(std::f64::consts::SQRT_2, 0.0);
    let mut u = CMatrix::zeros(rows, q);
    let mut v = CMatrix::zeros(cols, q);
    let mut singular_values = Vec::with_capacity(q);
    for (t, &idx) in order.iter().take(q).enumerate() {
        let w = eig.eigenvectors.column(idx);
        u.set_column(t, &(w.rows(0, rows) * scale));
        v.set_column(t, &(w.rows(rows, cols) * scale));
        singular_values.push(eig.eigenvalues[idx].max(0.0));
    }
    ThinSvd {
        u,
        singular_values,
        v,
    }
}

/// Moore-Penrose pseudo-inverse through the singular value decomposition.
///
/// Singular values at or below `rel_tol * sigma_max` are treated as zero, so
/// a zero matrix maps to a zero matrix of transposed shape.
pub fn pseudo_inverse(m: &CMatrix, rel_tol: f64) -> CMatrix {
    pseudo_inverse_with_rank(m, rel_tol).0
}

/// [`pseudo_inverse`] together with the numerical rank it retained.
pub fn pseudo_inverse_with_rank(m: &CMatrix, rel_tol: f64) -> (CMatrix, usize) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (CMatrix::zeros(cols, rows), 0);
    }
    let svd = thin_svd(m);
    let sigma_max = svd.singular_values[0];
    if sigma_max <= 0.0 || !sigma_max.is_finite() {
        return (CMatrix::zeros(cols, rows), 0);
    }
    let cutoff = rel_tol * sigma_max;
    let mut out = CMatrix::zeros(cols, rows);
    let mut rank = 0;
    for (s, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma <= cutoff {
            break;
        }
        rank += 1;
        out += svd.v.column(s) * (svd.u.column(s).adjoint() * C64::new(1.0 / sigma, 0.0));
    }
    (out, rank)
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = thin_svd(m).singular_values;
    let sigma_max = sv[0];
    if sigma_max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * sigma_max).count()
}

/// Complex identity scaled by a real factor.
pub(crate) fn scaled_identity(n: usize, scale: f64) -> CMatrix {
    CMatrix::from_diagonal_element(n, n, C64::new(scale, 0.0))
}

/// `(M + M^H) / 2`.
pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    let adj = m.adjoint();
    (m + adj) * C64::new(0.5, 0.0)
}
