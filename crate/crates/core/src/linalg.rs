//! Orthonormalization and projection.

use crate::error::{Error, Result};
use crate::matrix::{axpy, dot, norm2, DenseMatrix};

/// Columns whose residual after orthogonalization falls to this fraction of
/// their original norm are treated as linearly dependent and dropped.
pub const GS_DROP_TOLERANCE: f64 = 1e-12;

/// Deviation from orthonormality accepted by [`project_onto_range`].
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;

/// Modified Gram–Schmidt with one re-orthogonalization pass.
///
/// Returns an `m × k'` matrix with orthonormal columns spanning the range of
/// `y`; `k' < k` signals rank deficiency.
pub fn gram_schmidt(y: &DenseMatrix) -> DenseMatrix {
    let m = y.rows();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(y.cols());
    for mut v in y.columns() {
        let initial = norm2(&v);
        if initial == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                axpy(-c, q, &mut v);
            }
        }
        let residual = norm2(&v);
        if residual <= GS_DROP_TOLERANCE * initial {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= residual);
        basis.push(v);
    }
    DenseMatrix::from_columns(m, &basis)
}

/// `W (Wᵀ A)` for a `w` with orthonormal columns.
pub fn project_onto_range(w: &DenseMatrix, a: &DenseMatrix) -> Result<DenseMatrix> {
    if w.rows() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} rows, matrix has {}",
            w.rows(),
            a.rows()
        )));
    }
    let defect = w.orthonormality_defect();
    if defect > ORTHONORMAL_TOLERANCE {
        return Err(Error::NotOrthonormal(defect));
    }
    Ok(project_unchecked(w, a))
}

pub(crate) fn project_unchecked(w: &DenseMatrix, a: &DenseMatrix) -> DenseMatrix {
    let coeffs = w.t_matmul(a).expect("row counts checked");
    w.matmul(&coeffs).expect("inner dimensions agree")
}
