//! Dense SVD used as an evaluation oracle.
//!
//! The matrix is oriented tall (transposing if needed), reduced to a square
//! triangular factor by Householder QR, and the triangular factor is
//! diagonalized by one-sided (Hestenes) Jacobi rotations. Convergence is
//! declared when every column pair has `|cos| ≤ 1e-14`, capped at 60 sweeps.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::matrix::{axpy, dot, norm2, DenseMatrix};

/// Largest `min(rows, cols)` the oracle accepts.
pub const SVD_SIZE_LIMIT: usize = 1024;
const JACOBI_TOLERANCE: f64 = 1e-14;
const MAX_SWEEPS: usize = 60;

/// Thin SVD `A = U diag(σ) Vᵀ` with `r = min(m, n)` singular triplets.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub vt: DenseMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> DenseMatrix {
        self.truncated(self.singular_values.len())
    }

    /// Best rank-`k` approximation `U_k Σ_k V_kᵀ`.
    pub fn truncated(&self, k: usize) -> DenseMatrix {
        let k = k.min(self.singular_values.len());
        let us = DenseMatrix::from_fn(self.u.rows(), k, |i, j| self.u.get(i, j) * self.singular_values[j]);
        us.matmul(&self.vt.leading_rows(k)).expect("factor shapes agree")
    }

    /// Number of singular values above `rel_tol · σ₁`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        numerical_rank(&self.singular_values, rel_tol)
    }
}

pub(crate) fn numerical_rank(values: &[f64], rel_tol: f64) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    values.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Full thin SVD of `a`.
pub fn svd_oracle(a: &DenseMatrix) -> Result<SvdResult> {
    let f = decompose(a, Want::Full)?;
    Ok(SvdResult { u: f.u.expect("requested"), singular_values: f.values, vt: f.vt.expect("requested") })
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(decompose(a, Want::Values)?.values)
}

/// Left singular vectors (`m × min(m, n)`) and singular values.
pub fn left_singular_factor(a: &DenseMatrix) -> Result<(DenseMatrix, Vec<f64>)> {
    let f = decompose(a, Want::Left)?;
    Ok((f.u.expect("requested"), f.values))
}

/// Frobenius distance from `a` to its best rank-`k` approximation,
/// `sqrt(Σ_{j>k} σ_j²)`.
pub fn optimal_rank_k_error(a: &DenseMatrix, k: usize) -> Result<f64> {
    let (m, n) = a.shape();
    if k > m.min(n) {
        return Err(invalid(format!("rank {k} exceeds min({m}, {n})")));
    }
    let values = singular_values(a)?;
    Ok(tail_norm(&values, k))
}

pub(crate) fn tail_norm(values: &[f64], k: usize) -> f64 {
    norm2(&values[k.min(values.len())..])
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Want {
    Values,
    Left,
    Full,
}

struct Factors {
    u: Option<DenseMatrix>,
    values: Vec<f64>,
    vt: Option<DenseMatrix>,
}

struct Reflector {
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    /// Applies `I − β v vᵀ` to `x[offset..]`.
    fn apply(&self, offset: usize, x: &mut [f64]) {
        if self.beta == 0.0 {
            return;
        }
        let tail = &mut x[offset..];
        let s = dot(&self.v, tail);
        axpy(-self.beta * s, &self.v, tail);
    }
}

fn decompose(a: &DenseMatrix, want: Want) -> Result<Factors> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(invalid("SVD of an empty matrix"));
    }
    if m.min(n) > SVD_SIZE_LIMIT {
        return Err(Error::TooLarge { dim: m.min(n), limit: SVD_SIZE_LIMIT });
    }
    let transposed = m < n;
    let (tall_rows, size) = if transposed { (n, m) } else { (m, n) };
    let mut cols: Vec<Vec<f64>> = if transposed { (0..m).map(|i| a.row(i).to_vec()).collect() } else { a.columns() };

    // Householder QR of the tall orientation.
    let mut reflectors = Vec::with_capacity(size);
    let mut r_cols: Vec<Vec<f64>> = Vec::with_capacity(size);
    for j in 0..size {
        let (head, rest) = cols.split_at_mut(j + 1);
        let x = &head[j][j..];
        let norm = norm2(x);
        let mut r = vec![0.0; size];
        r[..j].copy_from_slice(&head[j][..j]);
        if norm == 0.0 {
            reflectors.push(Reflector { v: Vec::new(), beta: 0.0 });
            r_cols.push(r);
            continue;
        }
        let diag = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= diag;
        let vtv = dot(&v, &v);
        let refl = Reflector { beta: if vtv > 0.0 { 2.0 / vtv } else { 0.0 }, v };
        rest.par_iter_mut().for_each(|c| refl.apply(j, c));
        r[j] = diag;
        r_cols.push(r);
        reflectors.push(refl);
    }
    drop(cols);

    // One-sided Jacobi on R: R V = U_R Σ.
    let track_v = want != Want::Values;
    let mut g = r_cols;
    let mut v_cols: Vec<Vec<f64>> = if track_v {
        (0..size).map(|j| (0..size).map(|i| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    } else {
        Vec::new()
    };
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        // squared column norms, refreshed each sweep and updated per rotation
        let mut sq: Vec<f64> = g.iter().map(|c| dot(c, c)).collect();
        for p in 0..size {
            for q in p + 1..size {
                let (alpha, beta) = (sq[p], sq[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&g[p], &g[q]);
                if gamma.abs() <= JACOBI_TOLERANCE * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut g, p, q, c, s);
                if track_v {
                    rotate_pair(&mut v_cols, p, q, c, s);
                }
                sq[p] = (alpha - t * gamma).max(0.0);
                sq[q] = beta + t * gamma;
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = g.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..size).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let values: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    if want == Want::Values {
        return Ok(Factors { u: None, values, vt: None });
    }

    let v_sorted: Vec<Vec<f64>> = order.iter().map(|&i| v_cols[i].clone()).collect();
    let need_q = want == Want::Full || !transposed;
    let tall_left = if need_q {
        let ur = orthonormal_directions(&g, &order, &norms, size);
        let q = form_q(&reflectors, tall_rows, size);
        Some(q.matmul(&DenseMatrix::from_columns(size, &ur)).expect("shapes agree"))
    } else {
        None
    };
    let v = DenseMatrix::from_columns(size, &v_sorted);

    let (u, vt) = if transposed {
        (Some(v), tall_left.map(|t| t.transpose()))
    } else {
        (tall_left, Some(v.transpose()))
    };
    Ok(Factors { u, values, vt: if want == Want::Full { vt } else { None } })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (x, y) = (&mut lo[p], &mut hi[0]);
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let a = *xi;
        let b = *yi;
        *xi = c * a - s * b;
        *yi = s * a + c * b;
    }
}

/// Normalized Jacobi columns in sorted order, cleaned by modified
/// Gram–Schmidt; null directions are completed from the standard basis.
fn orthonormal_directions(g: &[Vec<f64>], order: &[usize], norms: &[f64], size: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(size);
    for &idx in order {
        let mut accepted = None;
        if norms[idx] > 0.0 {
            let mut v: Vec<f64> = g[idx].iter().map(|x| x / norms[idx]).collect();
            let resid = orthogonalize(&basis, &mut v);
            if resid > 0.5 {
                v.iter_mut().for_each(|x| *x /= resid);
                accepted = Some(v);
            }
        }
        let v = accepted.unwrap_or_else(|| completion_vector(&basis, size));
        basis.push(v);
    }
    basis
}

fn orthogonalize(basis: &[Vec<f64>], v: &mut [f64]) -> f64 {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
    norm2(v)
}

fn completion_vector(basis: &[Vec<f64>], size: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for e in 0..size {
        let mut v = vec![0.0; size];
        v[e] = 1.0;
        let r = orthogonalize(basis, &mut v);
        if best.as_ref().is_none_or(|(b, _)| r > *b) {
            best = Some((r, v));
        }
    }
    let (r, mut v) = best.expect("size > 0");
    v.iter_mut().for_each(|x| *x /= r);
    v
}

/// Thin `Q` (`rows × size`) from the stored reflectors.
fn form_q(reflectors: &[Reflector], rows: usize, size: usize) -> DenseMatrix {
    let cols: Vec<Vec<f64>> = (0..size)
        .into_par_iter()
        .map(|l| {
            let mut q = vec![0.0; rows];
            q[l] = 1.0;
            for j in (0..=l).rev() {
                reflectors[j].apply(j, &mut q);
            }
            q
        })
        .collect();
    DenseMatrix::from_columns(rows, &cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::gaussian_matrix;
    use crate::rng::RngSeed;

    fn check_invariants(a: &DenseMatrix, s: &SvdResult) {
        assert!(s.u.orthonormality_defect() <= 1e-10, "U defect {}", s.u.orthonormality_defect());
        assert!(s.vt.transpose().orthonormality_defect() <= 1e-10);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let err = s.reconstruct().sub(a).unwrap().frobenius_norm();
        assert!(err <= 1e-8 * a.frobenius_norm().max(f64::MIN_POSITIVE), "reconstruction {err}");
    }

    #[test]
    fn diagonal_values() {
        let s = svd_oracle(&DenseMatrix::diag(&[1.0, 3.0])).unwrap();
        assert!((s.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((s.singular_values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_outer_product() {
        let u = [0.6, 0.0, 0.8];
        let v = [0.0, 1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
        let a = DenseMatrix::from_fn(3, 4, |i, j| u[i] * v[j]);
        let s = svd_oracle(&a).unwrap();
        assert!((s.singular_values[0] - 1.0).abs() < 1e-14);
        assert!(s.singular_values[1..].iter().all(|&x| x < 1e-14));
        check_invariants(&a, &s);
    }

    #[test]
    fn random_wide_and_tall() {
        let a = gaussian_matrix(50, 80, 0.0, 1.0, RngSeed(11)).unwrap();
        check_invariants(&a, &svd_oracle(&a).unwrap());
        let b = a.transpose();
        let sb = svd_oracle(&b).unwrap();
        check_invariants(&b, &sb);
        assert_eq!(sb.u.shape(), (80, 50));
        assert_eq!(sb.vt.shape(), (50, 50));
    }

    #[test]
    fn rank_deficient() {
        let l = gaussian_matrix(30, 3, 0.0, 1.0, RngSeed(1)).unwrap();
        let r = gaussian_matrix(3, 20, 0.0, 1.0, RngSeed(2)).unwrap();
        let a = l.matmul(&r).unwrap();
        let s = svd_oracle(&a).unwrap();
        check_invariants(&a, &s);
        assert_eq!(s.numerical_rank(1e-10), 3);
        let z = svd_oracle(&DenseMatrix::zeros(4, 3)).unwrap();
        assert!(z.singular_values.iter().all(|&x| x == 0.0));
        assert!(z.u.orthonormality_defect() <= 1e-12);
    }

    #[test]
    fn factors_agree_across_entry_points() {
        let a = gaussian_matrix(12, 7, 0.0, 1.0, RngSeed(3)).unwrap();
        let full = svd_oracle(&a).unwrap();
        let vals = singular_values(&a).unwrap();
        let (u, vals2) = left_singular_factor(&a).unwrap();
        assert_eq!(vals, vals2);
        assert_eq!(vals, full.singular_values);
        assert_eq!(u, full.u);
    }

    #[test]
    fn optimal_error_examples() {
        let d = DenseMatrix::diag(&[3.0, 2.0, 1.0]);
        assert!((optimal_rank_k_error(&d, 2).unwrap() - 1.0).abs() < 1e-14);
        let d = DenseMatrix::diag(&[5.0, 4.0, 3.0, 2.0]);
        assert!((optimal_rank_k_error(&d, 1).unwrap() - 29f64.sqrt()).abs() < 1e-13);
        let l = gaussian_matrix(20, 4, 0.0, 1.0, RngSeed(4)).unwrap();
        let r = gaussian_matrix(4, 25, 0.0, 1.0, RngSeed(5)).unwrap();
        let a = l.matmul(&r).unwrap();
        assert!(optimal_rank_k_error(&a, 4).unwrap() <= 1e-8 * a.frobenius_norm());
        assert!(optimal_rank_k_error(&a, 21).is_err());
    }

    #[test]
    fn size_limit() {
        let a = DenseMatrix::zeros(SVD_SIZE_LIMIT + 1, SVD_SIZE_LIMIT + 1);
        assert!(matches!(svd_oracle(&a), Err(Error::TooLarge { .. })));
    }
}
