//! Thin SVD, Moore-Penrose pseudo-inverse and the leading singular triple.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration. Tall inputs are first
//! reduced with a Householder QR so the rotations act on an `n x n` triangle.
//! Every loop runs in a fixed order, so identical inputs give bit-identical
//! factors.
//!
//! Sign convention: the largest-magnitude entry of every left singular vector
//! is positive (ties go to the lowest index); the right vector is flipped with it.

use crate::error::{Error, Result};
use crate::matrix::{dot, norm, Matrix};

/// Relative singular-value cutoff used by [`pinv`] when callers have no better choice.
pub const DEFAULT_PINV_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

/// `A = U * diag(S) * V^T` with `r` columns in `U` and `V`.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    /// `m x r`, orthonormal columns.
    pub u: Matrix,
    /// `r` singular values, nonincreasing and nonnegative.
    pub s: Vec<f64>,
    /// `n x r`, orthonormal columns.
    pub v: Matrix,
}

impl ThinSvd {
    /// Number of singular triples returned.
    pub fn components(&self) -> usize {
        self.s.len()
    }

    /// Number of nonzero singular values.
    pub fn rank(&self) -> usize {
        self.s.iter().filter(|&&s| s > 0.0).count()
    }

    /// `U * diag(S) * V^T`.
    pub fn reconstruct(&self) -> Matrix {
        self.u
            .scale_columns(&self.s)
            .matmul(&self.v.transpose())
            .expect("thin SVD factors conform")
    }
}

/// Leading singular triple of a matrix.
#[derive(Clone, Debug)]
pub struct Rank1 {
    /// Unit left singular vector.
    pub u: Vec<f64>,
    pub sigma: f64,
    /// Unit right singular vector, largest-magnitude entry positive.
    pub v: Vec<f64>,
}

/// Index of the entry with the largest magnitude; ties resolve to the lowest index.
pub(crate) fn argmax_abs(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

/// Column-major copy of a matrix.
fn columns_of(a: &Matrix) -> Vec<Vec<f64>> {
    (0..a.cols()).map(|j| a.column(j)).collect()
}

/// Thin Householder QR of a tall matrix (`rows >= cols`).
///
/// Returns `Q` as `cols` orthonormal columns of length `rows` and `R` as a
/// `cols x cols` upper triangle, both column-major.
fn householder_qr(a: &Matrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut cols = columns_of(a);
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);

    for k in 0..n {
        let x = &cols[k][k..];
        let alpha = norm(x);
        if alpha == 0.0 {
            reflectors.push(None);
            continue;
        }
        let mut v = x.to_vec();
        let beta = if v[0] >= 0.0 { -alpha } else { alpha };
        v[0] -= beta;
        let vnorm = norm(&v);
        if vnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        for e in v.iter_mut() {
            *e /= vnorm;
        }
        for col in cols.iter_mut().skip(k) {
            let tail = &mut col[k..];
            let proj = 2.0 * dot(&v, tail);
            for (t, &vi) in tail.iter_mut().zip(&v) {
                *t -= proj * vi;
            }
        }
        reflectors.push(Some(v));
    }

    let r: Vec<Vec<f64>> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mut col = vec![0.0; n];
            col[..=j].copy_from_slice(&c[..=j]);
            col
        })
        .collect();

    let mut q: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    for (k, v) in reflectors.iter().enumerate().rev() {
        let Some(v) = v else { continue };
        for col in q.iter_mut() {
            let tail = &mut col[k..];
            let proj = 2.0 * dot(v, tail);
            if proj != 0.0 {
                for (t, &vi) in tail.iter_mut().zip(v) {
                    *t -= proj * vi;
                }
            }
        }
    }
    (q, r)
}

/// One-sided Jacobi on column-major `w`; returns the accumulated right rotations.
///
/// Columns whose squared norm falls to `negligible` or below are left alone;
/// the caller treats them as zero singular values.
fn one_sided_jacobi(w: &mut [Vec<f64>], negligible: f64) -> Result<Vec<Vec<f64>>> {
    let n = w.len();
    let m = w.first().map_or(0, Vec::len);
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    if n < 2 {
        return Ok(v);
    }
    let tol = f64::EPSILON * (m.max(n) as f64);
    let mut norms: Vec<f64> = w.iter().map(|c| dot(c, c)).collect();
    let mut residual = f64::INFINITY;

    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        residual = 0.0_f64;
        for (nj, c) in norms.iter_mut().zip(w.iter()) {
            *nj = dot(c, c);
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                let off = gamma.abs() / (alpha.sqrt() * beta.sqrt());
                residual = residual.max(off);
                if off <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = w.split_at_mut(q);
                for (a, b) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
                let (lo, hi) = v.split_at_mut(q);
                for (a, b) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let (x, y) = (*a, *b);
                    *a = c * x - s * y;
                    *b = s * x + c * y;
                }
                norms[p] = (alpha - t * gamma).max(0.0);
                norms[q] = beta + t * gamma;
            }
        }
        if !rotated {
            return Ok(v);
        }
    }
    Err(Error::Convergence {
        sweeps: MAX_SWEEPS,
        residual,
    })
}

/// Extends `cols` (orthonormal) with the first standard basis vector that has a
/// substantial component outside their span.
fn complete_basis(cols: &[Vec<f64>], len: usize) -> Vec<f64> {
    for k in 0..len {
        let mut e = vec![0.0; len];
        e[k] = 1.0;
        // Two Gram-Schmidt passes.
        for _ in 0..2 {
            for c in cols {
                let proj = dot(c, &e);
                for (x, &ci) in e.iter_mut().zip(c) {
                    *x -= proj * ci;
                }
            }
        }
        let nrm = norm(&e);
        if nrm > 0.5 {
            for x in e.iter_mut() {
                *x /= nrm;
            }
            return e;
        }
    }
    unreachable!("cannot complete a basis that already spans the space")
}

/// SVD of a matrix with `rows >= cols`, all `cols` components kept.
fn svd_tall(a: &Matrix) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>)> {
    let (m, n) = a.shape();
    let (q, mut w) = if m > n {
        let (q, r) = householder_qr(a);
        (Some(q), r)
    } else {
        (None, columns_of(a))
    };
    // columns this small are rounding debris; rotating them only burns sweeps
    let zero_level = f64::EPSILON * m.max(n) as f64 * a.frobenius_norm();
    let v = one_sided_jacobi(&mut w, zero_level * zero_level)?;

    let sigma: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal values keep their column order
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut u_small: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v_sorted = Vec::with_capacity(n);
    let dim = w.first().map_or(0, Vec::len);
    for &j in &order {
        let sj = sigma[j];
        if sj > zero_level && sj > f64::MIN_POSITIVE {
            u_small.push(w[j].iter().map(|x| x / sj).collect());
            s.push(sj);
        } else {
            let e = complete_basis(&u_small, dim);
            u_small.push(e);
            s.push(0.0);
        }
        v_sorted.push(v[j].clone());
    }

    let u = match q {
        None => u_small,
        Some(q) => u_small
            .iter()
            .map(|uc| {
                let mut col = vec![0.0; m];
                for (qk, &coef) in q.iter().zip(uc) {
                    if coef != 0.0 {
                        for (x, &qv) in col.iter_mut().zip(qk) {
                            *x += coef * qv;
                        }
                    }
                }
                col
            })
            .collect(),
    };
    Ok((u, s, v_sorted))
}

/// Thin SVD keeping `min(rows, cols, rank_cap)` components.
pub fn thin_svd(a: &Matrix, rank_cap: Option<usize>) -> Result<ThinSvd> {
    if a.is_empty() {
        return Err(Error::shape("SVD of an empty matrix"));
    }
    if rank_cap == Some(0) {
        return Err(Error::shape("rank cap must be positive"));
    }
    let (m, n) = a.shape();
    let (mut u_cols, s, mut v_cols) = if m >= n {
        svd_tall(a)?
    } else {
        let (v, s, u) = svd_tall(&a.transpose())?;
        (u, s, v)
    };
    let r = rank_cap.map_or(m.min(n), |c| c.min(m.min(n)));

    for (uc, vc) in u_cols.iter_mut().zip(v_cols.iter_mut()) {
        if uc[argmax_abs(uc)] < 0.0 {
            uc.iter_mut().for_each(|x| *x = -*x);
            vc.iter_mut().for_each(|x| *x = -*x);
        }
    }
    u_cols.truncate(r);
    v_cols.truncate(r);
    let mut s = s;
    s.truncate(r);

    Ok(ThinSvd {
        u: Matrix::from_columns(&u_cols)?,
        s,
        v: Matrix::from_columns(&v_cols)?,
    })
}

/// Moore-Penrose pseudo-inverse, zeroing singular values at or below `tol * sigma_max`.
pub fn pinv(a: &Matrix, tol: f64) -> Result<Matrix> {
    let svd = thin_svd(a, None)?;
    let (m, n) = a.shape();
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let cutoff = tol * smax;
    let inv: Vec<f64> = svd
        .s
        .iter()
        .map(|&s| if s > cutoff && s > 0.0 { 1.0 / s } else { 0.0 })
        .collect();
    let kept = inv.iter().take_while(|&&x| x != 0.0).count();
    if kept == 0 {
        return Ok(Matrix::zeros(n, m));
    }
    let v = svd.v.column_block(0, kept).scale_columns(&inv[..kept]);
    let u = svd.u.column_block(0, kept);
    v.matmul(&u.transpose())
}

/// Leading singular triple, computed from the Jacobi SVD.
pub fn rank1_approx(a: &Matrix) -> Result<Rank1> {
    if a.is_empty() {
        return Err(Error::shape("rank-1 approximation of an empty matrix"));
    }
    if a.max_abs() == 0.0 {
        return Err(Error::Degenerate(
            "rank-1 approximation of a zero matrix".into(),
        ));
    }
    let svd = thin_svd(a, Some(1))?;
    let mut u = svd.u.column(0);
    let mut v = svd.v.column(0);
    if v[argmax_abs(&v)] < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
        v.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(Rank1 {
        u,
        sigma: svd.s[0],
        v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::relative_error;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    fn orthonormality_error(q: &Matrix) -> f64 {
        let g = q.t_matmul(q).unwrap();
        g.sub(&Matrix::identity(q.cols())).unwrap().max_abs()
    }

    fn check_svd(a: &Matrix, svd: &ThinSvd, tol: f64) {
        assert!(orthonormality_error(&svd.u) <= 1e-10);
        assert!(orthonormality_error(&svd.v) <= 1e-10);
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(svd.s.iter().all(|&s| s >= 0.0));
        let err = relative_error(svd.reconstruct().as_slice(), a.as_slice());
        assert!(err <= tol, "reconstruction error {err:e}");
    }

    fn penrose_errors(a: &Matrix, p: &Matrix) -> [f64; 4] {
        let rel = |x: &Matrix, y: &Matrix| {
            let d = x.sub(y).unwrap().frobenius_norm();
            d / y.frobenius_norm().max(1.0)
        };
        let ap = a.matmul(p).unwrap();
        let pa = p.matmul(a).unwrap();
        [
            rel(&ap.matmul(a).unwrap(), a),
            rel(&pa.matmul(p).unwrap(), p),
            rel(&ap.transpose(), &ap),
            rel(&pa.transpose(), &pa),
        ]
    }

    #[test]
    fn diagonal_input() {
        let a = Matrix::from_diag(&[3.0, 2.0, 1.0]);
        let svd = thin_svd(&a, None).unwrap();
        assert_eq!(svd.s, vec![3.0, 2.0, 1.0]);
        assert_eq!(svd.u, Matrix::identity(3));
        assert_eq!(svd.v, Matrix::identity(3));
    }

    #[test]
    fn random_tall_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = gaussian(&mut rng, 8, 5);
        let svd = thin_svd(&a, None).unwrap();
        assert_eq!(svd.components(), 5);
        check_svd(&a, &svd, 1e-10);
    }

    #[test]
    fn random_wide_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = gaussian(&mut rng, 4, 9);
        let svd = thin_svd(&a, None).unwrap();
        assert_eq!((svd.u.shape(), svd.v.shape()), ((4, 4), (9, 4)));
        check_svd(&a, &svd, 1e-10);
    }

    #[test]
    fn planted_rank_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let q1 = thin_svd(&gaussian(&mut rng, 7, 2), None).unwrap().u;
        let q2 = thin_svd(&gaussian(&mut rng, 5, 2), None).unwrap().u;
        let a = q1
            .scale_columns(&[5.0, 2.0])
            .matmul(&q2.transpose())
            .unwrap();
        let svd = thin_svd(&a, None).unwrap();
        assert!((svd.s[0] - 5.0).abs() <= 1e-10);
        assert!((svd.s[1] - 2.0).abs() <= 1e-10);
        assert!(svd.s[2..].iter().all(|&s| s <= 1e-10));
        check_svd(&a, &svd, 1e-10);
    }

    #[test]
    fn rank_cap_truncates_to_best_approximation() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = gaussian(&mut rng, 9, 6);
        let full = thin_svd(&a, None).unwrap();
        let capped = thin_svd(&a, Some(2)).unwrap();
        assert_eq!(capped.components(), 2);
        let resid = a.sub(&capped.reconstruct()).unwrap().frobenius_norm();
        let tail: f64 = full.s[2..].iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!((resid - tail).abs() <= 1e-10 * full.s[0]);
        assert_eq!(thin_svd(&a, Some(100)).unwrap().components(), 6);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        assert!(matches!(
            thin_svd(&Matrix::zeros(0, 3), None),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn zero_matrix_svd_has_orthonormal_factors() {
        let a = Matrix::zeros(5, 3);
        let svd = thin_svd(&a, None).unwrap();
        assert_eq!(svd.s, vec![0.0; 3]);
        check_svd(&a, &svd, 0.0);
    }

    #[test]
    fn sign_convention_on_left_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let a = gaussian(&mut rng, 6, 4);
        let svd = thin_svd(&a, None).unwrap();
        for j in 0..svd.components() {
            let u = svd.u.column(j);
            assert!(u[argmax_abs(&u)] > 0.0);
        }
        let neg = thin_svd(&a.scale(-1.0), None).unwrap();
        assert_eq!(neg.u, svd.u);
    }

    #[test]
    fn svd_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let a = gaussian(&mut rng, 30, 12);
        let x = thin_svd(&a, None).unwrap();
        let y = thin_svd(&a, None).unwrap();
        assert_eq!(x.u, y.u);
        assert_eq!(x.s, y.s);
        assert_eq!(x.v, y.v);
    }

    #[test]
    fn pinv_identity_and_zero() {
        assert_eq!(
            pinv(&Matrix::identity(4), DEFAULT_PINV_TOL).unwrap(),
            Matrix::identity(4)
        );
        let z = pinv(&Matrix::zeros(2, 3), DEFAULT_PINV_TOL).unwrap();
        assert_eq!(z, Matrix::zeros(3, 2));
    }

    #[test]
    fn pinv_of_orthonormal_rows_is_transpose() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let q = thin_svd(&gaussian(&mut rng, 3, 2), None)
            .unwrap()
            .u
            .transpose();
        let p = pinv(&q, DEFAULT_PINV_TOL).unwrap();
        assert!(p.sub(&q.transpose()).unwrap().max_abs() <= 1e-12);
        let back = q.matmul(&p).unwrap().matmul(&q).unwrap();
        assert!(back.sub(&q).unwrap().frobenius_norm() <= 1e-10);
    }

    #[test]
    fn pinv_penrose_on_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let a = gaussian(&mut rng, 7, 3)
            .matmul(&gaussian(&mut rng, 3, 6))
            .unwrap();
        let p = pinv(&a, DEFAULT_PINV_TOL).unwrap();
        assert_eq!(p.shape(), (6, 7));
        for e in penrose_errors(&a, &p) {
            assert!(e <= 1e-9, "{e:e}");
        }
    }

    #[test]
    fn rank1_planted_outer_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let x: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
        let mut y: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
        let ny = norm(&y);
        y.iter_mut().for_each(|v| *v /= ny);
        let mut a = Matrix::zeros(6, 4);
        for i in 0..6 {
            for j in 0..4 {
                a[(i, j)] = 2.0 * x[i] * y[j];
            }
        }
        let r = rank1_approx(&a).unwrap();
        assert!((r.sigma - 2.0 * norm(&x)).abs() <= 1e-10 * r.sigma);
        assert!(dot(&r.v, &y).abs() >= 1.0 - 1e-10);
        assert!(r.v[argmax_abs(&r.v)] > 0.0);
        assert!((norm(&r.v) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn rank1_diagonal() {
        let r = rank1_approx(&Matrix::from_diag(&[5.0, 1.0])).unwrap();
        assert_eq!(r.sigma, 5.0);
        assert_eq!(r.v, vec![1.0, 0.0]);
    }

    #[test]
    fn rank1_zero_is_degenerate() {
        assert!(matches!(
            rank1_approx(&Matrix::zeros(3, 3)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn rank1_beats_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let a = gaussian(&mut rng, 20, 3);
        let r = rank1_approx(&a).unwrap();
        let resid = |u: &[f64], s: f64, v: &[f64]| {
            let mut acc = 0.0;
            for i in 0..20 {
                for j in 0..3 {
                    let d = a[(i, j)] - s * u[i] * v[j];
                    acc += d * d;
                }
            }
            acc.sqrt()
        };
        let best = resid(&r.u, r.sigma, &r.v);
        for _ in 0..1000 {
            let u: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
            let v: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let (nu, nv) = (norm(&u), norm(&v));
            let u: Vec<f64> = u.iter().map(|x| x / nu).collect();
            let v: Vec<f64> = v.iter().map(|x| x / nv).collect();
            // the best scale for fixed directions is u^T A v
            let s: f64 = (0..20)
                .map(|i| u[i] * dot(a.row(i), &v))
                .sum();
            assert!(best <= resid(&u, s, &v) + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn svd_invariants(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = gaussian(&mut rng, rows, cols);
            let svd = thin_svd(&a, None).unwrap();
            prop_assert_eq!(svd.components(), rows.min(cols));
            prop_assert!(orthonormality_error(&svd.u) <= 1e-10);
            prop_assert!(orthonormality_error(&svd.v) <= 1e-10);
            prop_assert!(relative_error(svd.reconstruct().as_slice(), a.as_slice()) <= 1e-10);
        }

        #[test]
        fn penrose_conditions(rows in 1usize..9, cols in 1usize..9, rank in 0usize..9, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = if rank == 0 {
                Matrix::zeros(rows, cols)
            } else {
                gaussian(&mut rng, rows, rank).matmul(&gaussian(&mut rng, rank, cols)).unwrap()
            };
            let p = pinv(&a, DEFAULT_PINV_TOL).unwrap();
            for e in penrose_errors(&a, &p) {
                prop_assert!(e <= 1e-9);
            }
        }
    }
}
