//! M-mode SVD (HOSVD), component-range truncation and mode-m pseudo-inverses.
//!
//! Mode matrices are always computed from the matrixizings of the original
//! tensor, never from partially projected cores.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{pinv, thin_svd, DEFAULT_PINV_TOL};
use crate::matrix::Matrix;
use crate::tensor::DenseTensor;

/// A contiguous, 1-based, inclusive range of mode-matrix columns.
///
/// Columns are ordered by nonincreasing singular value, so `lo > 1` drops
/// leading high-energy components and `hi < cols` drops trailing ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ComponentRange {
    lo: usize,
    hi: usize,
}

impl ComponentRange {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo == 0 || lo > hi {
            return Err(Error::Range { lo, hi, cols: hi });
        }
        Ok(Self { lo, hi })
    }

    /// All `cols` columns.
    pub fn full(cols: usize) -> Result<Self> {
        Self::new(1, cols)
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    /// Number of kept columns.
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn validate(&self, cols: usize) -> Result<()> {
        if self.hi > cols {
            return Err(Error::Range {
                lo: self.lo,
                hi: self.hi,
                cols,
            });
        }
        Ok(())
    }

    /// 0-based half-open column span.
    pub fn span(&self) -> std::ops::Range<usize> {
        self.lo - 1..self.hi
    }
}

impl fmt::Display for ComponentRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl FromStr for ComponentRange {
    type Err = Error;

    /// Parses `LO:HI`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Params(format!("expected LO:HI, got {s:?}"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let lo = lo.trim().parse().map_err(|_| bad())?;
        let hi = hi.trim().parse().map_err(|_| bad())?;
        Self::new(lo, hi)
    }
}

/// Columns `keep.lo..=keep.hi` of `u`, order preserved.
pub fn truncate_columns(u: &Matrix, keep: ComponentRange) -> Result<Matrix> {
    keep.validate(u.cols())?;
    let span = keep.span();
    Ok(u.column_block(span.start, span.end))
}

/// `D ~= Z x_1 U1 x_2 U2 ... x_M UM`.
#[derive(Clone, Debug)]
pub struct MModeSvd {
    pub core: DenseTensor,
    pub mode_matrices: Vec<Matrix>,
    /// Singular values of each factored mode's matrixizing, empty for skipped modes.
    pub singular_values: Vec<Vec<f64>>,
    /// `factored[m - 1]` is false for skipped modes, whose matrix is an identity.
    pub factored: Vec<bool>,
}

/// M-mode SVD of `t`.
///
/// `ranks[m - 1]` optionally caps the number of columns kept for mode `m`
/// (an empty slice means no caps). Modes listed in `skip_modes` (1-based) are
/// not factored and carry an identity mode matrix.
pub fn m_mode_svd(
    t: &DenseTensor,
    ranks: &[Option<usize>],
    skip_modes: &[usize],
) -> Result<MModeSvd> {
    let order = t.order();
    if !ranks.is_empty() && ranks.len() != order {
        return Err(Error::shape(format!(
            "{} rank caps given for a tensor of order {order}",
            ranks.len()
        )));
    }
    if let Some(&m) = skip_modes.iter().find(|&&m| m == 0 || m > order) {
        return Err(Error::InvalidMode { mode: m, order });
    }

    let mut mode_matrices = Vec::with_capacity(order);
    let mut singular_values = Vec::with_capacity(order);
    let mut factored = Vec::with_capacity(order);
    let mut core = t.clone();

    for mode in 1..=order {
        let extent = t.shape()[mode - 1];
        let cap = ranks.get(mode - 1).copied().flatten();
        if let Some(c) = cap {
            if c == 0 || c > extent {
                return Err(Error::shape(format!(
                    "rank cap {c} for mode {mode} is outside 1..={extent}"
                )));
            }
        }
        if skip_modes.contains(&mode) {
            mode_matrices.push(Matrix::identity(extent));
            singular_values.push(Vec::new());
            factored.push(false);
            continue;
        }
        let svd = thin_svd(&t.matrixize(mode)?, cap)?;
        log::debug!(
            "mode {mode}: kept {} of {extent} components",
            svd.s.len()
        );
        core = core.mode_product_t(&svd.u, mode)?;
        mode_matrices.push(svd.u);
        singular_values.push(svd.s);
        factored.push(true);
    }

    Ok(MModeSvd {
        core,
        mode_matrices,
        singular_values,
        factored,
    })
}

impl MModeSvd {
    /// `core x_1 U1 ... x_M UM`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        reconstruct(&self.core, &self.mode_matrices)
    }

    /// Keeps only columns `keep` of mode `mode`'s matrix, slicing the core to match.
    pub fn truncated(&self, mode: usize, keep: ComponentRange) -> Result<MModeSvd> {
        let order = self.mode_matrices.len();
        if mode == 0 || mode > order {
            return Err(Error::InvalidMode { mode, order });
        }
        let u = &self.mode_matrices[mode - 1];
        let kept = truncate_columns(u, keep)?;
        let span = keep.span();
        let mut selector = Matrix::zeros(keep.len(), u.cols());
        for (row, col) in span.clone().enumerate() {
            selector[(row, col)] = 1.0;
        }
        let mut out = self.clone();
        out.core = self.core.mode_product(&selector, mode)?;
        out.mode_matrices[mode - 1] = kept;
        if !self.singular_values[mode - 1].is_empty() {
            out.singular_values[mode - 1] = self.singular_values[mode - 1][span].to_vec();
        }
        Ok(out)
    }
}

/// Multiplies `core` by every mode matrix in turn.
pub fn reconstruct(core: &DenseTensor, mode_matrices: &[Matrix]) -> Result<DenseTensor> {
    if mode_matrices.len() != core.order() {
        return Err(Error::shape(format!(
            "{} mode matrices for a core of order {}",
            mode_matrices.len(),
            core.order()
        )));
    }
    let mut out = core.clone();
    for (m, u) in mode_matrices.iter().enumerate() {
        out = out.mode_product(u, m + 1)?;
    }
    Ok(out)
}

/// Mode-`mode` pseudo-inverse: the pseudo-inverse of the mode-`mode` matrixizing.
pub fn mode_pinv(t: &DenseTensor, mode: usize) -> Result<Matrix> {
    pinv(&t.matrixize(mode)?, DEFAULT_PINV_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::relative_error;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> DenseTensor {
        let len = shape.iter().product();
        let data = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        DenseTensor::new(shape.to_vec(), data).unwrap()
    }

    fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let data = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        thin_svd(&Matrix::from_vec(n, n, data).unwrap(), None)
            .unwrap()
            .u
    }

    fn orthonormality_error(q: &Matrix) -> f64 {
        let g = q.t_matmul(q).unwrap();
        g.sub(&Matrix::identity(q.cols())).unwrap().max_abs()
    }

    #[test]
    fn superdiagonal_core_is_recovered() {
        let mut diag = DenseTensor::zeros(vec![3, 3, 3]).unwrap();
        for (i, v) in [3.0, 2.0, 1.0].into_iter().enumerate() {
            diag.set(&[i, i, i], v);
        }
        let svd = m_mode_svd(&diag, &[], &[]).unwrap();
        for (i, v) in [3.0, 2.0, 1.0].into_iter().enumerate() {
            assert!((svd.core.get(&[i, i, i]).abs() - v).abs() <= 1e-12);
        }
        for u in &svd.mode_matrices {
            // signed permutation: one unit entry per column
            for j in 0..3 {
                let c = u.column(j);
                assert_eq!(c.iter().filter(|x| x.abs() > 1e-12).count(), 1);
            }
        }

        // the same magnitudes survive a random orthogonal change of basis
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mixed = reconstruct(
            &diag,
            &[
                random_orthogonal(&mut rng, 3),
                random_orthogonal(&mut rng, 3),
                random_orthogonal(&mut rng, 3),
            ],
        )
        .unwrap();
        let svd = m_mode_svd(&mixed, &[], &[]).unwrap();
        for (i, v) in [3.0, 2.0, 1.0].into_iter().enumerate() {
            assert!((svd.core.get(&[i, i, i]).abs() - v).abs() <= 1e-10);
        }
        let off: f64 = svd.core.frobenius_norm().powi(2) - 14.0;
        assert!(off.abs() <= 1e-10);
    }

    #[test]
    fn full_rank_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let t = random_tensor(&mut rng, &[6, 5, 4]);
        let svd = m_mode_svd(&t, &[], &[]).unwrap();
        let back = svd.reconstruct().unwrap();
        assert!(relative_error(back.data(), t.data()) <= 1e-10);
        for u in &svd.mode_matrices {
            assert!(orthonormality_error(u) <= 1e-10);
        }
        assert!((svd.core.frobenius_norm() - t.frobenius_norm()).abs() <= 1e-10 * t.frobenius_norm());
    }

    #[test]
    fn skipped_mode_gets_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = random_tensor(&mut rng, &[4, 3, 2]);
        let svd = m_mode_svd(&t, &[], &[1]).unwrap();
        assert_eq!(svd.mode_matrices[0], Matrix::identity(4));
        assert_eq!(svd.factored, vec![false, true, true]);
        let back = svd.reconstruct().unwrap();
        assert!(relative_error(back.data(), t.data()) <= 1e-10);
    }

    #[test]
    fn identity_mode_matrices_return_core() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let core = random_tensor(&mut rng, &[2, 3, 2]);
        let ids = [Matrix::identity(2), Matrix::identity(3), Matrix::identity(2)];
        assert_eq!(reconstruct(&core, &ids).unwrap(), core);
    }

    #[test]
    fn truncated_residual_matches_discarded_core_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = random_tensor(&mut rng, &[6, 5, 4]);
        let full = m_mode_svd(&t, &[], &[]).unwrap();
        let trunc = m_mode_svd(&t, &[Some(3), Some(2), None], &[]).unwrap();
        let resid = t
            .sub(&trunc.reconstruct().unwrap())
            .unwrap()
            .frobenius_norm();
        let kept = trunc.core.frobenius_norm().powi(2);
        let discarded = (full.core.frobenius_norm().powi(2) - kept).sqrt();
        assert!((resid - discarded).abs() <= 1e-8);
    }

    #[test]
    fn rank_cap_beyond_extent_is_shape_error() {
        let t = DenseTensor::zeros(vec![2, 3]).unwrap();
        assert!(matches!(
            m_mode_svd(&t, &[Some(3), None], &[]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            m_mode_svd(&t, &[], &[3]),
            Err(Error::InvalidMode { .. })
        ));
    }

    #[test]
    fn mode_pinv_of_identity_unfolding() {
        let t = DenseTensor::from_matrix(&Matrix::identity(4));
        assert_eq!(mode_pinv(&t, 1).unwrap(), Matrix::identity(4));
    }

    #[test]
    fn mode_pinv_gives_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = random_tensor(&mut rng, &[3, 4, 2]);
        let p = mode_pinv(&t, 1).unwrap();
        let unfolded = t.matrixize(1).unwrap();
        assert_eq!(p, pinv(&unfolded, DEFAULT_PINV_TOL).unwrap());
        let proj = p.matmul(&unfolded).unwrap();
        let sq = proj.matmul(&proj).unwrap();
        assert!(sq.sub(&proj).unwrap().max_abs() <= 1e-9);
    }

    #[test]
    fn truncate_columns_ranges() {
        let u = Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let full = ComponentRange::full(3).unwrap();
        assert_eq!(truncate_columns(&u, full).unwrap(), u);
        let single = ComponentRange::new(2, 2).unwrap();
        assert_eq!(truncate_columns(&u, single).unwrap().as_slice(), &[2.0, 5.0]);
        let bad = ComponentRange::new(2, 4).unwrap();
        assert!(matches!(truncate_columns(&u, bad), Err(Error::Range { .. })));
        assert!(ComponentRange::new(0, 2).is_err());
        assert!(ComponentRange::new(3, 2).is_err());
    }

    #[test]
    fn full_scale_truncation_width() {
        let u = Matrix::zeros(2, 5040);
        let keep = ComponentRange::new(2980, 5000).unwrap();
        let kept = truncate_columns(&u, keep).unwrap();
        assert_eq!(kept.cols(), 2021);
        assert_eq!(keep.len(), 2021);
        // 2979 leading and 40 trailing components are dropped
        assert_eq!(keep.lo() - 1, 2979);
        assert_eq!(5040 - keep.hi(), 40);
    }

    #[test]
    fn range_parses() {
        let r: ComponentRange = "2980:5000".parse().unwrap();
        assert_eq!((r.lo(), r.hi()), (2980, 5000));
        assert_eq!(r.to_string(), "2980:5000");
        assert!("12".parse::<ComponentRange>().is_err());
        assert!("a:3".parse::<ComponentRange>().is_err());
    }

    proptest! {
        #[test]
        fn widening_range_never_increases_error(
            seed in any::<u64>(), lo in 1usize..6, width in 0usize..5, extra in 1usize..4
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(&mut rng, &[4, 8, 3]);
            let svd = m_mode_svd(&t, &[], &[1]).unwrap();
            let hi = (lo + width).min(8);
            let narrow = ComponentRange::new(lo, hi).unwrap();
            let wide = ComponentRange::new(lo.saturating_sub(extra).max(1), (hi + extra).min(8)).unwrap();
            let err = |r| {
                let rec = svd.truncated(2, r).unwrap().reconstruct().unwrap();
                t.sub(&rec).unwrap().frobenius_norm()
            };
            prop_assert!(err(wide) <= err(narrow) + 1e-10);
        }

        #[test]
        fn full_rank_exact_and_energy_preserving(seed in any::<u64>(), a in 1usize..5, b in 1usize..5, c in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_tensor(&mut rng, &[a, b, c]);
            let svd = m_mode_svd(&t, &[], &[]).unwrap();
            let back = svd.reconstruct().unwrap();
            prop_assert!(relative_error(back.data(), t.data()) <= 1e-10);
            let e = (svd.core.frobenius_norm() - t.frobenius_norm()).abs();
            prop_assert!(e <= 1e-10 * t.frobenius_norm().max(1.0));
            for u in &svd.mode_matrices {
                prop_assert!(orthonormality_error(u) <= 1e-10);
            }
        }
    }
}
