//! End-to-end training and classification.
//!
//! The steps, in order:
//!
//! 1. Center every frame by the mean of the **real** training frames.
//! 2. Per class, take the thin SVD of the `P x N` matrix of frame columns and
//!    form the eigenface basis `B = U * diag(S)`.
//! 3. Stack the two bases into a `P x F x 2` data tensor (pixels, eigenfaces,
//!    class) and factor modes 2 and 3 with an M-mode SVD. Mode 1 is never
//!    factored.
//! 4. Embed the `2 x 2` class matrix into `R^3` (third coordinate `+1` for
//!    real, `-1` for fake, rows normalized).
//! 5. Form the extended core `T = D x_2 U_f'^T x_3 pinv(U_c)`, where `U_f'`
//!    keeps only a range of eigenface-mode components.
//! 6. Project each centered frame: `pinv(T_[1]) * d` reshaped to `K x 3`,
//!    whose leading singular pair gives the eigenface and class coefficients.
//! 7. Fit a linear SVM on the class coefficients of the validation frames.

use crate::error::{Error, Result};
use crate::linalg::{argmax_abs, pinv, rank1_approx, thin_svd, DEFAULT_PINV_TOL};
use crate::matrix::{dot, norm, Matrix};
use crate::multilinear::{m_mode_svd, truncate_columns, ComponentRange};
use crate::svm::{svm_train, Label, Point, SvmModel, SvmParams};
use crate::tensor::DenseTensor;

/// Guard for the relative residual of an all-zero observation.
const RESIDUAL_EPS: f64 = 1e-300;

/// Frames of one class, one vectorized frame per row.
#[derive(Clone, Debug)]
pub struct FrameMatrix {
    pub frames: Matrix,
    pub label: Label,
    centered: bool,
}

impl FrameMatrix {
    pub fn new(frames: Matrix, label: Label) -> Self {
        Self {
            frames,
            label,
            centered: false,
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], label: Label) -> Result<Self> {
        Ok(Self::new(Matrix::from_rows(rows)?, label))
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Number of frames `N`.
    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    /// Frame length `P`.
    pub fn pixels(&self) -> usize {
        self.frames.cols()
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        self.frames.row(i)
    }

    pub fn frames(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.len()).map(|i| self.frames.row(i))
    }
}

/// Arithmetic mean of the frames.
pub fn compute_mean(real_train: &FrameMatrix) -> Result<Vec<f64>> {
    if real_train.is_empty() {
        return Err(Error::InvalidTrainingSet(
            "cannot take the mean of zero frames".into(),
        ));
    }
    let mut mean = vec![0.0; real_train.pixels()];
    for row in real_train.frames() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    let n = real_train.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Subtracts `mean_real` from every frame. Frames may only be centered once.
pub fn center(frames: &FrameMatrix, mean_real: &[f64]) -> Result<FrameMatrix> {
    if frames.centered {
        return Err(Error::Contract(format!(
            "{} frames are already centered",
            frames.label
        )));
    }
    if mean_real.len() != frames.pixels() {
        return Err(Error::shape(format!(
            "mean has length {}, frames have length {}",
            mean_real.len(),
            frames.pixels()
        )));
    }
    let mut out = frames.frames.clone();
    for i in 0..out.rows() {
        for (x, &m) in out.row_mut(i).iter_mut().zip(mean_real) {
            *x -= m;
        }
    }
    Ok(FrameMatrix {
        frames: out,
        label: frames.label,
        centered: true,
    })
}

/// Eigenface basis of one class.
#[derive(Clone, Debug)]
pub struct ClassBasis {
    /// `P x r` eigenfaces.
    pub u: Matrix,
    pub s: Vec<f64>,
    /// `P x r`, `U * diag(S)`.
    pub b: Matrix,
    /// `N x r` normalized coefficients.
    pub v: Matrix,
}

impl ClassBasis {
    pub fn components(&self) -> usize {
        self.s.len()
    }

    /// Appends zero singular components up to `f` columns in `B`.
    ///
    /// Only `B` (and `S`) are padded; `U` and `V` keep their orthonormal columns.
    pub fn padded(&self, f: usize) -> ClassBasis {
        let r = self.components();
        if f <= r {
            return self.clone();
        }
        let p = self.b.rows();
        let mut b = Matrix::zeros(p, f);
        for i in 0..p {
            b.row_mut(i)[..r].copy_from_slice(self.b.row(i));
        }
        let mut s = self.s.clone();
        s.resize(f, 0.0);
        ClassBasis {
            u: self.u.clone(),
            s,
            b,
            v: self.v.clone(),
        }
    }
}

/// Thin SVD of the `P x N` matrix whose columns are the (centered) frames.
pub fn compute_class_basis(class_frames: &FrameMatrix, rank_cap: usize) -> Result<ClassBasis> {
    if !class_frames.centered {
        return Err(Error::Contract(format!(
            "{} frames must be centered before computing eigenfaces",
            class_frames.label
        )));
    }
    if class_frames.is_empty() {
        return Err(Error::InvalidTrainingSet(format!(
            "no {} training frames",
            class_frames.label
        )));
    }
    if rank_cap == 0 {
        return Err(Error::Params("rank cap must be positive".into()));
    }
    let svd = thin_svd(&class_frames.frames.transpose(), Some(rank_cap))?;
    let b = svd.u.scale_columns(&svd.s);
    Ok(ClassBasis {
        u: svd.u,
        s: svd.s,
        b,
        v: svd.v,
    })
}

/// `P x F x 2` tensor with `B_real` and `B_fake` as its two class slices.
pub fn assemble_data_tensor(b_real: &ClassBasis, b_fake: &ClassBasis) -> Result<DenseTensor> {
    if b_real.b.shape() != b_fake.b.shape() {
        return Err(Error::shape(format!(
            "class bases differ in shape: real {:?}, fake {:?}",
            b_real.b.shape(),
            b_fake.b.shape()
        )));
    }
    let (p, f) = b_real.b.shape();
    let mut data = b_real.b.transpose().into_vec();
    data.extend(b_fake.b.transpose().into_vec());
    DenseTensor::new(vec![p, f, 2], data)
}

/// Mode-2/mode-3 factorization of the data tensor.
#[derive(Clone, Debug)]
pub struct TrainingDecomposition {
    /// `D x_2 U_f^T x_3 U_c^T`.
    pub core: DenseTensor,
    /// Eigenface-mode matrix, columns by nonincreasing singular value.
    pub u_f: Matrix,
    /// `2 x 2` class-mode matrix, row 1 = real, row 2 = fake.
    pub u_c: Matrix,
    pub sv_f: Vec<f64>,
    pub sv_c: Vec<f64>,
}

impl TrainingDecomposition {
    /// `core x_2 U_f x_3 U_c`.
    pub fn reconstruct(&self) -> Result<DenseTensor> {
        self.core.mode_product(&self.u_f, 2)?.mode_product(&self.u_c, 3)
    }
}

pub fn decompose_training(d: &DenseTensor) -> Result<TrainingDecomposition> {
    if d.order() != 3 || d.shape()[2] != 2 {
        return Err(Error::shape(format!(
            "data tensor must be P x F x 2, got {:?}",
            d.shape()
        )));
    }
    let mut svd = m_mode_svd(d, &[], &[1])?;
    let u_c = svd.mode_matrices.pop().expect("three modes");
    let u_f = svd.mode_matrices.pop().expect("three modes");
    if u_c.shape() != (2, 2) {
        return Err(Error::Degenerate(format!(
            "class mode matrix is {:?}, expected 2 x 2",
            u_c.shape()
        )));
    }
    let sv_c = svd.singular_values.pop().unwrap_or_default();
    let sv_f = svd.singular_values.pop().unwrap_or_default();
    Ok(TrainingDecomposition {
        core: svd.core,
        u_f,
        u_c,
        sv_f,
        sv_c,
    })
}

/// Lifts the class rows into `R^3` with third coordinate `+1` (real) / `-1`
/// (fake) and normalizes each row.
pub fn embed_classes(u_c: &Matrix) -> Result<Matrix> {
    if u_c.shape() != (2, 2) {
        return Err(Error::shape(format!(
            "class matrix must be 2 x 2, got {:?}",
            u_c.shape()
        )));
    }
    let mut out = Matrix::zeros(2, 3);
    for (i, third) in [1.0, -1.0].into_iter().enumerate() {
        let row = [u_c[(i, 0)], u_c[(i, 1)], third];
        let n = norm(&row);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Degenerate(format!("class row {} has zero length", i + 1)));
        }
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = v / n;
        }
    }
    Ok(out)
}

/// `D x_2 U_f'^T x_3 pinv(U_c_emb)` with `U_f'` restricted to `keep`; shape `P x K x 3`.
pub fn extended_core(
    d: &DenseTensor,
    u_f: &Matrix,
    keep: ComponentRange,
    u_c_emb: &Matrix,
) -> Result<DenseTensor> {
    let u_kept = truncate_columns(u_f, keep)?;
    if u_c_emb.shape() != (2, 3) {
        return Err(Error::shape(format!(
            "embedded class matrix must be 2 x 3, got {:?}",
            u_c_emb.shape()
        )));
    }
    let class_pinv = pinv(u_c_emb, DEFAULT_PINV_TOL)?;
    d.mode_product_t(&u_kept, 2)?.mode_product(&class_pinv, 3)
}

/// Coefficients recovered from one observation.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult {
    /// Eigenface-mode coefficients (length `K`), carrying the scale.
    pub r_f: Vec<f64>,
    /// Unit class-mode coefficients.
    pub r_c: Point,
    /// `|d - T x_2 r_f^T x_3 r_c^T| / |d|`.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    pub rank_cap: usize,
    pub keep: ComponentRange,
    pub svm: SvmParams,
}

impl FitConfig {
    /// Component budget and kept range used for the full-size face data:
    /// 720 training videos x 7 frames, keeping components 2980..=5000.
    pub fn video_defaults() -> Self {
        Self {
            rank_cap: 5040,
            keep: ComponentRange::new(2980, 5000).expect("valid range"),
            svm: SvmParams::default(),
        }
    }
}

/// Everything needed to classify a frame.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub mean_real: Vec<f64>,
    /// Extended core, `P x K x 3`.
    pub core: DenseTensor,
    /// `2 x 3` embedded class rows (real, fake), unit length.
    pub u_class: Matrix,
    pub keep: ComponentRange,
    pub svm: SvmModel,
    /// Eigenface components `F` before truncation.
    pub components: usize,
    core_unfolded1: Matrix,
    core_pinv1: Matrix,
}

impl TrainedModel {
    /// Assembles a model and computes the cached mode-1 pseudo-inverse of the core.
    pub fn from_parts(
        mean_real: Vec<f64>,
        core: DenseTensor,
        u_class: Matrix,
        keep: ComponentRange,
        svm: SvmModel,
        components: usize,
    ) -> Result<Self> {
        if core.order() != 3 || core.shape()[2] != 3 {
            return Err(Error::shape(format!(
                "extended core must be P x K x 3, got {:?}",
                core.shape()
            )));
        }
        let (p, k) = (core.shape()[0], core.shape()[1]);
        if mean_real.len() != p {
            return Err(Error::shape(format!(
                "mean has length {}, core has {p} pixels",
                mean_real.len()
            )));
        }
        if keep.len() != k {
            return Err(Error::shape(format!(
                "kept range {keep} has {} components, core has {k}",
                keep.len()
            )));
        }
        keep.validate(components)?;
        if u_class.shape() != (2, 3) {
            return Err(Error::shape(format!(
                "class matrix must be 2 x 3, got {:?}",
                u_class.shape()
            )));
        }
        let core_unfolded1 = core.matrixize(1)?;
        let core_pinv1 = pinv(&core_unfolded1, DEFAULT_PINV_TOL)?;
        Ok(Self {
            mean_real,
            core,
            u_class,
            keep,
            svm,
            components,
            core_unfolded1,
            core_pinv1,
        })
    }

    /// `(P, F, K)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.core.shape()[0], self.components, self.core.shape()[1])
    }

    pub fn pixels(&self) -> usize {
        self.core.shape()[0]
    }

    /// Cached `pinv(T_[1])`, `(K * 3) x P`.
    pub fn core_pinv1(&self) -> &Matrix {
        &self.core_pinv1
    }

    pub fn real_row(&self) -> Point {
        [self.u_class[(0, 0)], self.u_class[(0, 1)], self.u_class[(0, 2)]]
    }

    pub fn fake_row(&self) -> Point {
        [self.u_class[(1, 0)], self.u_class[(1, 1)], self.u_class[(1, 2)]]
    }

    /// `T x_2 r_f^T x_3 r_c^T`, a length-`P` observation.
    pub fn synthesize(&self, r_f: &[f64], r_c: &Point) -> Result<Vec<f64>> {
        let k = self.core.shape()[1];
        if r_f.len() != k {
            return Err(Error::shape(format!(
                "eigenface coefficients have length {}, core has {k}",
                r_f.len()
            )));
        }
        let mut coef = Vec::with_capacity(3 * k);
        for &c in r_c {
            coef.extend(r_f.iter().map(|f| f * c));
        }
        self.core_unfolded1.matvec(&coef)
    }

    /// Multilinear projection of one observation.
    pub fn project(&self, d: &[f64], assume_centered: bool) -> Result<ProjectionResult> {
        let p = self.pixels();
        if d.len() != p {
            return Err(Error::shape(format!(
                "frame has length {}, model expects {p}",
                d.len()
            )));
        }
        let centered: Vec<f64>;
        let d = if assume_centered {
            d
        } else {
            centered = d.iter().zip(&self.mean_real).map(|(x, m)| x - m).collect();
            &centered
        };

        let k = self.core.shape()[1];
        let m = self.core_pinv1.matvec(d)?;
        // matrixize(core, 1) columns run i2 + K * i3, so m is the K x 3 matrix in column order
        let mut coef = Matrix::zeros(k, 3);
        for c in 0..3 {
            for f in 0..k {
                coef[(f, c)] = m[f + k * c];
            }
        }
        let rank1 = rank1_approx(&coef).map_err(|e| match e {
            Error::Degenerate(_) => {
                Error::Degenerate("observation projects to a zero coefficient matrix".into())
            }
            other => other,
        })?;

        let mut r_c: Point = [rank1.v[0], rank1.v[1], rank1.v[2]];
        let mut r_f: Vec<f64> = rank1.u.iter().map(|u| u * rank1.sigma).collect();
        let reference: Point = std::array::from_fn(|j| self.u_class[(0, j)] + self.u_class[(1, j)]);
        let side = dot(&r_c, &reference);
        let flip = if side != 0.0 {
            side < 0.0
        } else {
            r_c[argmax_abs(&r_c)] < 0.0
        };
        if flip {
            r_c.iter_mut().for_each(|x| *x = -*x);
            r_f.iter_mut().for_each(|x| *x = -*x);
        }

        let approx = self.synthesize(&r_f, &r_c)?;
        let diff: f64 = d
            .iter()
            .zip(&approx)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let residual = diff / norm(d).max(RESIDUAL_EPS);
        Ok(ProjectionResult { r_f, r_c, residual })
    }

    /// Projects and classifies one uncentered frame.
    pub fn classify(&self, d: &[f64]) -> Result<(ProjectionResult, Label)> {
        let proj = self.project(d, false)?;
        let label = self.svm.predict(&proj.r_c);
        Ok((proj, label))
    }
}

/// Free-function form of [`TrainedModel::project`].
pub fn project_frame(
    model: &TrainedModel,
    d: &[f64],
    assume_centered: bool,
) -> Result<ProjectionResult> {
    model.project(d, assume_centered)
}

/// Intermediate products of [`fit`], kept for inspection and plotting.
#[derive(Clone, Debug)]
pub struct FitReport {
    pub decomposition: TrainingDecomposition,
    /// Projections of the validation frames, real first, then fake.
    pub validation: Vec<(ProjectionResult, Label)>,
}

fn check_role(frames: &FrameMatrix, expected: Label, role: &str) -> Result<()> {
    if frames.label != expected {
        return Err(Error::Contract(format!(
            "{role} frames are labelled {}, expected {expected}",
            frames.label
        )));
    }
    if frames.centered {
        return Err(Error::Contract(format!(
            "{role} frames were already centered; fit centers them itself"
        )));
    }
    Ok(())
}

/// Trains a model from uncentered frame sets.
pub fn fit(
    real_train: &FrameMatrix,
    fake_train: &FrameMatrix,
    val_real: &FrameMatrix,
    val_fake: &FrameMatrix,
    config: &FitConfig,
) -> Result<TrainedModel> {
    fit_with_report(real_train, fake_train, val_real, val_fake, config).map(|(m, _)| m)
}

pub fn fit_with_report(
    real_train: &FrameMatrix,
    fake_train: &FrameMatrix,
    val_real: &FrameMatrix,
    val_fake: &FrameMatrix,
    config: &FitConfig,
) -> Result<(TrainedModel, FitReport)> {
    check_role(real_train, Label::Real, "real training")?;
    check_role(fake_train, Label::Fake, "fake training")?;
    check_role(val_real, Label::Real, "real validation")?;
    check_role(val_fake, Label::Fake, "fake validation")?;
    let p = real_train.pixels();
    for (fm, role) in [
        (fake_train, "fake training"),
        (val_real, "real validation"),
        (val_fake, "fake validation"),
    ] {
        if fm.pixels() != p && !fm.is_empty() {
            return Err(Error::shape(format!(
                "{role} frames have length {}, real training frames have {p}",
                fm.pixels()
            )));
        }
    }
    if fake_train.is_empty() {
        return Err(Error::InvalidTrainingSet("no fake training frames".into()));
    }
    if val_real.is_empty() || val_fake.is_empty() {
        return Err(Error::InvalidTrainingSet(
            "validation needs frames of both classes".into(),
        ));
    }

    let mean_real = compute_mean(real_train)?;
    let real_c = center(real_train, &mean_real)?;
    let fake_c = center(fake_train, &mean_real)?;
    let val_real_c = center(val_real, &mean_real)?;
    let val_fake_c = center(val_fake, &mean_real)?;

    let b_real = compute_class_basis(&real_c, config.rank_cap)?;
    let b_fake = compute_class_basis(&fake_c, config.rank_cap)?;
    let f = b_real.components().max(b_fake.components());
    config.keep.validate(f)?;
    let data = assemble_data_tensor(&b_real.padded(f), &b_fake.padded(f))?;
    log::info!("data tensor {:?}", data.shape());

    let decomposition = decompose_training(&data)?;
    if decomposition.sv_c.get(1).copied().unwrap_or(0.0)
        <= 1e-10 * decomposition.sv_c.first().copied().unwrap_or(0.0)
    {
        log::warn!("real and fake eigenface slices are (nearly) identical");
    }
    let u_class = embed_classes(&decomposition.u_c)?;
    let core = extended_core(&data, &decomposition.u_f, config.keep, &u_class)?;
    log::info!("extended core {:?}", core.shape());

    let placeholder = SvmModel {
        w: [0.0; 3],
        b: 0.0,
        c_reg: config.svm.c_reg,
        converged: false,
    };
    let mut model = TrainedModel::from_parts(mean_real, core, u_class, config.keep, placeholder, f)?;

    let mut validation = Vec::with_capacity(val_real.len() + val_fake.len());
    for fm in [&val_real_c, &val_fake_c] {
        for d in fm.frames() {
            validation.push((model.project(d, true)?, fm.label));
        }
    }
    let points: Vec<Point> = validation.iter().map(|(p, _)| p.r_c).collect();
    let labels: Vec<Label> = validation.iter().map(|(_, l)| *l).collect();
    model.svm = svm_train(&points, &labels, &config.svm)?;

    Ok((
        model,
        FitReport {
            decomposition,
            validation,
        },
    ))
}

/// Mean pairwise cosine similarity within each class, averaged over the two classes.
pub fn within_class_cosine(points: &[(Point, Label)]) -> f64 {
    let mut total = 0.0;
    let mut classes = 0;
    for label in [Label::Real, Label::Fake] {
        let members: Vec<&Point> = points
            .iter()
            .filter(|(_, l)| *l == label)
            .map(|(p, _)| p)
            .collect();
        if members.len() < 2 {
            continue;
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let (a, b) = (members[i], members[j]);
                sum += dot(a, b) / (norm(a) * norm(b));
                pairs += 1;
            }
        }
        total += sum / pairs as f64;
        classes += 1;
    }
    if classes == 0 {
        0.0
    } else {
        total / classes as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset_io::{synth_generate, SynthParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rows(v: &[&[f64]], label: Label) -> FrameMatrix {
        FrameMatrix::from_rows(v, label).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn mean_and_centering() {
        let real = rows(&[&[0.0, 0.0], &[2.0, 4.0]], Label::Real);
        let mean = compute_mean(&real).unwrap();
        assert_eq!(mean, vec![1.0, 2.0]);
        let c = center(&real, &mean).unwrap();
        assert!(c.is_centered());
        assert_eq!(c.frames.as_slice(), &[-1.0, -2.0, 1.0, 2.0]);
        assert!(matches!(center(&c, &mean), Err(Error::Contract(_))));
        assert!(matches!(center(&real, &[1.0]), Err(Error::Shape(_))));
        assert!(compute_mean(&FrameMatrix::new(Matrix::zeros(0, 2), Label::Real)).is_err());
    }

    #[test]
    fn fake_mean_is_offset_by_real_mean() {
        let real = rows(&[&[1.0, 1.0], &[3.0, 5.0]], Label::Real);
        let fake = rows(&[&[10.0, 0.0], &[12.0, 2.0], &[14.0, 4.0]], Label::Fake);
        let mr = compute_mean(&real).unwrap();
        let mf = compute_mean(&fake).unwrap();
        let c = center(&fake, &mr).unwrap();
        let mut got = [0.0; 2];
        for f in c.frames() {
            got[0] += f[0] / 3.0;
            got[1] += f[1] / 3.0;
        }
        for j in 0..2 {
            assert!((got[j] - (mf[j] - mr[j])).abs() < 1e-12);
        }
    }

    #[test]
    fn planted_subspace_gives_three_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let basis = random_matrix(&mut rng, 10, 3);
        let coef = random_matrix(&mut rng, 3, 20);
        let frames = basis.matmul(&coef).unwrap().transpose();
        let fm = FrameMatrix {
            frames,
            label: Label::Real,
            centered: true,
        };
        let cb = compute_class_basis(&fm, 10).unwrap();
        let big = cb.s.iter().filter(|&&s| s > 1e-10 * cb.s[0]).count();
        assert_eq!(big, 3);
        let uncentered = FrameMatrix::new(fm.frames.clone(), Label::Real);
        assert!(matches!(
            compute_class_basis(&uncentered, 10),
            Err(Error::Contract(_))
        ));
    }

    fn basis_from(b: Matrix) -> ClassBasis {
        let r = b.cols();
        ClassBasis {
            u: b.clone(),
            s: vec![1.0; r],
            b,
            v: Matrix::identity(r),
        }
    }

    #[test]
    fn data_tensor_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let br = basis_from(random_matrix(&mut rng, 4, 3));
        let bf = basis_from(random_matrix(&mut rng, 4, 3));
        let d = assemble_data_tensor(&br, &bf).unwrap();
        assert_eq!(d.shape(), &[4, 3, 2]);
        for p in 0..4 {
            for f in 0..3 {
                assert_eq!(d.get(&[p, f, 0]), br.b[(p, f)]);
                assert_eq!(d.get(&[p, f, 1]), bf.b[(p, f)]);
            }
        }
        let m3 = d.matrixize(3).unwrap();
        let vec_b = |b: &Matrix| -> Vec<f64> { (0..b.cols()).flat_map(|j| b.column(j)).collect() };
        assert_eq!(m3.row(0), vec_b(&br.b).as_slice());
        assert_eq!(m3.row(1), vec_b(&bf.b).as_slice());
        let narrow = basis_from(random_matrix(&mut rng, 4, 2));
        assert!(assemble_data_tensor(&br, &narrow).is_err());
    }

    #[test]
    fn decomposition_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let br = basis_from(random_matrix(&mut rng, 6, 4));
        let bf = basis_from(random_matrix(&mut rng, 6, 4));
        let d = assemble_data_tensor(&br, &bf).unwrap();
        let dec = decompose_training(&d).unwrap();
        let err = dec.reconstruct().unwrap().sub(&d).unwrap().frobenius_norm() / d.frobenius_norm();
        assert!(err <= 1e-10, "{err}");
        assert_eq!(dec.u_f.shape(), (4, 4));
        assert_eq!(dec.u_c.shape(), (2, 2));

        let same = assemble_data_tensor(&br, &br).unwrap();
        let dec = decompose_training(&same).unwrap();
        assert!(dec.sv_c[1] <= 1e-10 * dec.sv_c[0]);
    }

    #[test]
    fn identity_class_embedding() {
        let e = embed_classes(&Matrix::identity(2)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [[h, 0.0, h], [0.0, h, -h]];
        for i in 0..2 {
            for j in 0..3 {
                assert!((e[(i, j)] - want[i][j]).abs() < 1e-15);
            }
        }
        assert!(e[(0, 2)] * e[(1, 2)] < 0.0);
        assert!(embed_classes(&Matrix::identity(3)).is_err());
    }

    #[test]
    fn extended_core_lives_in_class_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let br = basis_from(random_matrix(&mut rng, 12, 5));
        let bf = basis_from(random_matrix(&mut rng, 12, 5));
        let d = assemble_data_tensor(&br, &bf).unwrap();
        let dec = decompose_training(&d).unwrap();
        let emb = embed_classes(&dec.u_c).unwrap();
        let keep = ComponentRange::new(2, 4).unwrap();
        let t = extended_core(&d, &dec.u_f, keep, &emb).unwrap();
        assert_eq!(t.shape(), &[12, 3, 3]);

        // projector onto span(B_real, B_fake)
        let mut cols: Vec<Vec<f64>> = (0..5).map(|j| br.b.column(j)).collect();
        cols.extend((0..5).map(|j| bf.b.column(j)));
        let span = Matrix::from_columns(&cols).unwrap();
        let proj = span.matmul(&pinv(&span, DEFAULT_PINV_TOL).unwrap()).unwrap();
        let unfolded = t.matrixize(1).unwrap();
        let inside = proj.matmul(&unfolded).unwrap();
        assert!(inside.sub(&unfolded).unwrap().max_abs() <= 1e-10 * unfolded.max_abs());

        // synthesizing with an embedded class row recovers that class slice of D x_2 U_f'^T
        let reduced = d.mode_product_t(&truncate_columns(&dec.u_f, keep).unwrap(), 2).unwrap();
        let back = t.mode_product(&emb, 3).unwrap();
        assert!(back.sub(&reduced).unwrap().frobenius_norm() <= 1e-10 * reduced.frobenius_norm());
    }

    fn random_model(rng: &mut ChaCha8Rng, p: usize, k: usize) -> TrainedModel {
        let core = DenseTensor::new(
            vec![p, k, 3],
            (0..p * k * 3).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let u_class = embed_classes(&Matrix::identity(2)).unwrap();
        let svm = SvmModel {
            w: [1.0, 0.0, 0.0],
            b: 0.0,
            c_reg: 1.0,
            converged: true,
        };
        TrainedModel::from_parts(
            vec![0.0; p],
            core,
            u_class,
            ComponentRange::new(1, k).unwrap(),
            svm,
            k,
        )
        .unwrap()
    }

    #[test]
    fn planted_projection_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let model = random_model(&mut rng, 30, 4);
        for _ in 0..10 {
            let f: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut c: Point = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let n = norm(&c);
            c.iter_mut().for_each(|x| *x /= n);
            let d = model.synthesize(&f, &c).unwrap();
            let r = project_frame(&model, &d, true).unwrap();
            assert!(dot(&r.r_c, &c).abs() >= 1.0 - 1e-8);
            assert!(r.residual <= 1e-8, "{}", r.residual);
            let reference: Point =
                std::array::from_fn(|j| model.u_class[(0, j)] + model.u_class[(1, j)]);
            assert!(dot(&r.r_c, &reference) >= 0.0);

            let alpha = 3.7;
            let scaled: Vec<f64> = d.iter().map(|x| alpha * x).collect();
            let rs = project_frame(&model, &scaled, true).unwrap();
            for j in 0..3 {
                assert!((rs.r_c[j] - r.r_c[j]).abs() <= 1e-10);
            }
            for (a, b) in rs.r_f.iter().zip(&r.r_f) {
                assert!((a - alpha * b).abs() <= 1e-10 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn zero_observation_is_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let model = random_model(&mut rng, 8, 2);
        assert!(matches!(
            model.project(&[0.0; 8], true),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(model.project(&[0.0; 7], true), Err(Error::Shape(_))));
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let data = synth_generate(&SynthParams {
            pixels: 48,
            n_per_class: 6,
            ..SynthParams::default()
        })
        .unwrap();
        let config = FitConfig {
            rank_cap: 6,
            keep: ComponentRange::new(1, 6).unwrap(),
            svm: SvmParams::default(),
        };
        let empty = FrameMatrix::new(Matrix::zeros(0, 48), Label::Fake);
        assert!(matches!(
            fit(&data.train_real, &empty, &data.val_real, &data.val_fake, &config),
            Err(Error::InvalidTrainingSet(_))
        ));
        assert!(matches!(
            fit(&data.train_fake, &data.train_real, &data.val_real, &data.val_fake, &config),
            Err(Error::Contract(_))
        ));
        let mean = compute_mean(&data.train_real).unwrap();
        let centered = center(&data.train_real, &mean).unwrap();
        assert!(matches!(
            fit(&centered, &data.train_fake, &data.val_real, &data.val_fake, &config),
            Err(Error::Contract(_))
        ));
        let wide = FitConfig {
            keep: ComponentRange::new(2, 7).unwrap(),
            ..config
        };
        assert!(matches!(
            fit(&data.train_real, &data.train_fake, &data.val_real, &data.val_fake, &wide),
            Err(Error::Range { .. })
        ));
        let model = fit(&data.train_real, &data.train_fake, &data.val_real, &data.val_fake, &config)
            .unwrap();
        assert_eq!(model.dims(), (48, 6, 6));
    }

    #[test]
    fn cosine_of_identical_points() {
        let pts = vec![
            ([1.0, 0.0, 0.0], Label::Real),
            ([2.0, 0.0, 0.0], Label::Real),
            ([0.0, 1.0, 0.0], Label::Fake),
            ([0.0, -1.0, 0.0], Label::Fake),
        ];
        assert!((within_class_cosine(&pts) - 0.0).abs() < 1e-15);
        assert!((within_class_cosine(&pts[..2]) - 1.0).abs() < 1e-15);
    }
}
