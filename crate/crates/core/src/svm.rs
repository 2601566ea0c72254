//! Deterministic linear soft-margin SVM on class-coefficient vectors.
//!
//! Training minimizes `0.5 * |w|^2 + C * sum_i max(0, 1 - y_i (<w, x_i> + b))`
//! by full-batch subgradient descent with the Pegasos step schedule
//! `eta_t = 1 / (lambda * t)`, `lambda = 1 / (C * n)`. The bias is not
//! regularized. The best iterate seen (by objective value, starting from
//! `w = 0, b = 0`) is returned.
//!
//! Label convention: `+1` is the real class, `-1` the fake class, matching the
//! sign of the third embedded class coordinate. For metrics the fake class is
//! the positive class.

use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::dot;

pub type Point = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Real,
    Fake,
}

impl Label {
    /// SVM target: `+1` for real, `-1` for fake.
    pub fn sign(self) -> f64 {
        match self {
            Label::Real => 1.0,
            Label::Fake => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Real => "real",
            Label::Fake => "fake",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Label::Real),
            "fake" => Ok(Label::Fake),
            other => Err(Error::Params(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams {
    pub c_reg: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c_reg: 1.0,
            tol: 1e-6,
            max_iter: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub w: Point,
    pub b: f64,
    pub c_reg: f64,
    pub converged: bool,
}

impl SvmModel {
    /// Geometric margin width `2 / |w|` (infinite when `w = 0`).
    pub fn margin(&self) -> f64 {
        2.0 / dot(&self.w, &self.w).sqrt()
    }

    pub fn decision(&self, x: &Point) -> f64 {
        dot(&self.w, x) + self.b
    }

    /// `sign(<w, x> + b)`; an exact zero is classified as real.
    pub fn predict(&self, x: &Point) -> Label {
        if self.decision(x) >= 0.0 {
            Label::Real
        } else {
            Label::Fake
        }
    }
}

/// Primal soft-margin objective.
pub fn objective(w: &Point, b: f64, c_reg: f64, points: &[Point], labels: &[Label]) -> f64 {
    let hinge: f64 = points
        .iter()
        .zip(labels)
        .map(|(x, y)| (1.0 - y.sign() * (dot(w, x) + b)).max(0.0))
        .sum();
    0.5 * dot(w, w) + c_reg * hinge
}

pub fn svm_train(points: &[Point], labels: &[Label], params: &SvmParams) -> Result<SvmModel> {
    if points.len() != labels.len() {
        return Err(Error::InvalidTrainingSet(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    let reals = labels.iter().filter(|&&l| l == Label::Real).count();
    if reals == 0 || reals == labels.len() {
        return Err(Error::InvalidTrainingSet(
            "need at least one point of each class".into(),
        ));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidTrainingSet("non-finite coordinate".into()));
    }
    if !(params.c_reg > 0.0) || params.max_iter == 0 {
        return Err(Error::Params(format!("invalid SVM parameters {params:?}")));
    }

    let n = points.len() as f64;
    let lambda = 1.0 / (params.c_reg * n);
    let mut w = [0.0; 3];
    let mut b = 0.0;
    let mut best = (w, b, objective(&w, b, params.c_reg, points, labels));
    let mut converged = false;

    for t in 1..=params.max_iter {
        // subgradient of the lambda-scaled objective at (w, b)
        let mut gw = [lambda * w[0], lambda * w[1], lambda * w[2]];
        let mut gb = 0.0;
        for (x, y) in points.iter().zip(labels) {
            let y = y.sign();
            if y * (dot(&w, x) + b) < 1.0 {
                for (g, xi) in gw.iter_mut().zip(x) {
                    *g -= y * xi / n;
                }
                gb -= y / n;
            }
        }
        let gnorm = (dot(&gw, &gw) + gb * gb).sqrt();
        if gnorm < params.tol {
            converged = true;
            break;
        }
        let eta = 1.0 / (lambda * t as f64);
        for (wi, g) in w.iter_mut().zip(gw) {
            *wi -= eta * g;
        }
        b -= eta * gb;

        let obj = objective(&w, b, params.c_reg, points, labels);
        if obj < best.2 {
            best = (w, b, obj);
        }
    }

    // On convergence the current iterate is optimal; otherwise keep the best seen.
    let (w, b) = if converged { (w, b) } else { (best.0, best.1) };
    log::debug!("svm: w={w:?} b={b} converged={converged}");
    Ok(SvmModel {
        w,
        b,
        c_reg: params.c_reg,
        converged,
    })
}

pub fn svm_predict(model: &SvmModel, x: &Point) -> Label {
    model.predict(x)
}

/// Confusion counts with fake as the positive class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub accuracy: f64,
}

impl Metrics {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn evaluate(predicted: &[Label], actual: &[Label]) -> Result<Metrics> {
    if predicted.len() != actual.len() || predicted.is_empty() {
        return Err(Error::shape(format!(
            "cannot score {} predictions against {} labels",
            predicted.len(),
            actual.len()
        )));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p, a) {
            (Label::Fake, Label::Fake) => tp += 1,
            (Label::Real, Label::Real) => tn += 1,
            (Label::Fake, Label::Real) => fp += 1,
            (Label::Real, Label::Fake) => fn_ += 1,
        }
    }
    Ok(Metrics {
        tp,
        tn,
        fp,
        fn_,
        accuracy: (tp + tn) as f64 / predicted.len() as f64,
    })
}
