// Linear soft-margin SVM on two separable point clouds in 3-D.
//
//     cargo run --example svm_clouds

use mmode::svm::{evaluate, svm_predict, svm_train, Label, Point, SvmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mmode::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut points: Vec<Point> = Vec::new();
    let mut labels = Vec::new();
    for (center, label) in [([1.0, 1.0, 1.0], Label::Real), ([-1.0, -1.0, -1.0], Label::Fake)] {
        for _ in 0..50 {
            points.push(std::array::from_fn(|j| center[j] + rng.random_range(-0.4..0.4)));
            labels.push(label);
        }
    }
    let model = svm_train(&points, &labels, &SvmParams::default())?;
    println!("w = {:?}, b = {:.4}, margin width {:.4}", model.w, model.b, model.margin());
    let predicted: Vec<Label> = points.iter().map(|p| svm_predict(&model, p)).collect();
    let m = evaluate(&predicted, &labels)?;
    println!("training accuracy {} (tp {} tn {} fp {} fn {})", m.accuracy, m.tp, m.tn, m.fp, m.fn_);
    Ok(())
}
