// M-mode SVD of a random tensor: exact reconstruction, energy bookkeeping and
// component-range truncation of one mode.
//
//     cargo run --example hosvd

use mmode::multilinear::{m_mode_svd, ComponentRange};
use mmode::DenseTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> mmode::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shape = vec![8, 7, 6];
    let n: usize = shape.iter().product();
    let t = DenseTensor::new(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())?;

    let svd = m_mode_svd(&t, &[], &[])?;
    let err = svd.reconstruct()?.sub(&t)?.frobenius_norm() / t.frobenius_norm();
    println!("relative reconstruction error {err:.2e}");
    for (m, s) in svd.singular_values.iter().enumerate() {
        let energy: f64 = s.iter().map(|x| x * x).sum();
        println!(
            "mode {}: {} singular values, sum of squares {:.6} (|T|^2 = {:.6})",
            m + 1,
            s.len(),
            energy,
            t.frobenius_norm().powi(2)
        );
    }

    // leave mode 1 unfactored, as the training tensor does for its pixel mode
    let partial = m_mode_svd(&t, &[], &[1])?;
    println!("mode 1 factored: {}", partial.factored[0]);

    // keep only the middle band of mode-2 components
    let keep = ComponentRange::new(2, 5)?;
    let band = svd.truncated(2, keep)?;
    let approx = band.reconstruct()?;
    let kept: f64 = svd.singular_values[1][keep.span()].iter().map(|x| x * x).sum();
    println!(
        "mode-2 band {keep}: core {:?}, |approx|^2 = {:.6}, kept energy = {:.6}",
        band.core.shape(),
        approx.frobenius_norm().powi(2),
        kept
    );
    Ok(())
}
