// Thin SVD, Moore-Penrose pseudo-inverse and best rank-1 approximation.
//
//     cargo run --example pseudo_inverse

use mmode::linalg::{pinv, rank1_approx, thin_svd, DEFAULT_PINV_TOL};
use mmode::Matrix;

fn penrose(a: &Matrix, p: &Matrix) -> mmode::Result<[f64; 4]> {
    let ap = a.matmul(p)?;
    let pa = p.matmul(a)?;
    Ok([
        ap.matmul(a)?.sub(a)?.max_abs(),
        pa.matmul(p)?.sub(p)?.max_abs(),
        ap.sub(&ap.transpose())?.max_abs(),
        pa.sub(&pa.transpose())?.max_abs(),
    ])
}

fn main() -> mmode::Result<()> {
    // rank 2: the third row is the sum of the first two
    let a = Matrix::from_rows(&[
        [1.0, 2.0, 0.0, 1.0],
        [0.0, 1.0, 1.0, -1.0],
        [1.0, 3.0, 1.0, 0.0],
    ])?;
    let svd = thin_svd(&a, None)?;
    println!("singular values {:?}", svd.s);
    println!("numerical rank {} of {} components", svd.rank(), svd.components());
    let err = svd.reconstruct().sub(&a)?.max_abs();
    println!("|U S V^T - A|_max = {err:.1e}");

    let p = pinv(&a, DEFAULT_PINV_TOL)?;
    println!("pinv is {} x {}", p.rows(), p.cols());
    println!("Penrose residuals {:?}", penrose(&a, &p)?);

    let r1 = rank1_approx(&a)?;
    println!("leading triple: sigma = {:.6}, v = {:?}", r1.sigma, r1.v);

    let zero = Matrix::zeros(2, 3);
    println!("pinv of a zero matrix is zero: {}", pinv(&zero, DEFAULT_PINV_TOL)?.max_abs() == 0.0);
    Ok(())
}
