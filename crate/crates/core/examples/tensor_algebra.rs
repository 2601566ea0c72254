// Matrixizing, mode products and folding back.
//
//     cargo run --example tensor_algebra

use mmode::{DenseTensor, Matrix};

fn main() -> mmode::Result<()> {
    // t[i, j, k] = 100 i + 10 j + k, stored with the first index fastest
    let t = DenseTensor::from_fn(vec![2, 3, 4], |ix| {
        (100 * ix[0] + 10 * ix[1] + ix[2]) as f64
    })?;
    println!("shape {:?}, first entries {:?}", t.shape(), &t.data()[..6]);

    for mode in 1..=3 {
        let m = t.matrixize(mode)?;
        println!("mode-{mode} matrixizing is {} x {}", m.rows(), m.cols());
        println!("  row 0: {:?}", m.row(0));
        let back = DenseTensor::tensorize(&m, t.shape(), mode)?;
        assert_eq!(back, t);
    }

    // a mode product is a left multiplication of the matching matrixizing
    let a = Matrix::from_rows(&[[1.0, 0.0, -1.0], [0.5, 0.5, 0.5]])?;
    let p = t.mode_product(&a, 2)?;
    let lhs = p.matrixize(2)?;
    let rhs = a.matmul(&t.matrixize(2)?)?;
    println!(
        "t x_2 A has shape {:?}; |unfold(t x_2 A) - A unfold(t)| = {:e}",
        p.shape(),
        lhs.sub(&rhs)?.max_abs()
    );

    // products along different modes commute
    let b = Matrix::from_rows(&[[2.0, -1.0]])?;
    let ab = t.mode_product(&a, 2)?.mode_product(&b, 1)?;
    let ba = t.mode_product(&b, 1)?.mode_product(&a, 2)?;
    println!("commutation gap {:e}", ab.sub(&ba)?.frobenius_norm());
    Ok(())
}
