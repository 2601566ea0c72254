// Class coefficients of the test frames with and without component-range
// truncation, written as x,y,z,label CSV for plotting.
//
//     cargo run --release --example truncation_scatter [OUT_DIR]

use std::fmt::Write as _;

use mmode::dataset_io::{synth_generate, SynthParams};
use mmode::multilinear::ComponentRange;
use mmode::pipeline::{fit, within_class_cosine, FitConfig};
use mmode::svm::{Label, Point, SvmParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run(std::env::args().nth(1).map(std::path::PathBuf::from))
}

fn run(out: Option<std::path::PathBuf>) -> Result<(), Box<dyn std::error::Error>> {
    let out = out.unwrap_or_else(|| std::env::temp_dir().join("mmode-scatter"));
    std::fs::create_dir_all(&out)?;

    let params = SynthParams::default();
    let data = synth_generate(&params)?;
    let f = params.n_per_class;
    let g = params.inner_dim;
    for (name, keep) in [
        ("full", ComponentRange::full(f)?),
        ("truncated", ComponentRange::new(g + 1, g + params.artifact_dim)?),
    ] {
        let config = FitConfig {
            rank_cap: f,
            keep,
            svm: SvmParams {
                c_reg: 100.0,
                ..SvmParams::default()
            },
        };
        let model = fit(&data.train_real, &data.train_fake, &data.val_real, &data.val_fake, &config)?;
        let mut points: Vec<(Point, Label)> = Vec::new();
        let mut csv = String::from("x,y,z,label\n");
        for set in [&data.test_real, &data.test_fake] {
            for frame in set.frames() {
                let r_c = model.project(frame, false)?.r_c;
                writeln!(csv, "{},{},{},{}", r_c[0], r_c[1], r_c[2], set.label)?;
                points.push((r_c, set.label));
            }
        }
        let path = out.join(format!("scatter_{name}.csv"));
        std::fs::write(&path, csv)?;
        println!(
            "{name:>9} keep {keep}: within-class cosine {:.4} -> {}",
            within_class_cosine(&points),
            path.display()
        );
    }
    Ok(())
}
