// The full detector on planted-artifact data: fit on train + validation,
// classify the test split, compare against a run with no artifact at all.
//
//     cargo run --release --example synthetic_pipeline [SEED]

use mmode::dataset_io::{synth_generate, SynthParams};
use mmode::multilinear::ComponentRange;
use mmode::pipeline::{fit, FitConfig};
use mmode::svm::{evaluate, Metrics, SvmParams};

fn accuracy(params: &SynthParams, config: &FitConfig) -> mmode::Result<Metrics> {
    let data = synth_generate(params)?;
    let model = fit(
        &data.train_real,
        &data.train_fake,
        &data.val_real,
        &data.val_fake,
        config,
    )?;
    let mut predicted = Vec::new();
    let mut actual = Vec::new();
    for set in [&data.test_real, &data.test_fake] {
        for frame in set.frames() {
            predicted.push(model.classify(frame)?.1);
            actual.push(set.label);
        }
    }
    evaluate(&predicted, &actual)
}

fn main() -> mmode::Result<()> {
    report(std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42))
}

fn report(seed: u64) -> mmode::Result<()> {
    let params = SynthParams {
        seed,
        ..SynthParams::default()
    };
    // eigenface components g+1..=g+a are where the fake class keeps its artifact
    let g = params.inner_dim;
    let config = FitConfig {
        rank_cap: params.n_per_class,
        keep: ComponentRange::new(g + 1, g + params.artifact_dim)?,
        svm: SvmParams {
            c_reg: 100.0,
            ..SvmParams::default()
        },
    };

    let with = accuracy(&params, &config)?;
    let control = accuracy(
        &SynthParams {
            artifact_gain: 0.0,
            ..params
        },
        &config,
    )?;
    println!("seed {seed}, keep {}", config.keep);
    for (name, m) in [("artifact", &with), ("control", &control)] {
        println!(
            "{name:>8}: accuracy {:.4}  (tp {} tn {} fp {} fn {})",
            m.accuracy,
            m.tp,
            m.tn,
            m.fp,
            m.fn_
        );
    }
    println!("gain over control {:+.4}", with.accuracy - control.accuracy);
    Ok(())
}
