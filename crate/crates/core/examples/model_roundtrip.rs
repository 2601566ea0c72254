// Train a small model, save it as an MLDF file, reload it and check that the
// file is canonical and the classifications are unchanged.
//
//     cargo run --example model_roundtrip [OUT_DIR]

use mmode::dataset_io::{load_model, model_to_string, save_model, synth_generate, SynthParams};
use mmode::multilinear::ComponentRange;
use mmode::pipeline::{fit, FitConfig};
use mmode::svm::SvmParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run(std::env::args().nth(1).map(std::path::PathBuf::from))
}

fn run(out: Option<std::path::PathBuf>) -> Result<(), Box<dyn std::error::Error>> {
    let out = out.unwrap_or_else(|| std::env::temp_dir().join("mmode-model"));
    std::fs::create_dir_all(&out)?;

    let params = SynthParams {
        pixels: 256,
        n_per_class: 40,
        ..SynthParams::default()
    };
    let data = synth_generate(&params)?;
    let config = FitConfig {
        rank_cap: 40,
        keep: ComponentRange::new(9, 12)?,
        svm: SvmParams::default(),
    };
    let model = fit(&data.train_real, &data.train_fake, &data.val_real, &data.val_fake, &config)?;

    let path = out.join("model.mldf");
    save_model(&model, &path)?;
    let text = std::fs::read_to_string(&path)?;
    println!("{} ({} bytes)", path.display(), text.len());
    for line in text.lines().filter(|l| l.chars().next().is_some_and(char::is_alphabetic)) {
        println!("  {line}");
    }

    let back = load_model(&path)?;
    println!("re-serialized identically: {}", model_to_string(&back)? == text);
    let mut same = 0;
    let mut total = 0;
    for set in [&data.test_real, &data.test_fake] {
        for frame in set.frames() {
            total += 1;
            same += usize::from(model.classify(frame)?.1 == back.classify(frame)?.1);
        }
    }
    println!("identical predictions: {same} / {total}");
    Ok(())
}
