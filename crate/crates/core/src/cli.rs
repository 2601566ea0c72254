//! Command-line front end: `train`, `eval`, `project`, `synth`, `inspect`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::dataset_io::{
    fmt_f64, load_frames, load_model, load_pgm, model_to_string, save_frames_csv, synth_generate,
    synth_metadata, GrayImage, RingMask, SynthParams,
};
use crate::error::{Error, Result};
use crate::multilinear::ComponentRange;
use crate::pipeline::{fit_with_report, within_class_cosine, FitConfig, FrameMatrix, ProjectionResult};
use crate::svm::{evaluate, Label, Metrics, SvmParams};

/// Environment variable holding the log filter (`error`, `warn`, `info`, `debug`, ...).
pub const LOG_ENV: &str = "MMODE_LOG";

#[derive(Parser, Debug)]
#[command(name = "mmode", version, about = "Multilinear deepfake detection on vectorized face frames")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit a model from real/fake training and validation frames.
    Train(TrainArgs),
    /// Classify test frames with a saved model and write metrics.
    Eval(EvalArgs),
    /// Project a single frame and print its coefficients.
    Project(ProjectArgs),
    /// Generate planted-artifact synthetic frame sets.
    Synth(SynthArgs),
    /// Print a model's header information.
    Inspect(InspectArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Ring mask PGM (nonzero = keep) applied to every frame.
    #[arg(long, value_name = "PATH")]
    pub mask: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Omit timestamps so repeated runs give identical files.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    pub real_train: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub fake_train: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub real_val: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub fake_val: PathBuf,
    #[arg(long, default_value_t = 5040)]
    pub rank_cap: usize,
    #[arg(long, value_name = "LO:HI", default_value = "2980:5000")]
    pub keep: ComponentRange,
    #[arg(long, default_value_t = 1.0)]
    pub svm_c: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub svm_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub svm_max_iter: usize,
    /// Recorded in the report; training itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also fit over the full component range and write its scatter data.
    #[arg(long)]
    pub also_untruncated: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub real_test: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub fake_test: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// A CSV of frames or a PGM image.
    #[arg(long, value_name = "PATH")]
    pub frame: PathBuf,
    /// 1-based CSV row to project.
    #[arg(long, default_value_t = 1)]
    pub row: usize,
    #[arg(long, value_name = "PATH")]
    pub mask: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1024)]
    pub pixels: usize,
    #[arg(long, default_value_t = 8)]
    pub inner_dim: usize,
    #[arg(long, default_value_t = 4)]
    pub artifact_dim: usize,
    #[arg(long, default_value_t = 0.25)]
    pub outer_fraction: f64,
    #[arg(long, default_value_t = 2.0)]
    pub artifact_gain: f64,
    #[arg(long, default_value_t = 0.05)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 120)]
    pub n_per_class: usize,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
}

/// Everything one train or eval run needs.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub rank_cap: usize,
    pub keep: ComponentRange,
    pub svm: SvmParams,
    pub real_train: Option<PathBuf>,
    pub fake_train: Option<PathBuf>,
    pub real_val: Option<PathBuf>,
    pub fake_val: Option<PathBuf>,
    pub real_test: Option<PathBuf>,
    pub fake_test: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub deterministic: bool,
    pub also_untruncated: bool,
}

impl RunConfig {
    /// Defaults of the original experiment; paths empty.
    pub fn new(out: impl Into<PathBuf>) -> Self {
        let fit = FitConfig::video_defaults();
        Self {
            rank_cap: fit.rank_cap,
            keep: fit.keep,
            svm: fit.svm,
            real_train: None,
            fake_train: None,
            real_val: None,
            fake_val: None,
            real_test: None,
            fake_test: None,
            mask: None,
            out: out.into(),
            seed: 0,
            deterministic: false,
            also_untruncated: false,
        }
    }

    fn fit_config(&self) -> FitConfig {
        FitConfig {
            rank_cap: self.rank_cap,
            keep: self.keep,
            svm: self.svm,
        }
    }

    fn validate_fit(&self) -> Result<()> {
        if self.rank_cap == 0 {
            return Err(Error::Params("--rank-cap must be positive".into()));
        }
        if self.keep.hi() > self.rank_cap {
            return Err(Error::Range {
                lo: self.keep.lo(),
                hi: self.keep.hi(),
                cols: self.rank_cap,
            });
        }
        if !(self.svm.c_reg > 0.0) || !(self.svm.tol > 0.0) || self.svm.max_iter == 0 {
            return Err(Error::Params(
                "--svm-c and --svm-tol must be positive, --svm-max-iter nonzero".into(),
            ));
        }
        Ok(())
    }

    fn mask(&self) -> Result<Option<RingMask>> {
        self.mask.as_ref().map(RingMask::load).transpose()
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    path.as_deref()
        .filter(|p| !p.as_os_str().is_empty())
        .ok_or_else(|| Error::Params(format!("missing {flag}")))
}

/// Writes a file and reads it back to confirm the bytes landed.
fn write_verified(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let back = fs::read(path).map_err(|e| Error::io(path, e))?;
    if back != bytes {
        return Err(Error::Malformed(format!(
            "{} did not read back as written",
            path.display()
        )));
    }
    Ok(())
}

fn header(deterministic: bool) -> String {
    if deterministic {
        return String::new();
    }
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("# written_unix={secs}\n")
}

fn push_metrics(out: &mut String, prefix: &str, m: &Metrics) {
    let _ = writeln!(out, "{prefix}tp={}", m.tp);
    let _ = writeln!(out, "{prefix}tn={}", m.tn);
    let _ = writeln!(out, "{prefix}fp={}", m.fp);
    let _ = writeln!(out, "{prefix}fn={}", m.fn_);
    let _ = writeln!(out, "{prefix}accuracy={}", m.accuracy);
}

fn scatter_csv(points: &[(ProjectionResult, Label)]) -> String {
    let mut out = String::from("x,y,z,label\n");
    for (p, l) in points {
        let _ = writeln!(
            out,
            "{},{},{},{l}",
            fmt_f64(p.r_c[0]),
            fmt_f64(p.r_c[1]),
            fmt_f64(p.r_c[2])
        );
    }
    out
}

/// Paths written by [`cmd_train`].
#[derive(Clone, Debug)]
pub struct TrainOutputs {
    pub model: PathBuf,
    pub metrics: PathBuf,
    pub scatter: PathBuf,
    pub scatter_untruncated: Option<PathBuf>,
    pub validation: Metrics,
}

/// Fits a model and writes `model.mldf`, `train_metrics.txt` and the scatter CSVs.
pub fn cmd_train(config: &RunConfig) -> Result<TrainOutputs> {
    let real_train = required(&config.real_train, "--real-train")?;
    let fake_train = required(&config.fake_train, "--fake-train")?;
    let real_val = required(&config.real_val, "--real-val")?;
    let fake_val = required(&config.fake_val, "--fake-val")?;
    config.validate_fit()?;
    let mask = config.mask()?;
    let load = |p: &Path, l| load_frames(p, l, mask.as_ref());
    let tr = load(real_train, Label::Real)?;
    let tf = load(fake_train, Label::Fake)?;
    let vr = load(real_val, Label::Real)?;
    let vf = load(fake_val, Label::Fake)?;
    log::info!(
        "loaded {} + {} training and {} + {} validation frames of {} pixels",
        tr.len(),
        tf.len(),
        vr.len(),
        vf.len(),
        tr.pixels()
    );

    let (model, report) = fit_with_report(&tr, &tf, &vr, &vf, &config.fit_config())?;
    let labels: Vec<Label> = report.validation.iter().map(|(_, l)| *l).collect();
    let predicted: Vec<Label> = report
        .validation
        .iter()
        .map(|(p, _)| model.svm.predict(&p.r_c))
        .collect();
    let validation = evaluate(&predicted, &labels)?;
    if !model.svm.converged {
        log::warn!(
            "SVM stopped at --svm-max-iter {} without reaching --svm-tol; keeping the best iterate",
            config.svm.max_iter
        );
    }
    let points: Vec<_> = report.validation.iter().map(|(p, l)| (p.r_c, *l)).collect();

    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let model_path = config.out.join("model.mldf");
    let text = model_to_string(&model)?;
    write_verified(&model_path, text.as_bytes())?;
    let reloaded = load_model(&model_path)?;
    if model_to_string(&reloaded)? != text {
        return Err(Error::Malformed("saved model does not reload identically".into()));
    }

    let (p, f, k) = model.dims();
    let mut metrics = header(config.deterministic);
    let _ = writeln!(metrics, "pixels={p}");
    let _ = writeln!(metrics, "components={f}");
    let _ = writeln!(metrics, "kept={k}");
    let _ = writeln!(metrics, "keep={}", model.keep);
    let _ = writeln!(metrics, "rank_cap={}", config.rank_cap);
    let _ = writeln!(metrics, "seed={}", config.seed);
    let _ = writeln!(metrics, "svm_converged={}", model.svm.converged);
    push_metrics(&mut metrics, "validation_", &validation);
    let _ = writeln!(metrics, "validation_within_class_cosine={}", within_class_cosine(&points));

    let scatter_path = config.out.join("scatter.csv");
    write_verified(&scatter_path, scatter_csv(&report.validation).as_bytes())?;

    let mut scatter_untruncated = None;
    if config.also_untruncated {
        let full = FitConfig {
            keep: ComponentRange::full(f)?,
            ..config.fit_config()
        };
        let (full_model, full_report) = fit_with_report(&tr, &tf, &vr, &vf, &full)?;
        let full_points: Vec<_> = full_report.validation.iter().map(|(p, l)| (p.r_c, *l)).collect();
        let full_pred: Vec<Label> = full_points
            .iter()
            .map(|(x, _)| full_model.svm.predict(x))
            .collect();
        push_metrics(&mut metrics, "untruncated_validation_", &evaluate(&full_pred, &labels)?);
        let _ = writeln!(
            metrics,
            "untruncated_validation_within_class_cosine={}",
            within_class_cosine(&full_points)
        );
        let path = config.out.join("scatter_untruncated.csv");
        write_verified(&path, scatter_csv(&full_report.validation).as_bytes())?;
        scatter_untruncated = Some(path);
    }

    let metrics_path = config.out.join("train_metrics.txt");
    write_verified(&metrics_path, metrics.as_bytes())?;
    Ok(TrainOutputs {
        model: model_path,
        metrics: metrics_path,
        scatter: scatter_path,
        scatter_untruncated,
        validation,
    })
}

/// Classifies the test sets and writes `eval_metrics.txt` and `frames.csv`.
pub fn cmd_eval(config: &RunConfig, model_path: &Path) -> Result<Metrics> {
    let real_test = required(&config.real_test, "--real-test")?;
    let fake_test = required(&config.fake_test, "--fake-test")?;
    let model = load_model(model_path)?;
    let mask = config.mask()?;
    let sets = [
        load_frames(real_test, Label::Real, mask.as_ref())?,
        load_frames(fake_test, Label::Fake, mask.as_ref())?,
    ];
    if sets.iter().all(FrameMatrix::is_empty) {
        return Err(Error::Params("test sets contain no frames".into()));
    }
    for (fm, path) in sets.iter().zip([real_test, fake_test]) {
        if !fm.is_empty() && fm.pixels() != model.pixels() {
            return Err(Error::shape(format!(
                "{}: frames have length {}, model expects P = {}",
                path.display(),
                fm.pixels(),
                model.pixels()
            )));
        }
    }

    let mut frames_csv = String::from("index,actual,predicted,r_c1,r_c2,r_c3,residual\n");
    let mut predicted = Vec::new();
    let mut actual = Vec::new();
    let mut index = 0;
    for fm in &sets {
        for d in fm.frames() {
            index += 1;
            let (proj, label) = model.classify(d)?;
            let _ = writeln!(
                frames_csv,
                "{index},{},{label},{},{},{},{}",
                fm.label,
                fmt_f64(proj.r_c[0]),
                fmt_f64(proj.r_c[1]),
                fmt_f64(proj.r_c[2]),
                fmt_f64(proj.residual)
            );
            predicted.push(label);
            actual.push(fm.label);
        }
    }
    let metrics = evaluate(&predicted, &actual)?;

    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let mut text = header(config.deterministic);
    let _ = writeln!(text, "frames={}", metrics.total());
    push_metrics(&mut text, "", &metrics);
    write_verified(&config.out.join("eval_metrics.txt"), text.as_bytes())?;
    write_verified(&config.out.join("frames.csv"), frames_csv.as_bytes())?;
    Ok(metrics)
}

/// Projects one frame; returns the printable report.
pub fn cmd_project(args: &ProjectArgs) -> Result<String> {
    let model = load_model(&args.model)?;
    let mask = args.mask.as_ref().map(RingMask::load).transpose()?;
    let is_pgm = args
        .frame
        .extension()
        .is_some_and(|x| x.eq_ignore_ascii_case("pgm"));
    let frame = if is_pgm {
        let img: GrayImage = load_pgm(&args.frame)?;
        match &mask {
            Some(m) => crate::dataset_io::apply_mask(&img, m)?,
            None => img.pixels,
        }
    } else {
        let fm = load_frames(&args.frame, Label::Real, mask.as_ref())?;
        if args.row == 0 || args.row > fm.len() {
            return Err(Error::Params(format!(
                "--row {} outside 1..={}",
                args.row,
                fm.len()
            )));
        }
        fm.frame(args.row - 1).to_vec()
    };
    let (proj, label) = model.classify(&frame)?;
    let mut out = String::new();
    let _ = writeln!(out, "label={label}");
    let _ = writeln!(out, "decision={}", model.svm.decision(&proj.r_c));
    let _ = writeln!(out, "residual={}", proj.residual);
    let _ = writeln!(
        out,
        "r_c={}",
        proj.r_c.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(
        out,
        "r_f={}",
        proj.r_f.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(",")
    );
    Ok(out)
}

/// Writes the six synthetic splits as CSV plus `synth_meta.txt`.
pub fn cmd_synth(args: &SynthArgs) -> Result<Vec<PathBuf>> {
    let params = SynthParams {
        pixels: args.pixels,
        inner_dim: args.inner_dim,
        artifact_dim: args.artifact_dim,
        outer_fraction: args.outer_fraction,
        artifact_gain: args.artifact_gain,
        noise_sigma: args.noise_sigma,
        n_per_class: args.n_per_class,
        seed: args.seed,
    };
    let data = synth_generate(&params)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut written = Vec::new();
    for (name, fm) in data.splits() {
        let path = args.out.join(format!("{name}.csv"));
        save_frames_csv(&path, &fm.frames)?;
        written.push(path);
    }
    let meta = args.out.join("synth_meta.txt");
    write_verified(&meta, synth_metadata(&params).as_bytes())?;
    written.push(meta);
    Ok(written)
}

/// Model summary as key=value lines.
pub fn cmd_inspect(path: &Path) -> Result<String> {
    let model = load_model(path)?;
    let (p, f, k) = model.dims();
    let mut out = String::new();
    let _ = writeln!(out, "format=MLDF 1");
    let _ = writeln!(out, "pixels={p}");
    let _ = writeln!(out, "components={f}");
    let _ = writeln!(out, "kept={k}");
    let _ = writeln!(out, "keep={}", model.keep);
    let fmt_row = |r: [f64; 3]| r.map(|v| v.to_string()).join(",");
    let _ = writeln!(out, "real_row={}", fmt_row(model.real_row()));
    let _ = writeln!(out, "fake_row={}", fmt_row(model.fake_row()));
    let _ = writeln!(out, "svm_w={}", fmt_row(model.svm.w));
    let _ = writeln!(out, "svm_b={}", model.svm.b);
    let _ = writeln!(out, "svm_c={}", model.svm.c_reg);
    let _ = writeln!(out, "svm_converged={}", model.svm.converged);
    Ok(out)
}

fn train_config(a: &TrainArgs) -> RunConfig {
    RunConfig {
        rank_cap: a.rank_cap,
        keep: a.keep,
        svm: SvmParams {
            c_reg: a.svm_c,
            tol: a.svm_tol,
            max_iter: a.svm_max_iter,
        },
        real_train: Some(a.real_train.clone()),
        fake_train: Some(a.fake_train.clone()),
        real_val: Some(a.real_val.clone()),
        fake_val: Some(a.fake_val.clone()),
        real_test: None,
        fake_test: None,
        mask: a.common.mask.clone(),
        out: a.common.out.clone(),
        seed: a.seed,
        deterministic: a.common.deterministic,
        also_untruncated: a.also_untruncated,
    }
}

fn eval_config(a: &EvalArgs) -> RunConfig {
    RunConfig {
        real_test: Some(a.real_test.clone()),
        fake_test: Some(a.fake_test.clone()),
        mask: a.common.mask.clone(),
        deterministic: a.common.deterministic,
        ..RunConfig::new(a.common.out.clone())
    }
}

/// Runs a parsed command, printing results to stdout.
pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let out = cmd_train(&train_config(&a))?;
            println!("model={}", out.model.display());
            println!("validation_accuracy={}", out.validation.accuracy);
        }
        Command::Eval(a) => {
            let m = cmd_eval(&eval_config(&a), &a.model)?;
            println!("accuracy={}", m.accuracy);
        }
        Command::Project(a) => print!("{}", cmd_project(&a)?),
        Command::Synth(a) => {
            for p in cmd_synth(&a)? {
                println!("{}", p.display());
            }
        }
        Command::Inspect(a) => print!("{}", cmd_inspect(&a.model)?),
    }
    Ok(())
}

/// Entry point for the binary; returns the process exit code.
///
/// 0 on success, 1 on a pipeline or I/O error, 2 on a usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Params(_) => 2,
                _ => 1,
            }
        }
    }
}
