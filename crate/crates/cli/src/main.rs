mod import;
mod overlay;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use cd_engine::harness::{
    load_dataset, report, run_eval, write_dataset, EvalOptions, LogitProvider, Method, MockConfig, MockProvider,
    ReplayProvider, VariantPlan,
};
use cd_engine::metrics::classify_answer;
use cd_engine::perturb::{self, io as image_io, Interpolation, NoiseSchedule};
use cd_engine::{
    calibrate, CalibrationConfig, CalibrationInput, Fusion, RecordFile, VariantFamily, VariantKind, WeightMetric,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

/// Error in user-supplied data; exits with status 2.
#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

#[derive(Parser, Debug)]
#[command(name = "cd-engine", version, about = "Visual contrastive decoding toolkit", args_override_self = true)]
struct Cli {
    /// TOML file with one table per subcommand; command-line flags win
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a visually changed copy of an image (PNG or raw float)
    Perturb(PerturbArgs),
    /// Calibrate every sample of a record file and print the results as JSON lines
    Calibrate(CalibrateArgs),
    /// Evaluate methods on a yes/no dataset and write report tables
    Eval(EvalArgs),
    /// Convert published benchmark files to the dataset schema
    #[command(subcommand)]
    Import(ImportCommand),
    /// Validate a record file and summarize its contents
    Inspect(InspectArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PerturbKind {
    Noise,
    Downsample,
    Blank,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Kernel {
    Bilinear,
    Nearest,
}

#[derive(clap::Args, Debug)]
struct PerturbArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output image; `.png` is written as 8-bit PNG, anything else as raw float
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    kind: PerturbKind,
    /// Noise steps N
    #[arg(long, default_value_t = perturb::DEFAULT_NOISE_STEPS)]
    steps: u32,
    /// Length T of the linear noise schedule
    #[arg(long, default_value_t = perturb::DEFAULT_TOTAL_STEPS)]
    total_steps: u32,
    /// Downsampling ratio r
    #[arg(long, default_value_t = perturb::DEFAULT_RATIO)]
    ratio: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Kernel::Bilinear)]
    kernel: Kernel,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FusionArg {
    Single,
    Naive,
    Entropy,
    Confidence,
    Unconfidence,
    Pdd,
}

impl FusionArg {
    fn fusion(self) -> Fusion {
        let w = |metric| Fusion::Weighted { metric };
        match self {
            FusionArg::Single => Fusion::Single,
            FusionArg::Naive => Fusion::Naive,
            FusionArg::Entropy => w(WeightMetric::Entropy),
            FusionArg::Confidence => w(WeightMetric::Confidence),
            FusionArg::Unconfidence => w(WeightMetric::Unconfidence),
            FusionArg::Pdd => w(WeightMetric::Pdd),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum FamilyArg {
    Noise,
    Downsample,
    Noimage,
    Edited,
}

impl From<FamilyArg> for VariantFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Noise => VariantFamily::DiffusionNoise,
            FamilyArg::Downsample => VariantFamily::Downsample,
            FamilyArg::Noimage => VariantFamily::NoImage,
            FamilyArg::Edited => VariantFamily::Edited,
        }
    }
}

#[derive(clap::Args, Debug)]
struct PlanArgs {
    /// Noise steps of the diffusion-noise variant to look up
    #[arg(long, default_value_t = perturb::DEFAULT_NOISE_STEPS)]
    steps: u32,
    /// Ratio of the downsample variant to look up
    #[arg(long, default_value_t = perturb::DEFAULT_RATIO)]
    ratio: u32,
    /// Text guidance scale of the edited variant to look up
    #[arg(long, default_value_t = 20.0)]
    cfg_text: f64,
}

impl PlanArgs {
    fn plan(&self) -> VariantPlan {
        VariantPlan { noise_steps: self.steps, ratio: self.ratio, cfg_text: self.cfg_text, ..Default::default() }
    }
}

#[derive(clap::Args, Debug)]
struct CalibrateArgs {
    #[arg(long)]
    records: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = FusionArg::Single)]
    fusion: FusionArg,
    /// Divide the naive-fusion contrast by the number of variants
    #[arg(long)]
    normalize_naive: bool,
    /// Variants to contrast against (comma list); defaults to noise for
    /// single and to all four otherwise
    #[arg(long, value_enum, value_delimiter = ',')]
    variants: Vec<FamilyArg>,
    /// Number of top tokens to print per sample
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[command(flatten)]
    plan: PlanArgs,
    /// Output file; standard output when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["records", "mock"])))]
struct EvalArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Replay logits from this record file
    #[arg(long)]
    records: Option<PathBuf>,
    /// Use the seeded synthetic provider
    #[arg(long)]
    mock: bool,
    /// Seed of the synthetic provider
    #[arg(long, requires = "mock")]
    seed: Option<u64>,
    /// JSON file with synthetic-provider settings
    #[arg(long, requires = "mock")]
    mock_config: Option<PathBuf>,
    /// Comma list of methods; the uncalibrated baseline is always included
    #[arg(
        long,
        default_value = "original,single-noise,single-noimage,single-downsample,single-edited,naive-fusion,entropy-fusion,pdd-fusion"
    )]
    methods: String,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long)]
    normalize_naive: bool,
    #[command(flatten)]
    plan: PlanArgs,
    #[arg(long, default_value = "report")]
    out_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
enum ImportCommand {
    /// POPE question file (JSON lines with question_id, image, text, label)
    Pope {
        #[arg(long)]
        input: PathBuf,
        /// random, popular or adversarial
        #[arg(long)]
        split: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// MME answer files (tab-separated image, question, answer); a directory is searched for .txt files
    Mme {
        #[arg(long)]
        input: PathBuf,
        /// Subtask name; defaults to the directory or file name
        #[arg(long)]
        subtask: Option<String>,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(clap::Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    records: PathBuf,
    /// Print the summary as JSON
    #[arg(long)]
    json: bool,
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("CD_ENGINE_THREADS") {
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!("CD_ENGINE_THREADS must be a positive integer, got {v:?}"),
        },
        Err(_) => Ok(None),
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run_perturb(a: PerturbArgs) -> Result<()> {
    let image = image_io::load_image(&a.input)?;
    let out = match a.kind {
        PerturbKind::Blank => {
            println!("{}", serde_json::to_string(&perturb::blank(&image))?);
            return Ok(());
        }
        PerturbKind::Noise => {
            let schedule = NoiseSchedule::linear(a.total_steps)?;
            perturb::diffuse(&image, a.steps, &schedule, a.seed)?
        }
        PerturbKind::Downsample => {
            let kernel = match a.kernel {
                Kernel::Bilinear => Interpolation::Bilinear,
                Kernel::Nearest => Interpolation::Nearest,
            };
            perturb::downsample(&image, a.ratio, kernel)?
        }
    };
    let Some(path) = a.output else { bail!("--output is required for --kind noise and downsample") };
    image_io::save_image(&out, &path)?;
    Ok(())
}

fn run_calibrate(a: CalibrateArgs) -> Result<()> {
    let file = RecordFile::read(&a.records)?;
    let fusion = a.fusion.fusion();
    let families: Vec<VariantFamily> = if a.variants.is_empty() {
        match fusion {
            Fusion::Single => vec![VariantFamily::DiffusionNoise],
            _ => VariantFamily::CONTRASTIVE.to_vec(),
        }
    } else {
        a.variants.iter().map(|&f| f.into()).collect()
    };
    if fusion == Fusion::Single && families.len() != 1 {
        bail!("--fusion single takes exactly one variant, got {}", families.len());
    }
    let config = CalibrationConfig {
        alpha: a.alpha,
        beta: a.beta,
        fusion,
        normalize_naive: a.normalize_naive,
        ..Default::default()
    };
    config.validate()?;

    let mut samples: Vec<String> = Vec::new();
    for r in &file.records {
        if !samples.contains(&r.sample_id) {
            samples.push(r.sample_id.clone());
        }
    }
    let plan = a.plan.plan();
    let provider = ReplayProvider::new(file);
    let mut out = String::new();
    for id in &samples {
        let original = provider.logits(id, &VariantKind::Original)?;
        let mut variants = Vec::with_capacity(families.len());
        for &f in &families {
            let kind = match f {
                VariantFamily::Edited => VariantKind::Edited { cfg_text: plan.cfg_text, instruction: String::new() },
                VariantFamily::DiffusionNoise => {
                    VariantKind::DiffusionNoise { steps: plan.noise_steps, schedule: plan.schedule.clone() }
                }
                VariantFamily::Downsample => VariantKind::Downsample { ratio: plan.ratio },
                _ => VariantKind::NoImage,
            };
            let logits = provider.logits(id, &kind)?;
            variants.push((kind, logits));
        }
        let result = calibrate(&CalibrationInput { original, variants, config })?;
        let d = &result.distribution;
        let answer = provider
            .answer_map(id)
            .ok()
            .map(|m| classify_answer(d, m.yes(), m.no()))
            .transpose()?
            .map(|c| serde_json::to_value(c).expect("serializable"));
        let line = json!({
            "sample_id": id,
            "argmax": d.argmax(),
            "answer": answer,
            "top": d.top_k(a.top_k),
            "weights": result.weights_used,
            "survivors": result.survivors.len(),
        });
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    write_output(a.out.as_deref(), &out)
}

fn run_eval_cmd(a: EvalArgs) -> Result<()> {
    let items = load_dataset(&a.dataset)?;
    let methods = Method::parse_list(&a.methods)?;
    let opts = EvalOptions {
        alpha: a.alpha,
        beta: a.beta,
        normalize_naive: a.normalize_naive,
        plan: a.plan.plan(),
        threads: threads_from_env()?,
        ..Default::default()
    };
    let provider: Box<dyn LogitProvider> = match (&a.records, a.mock) {
        (Some(path), _) => Box::new(ReplayProvider::new(RecordFile::read(path)?)),
        (None, _) => {
            let mut config = match &a.mock_config {
                Some(p) => {
                    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str::<MockConfig>(&text).map_err(|e| DataError(format!("{}: {e}", p.display())))?
                }
                None => MockConfig::default(),
            };
            if let Some(seed) = a.seed {
                config.seed = seed;
            }
            Box::new(MockProvider::new(config)?.with_golds(&items))
        }
    };
    let r = run_eval(&items, provider.as_ref(), &methods, &opts)?;
    let written = report::write_report_dir(&r, &a.out_dir)?;
    print!("{}", report::accuracy_csv(&r)?);
    eprintln!("wrote {} to {}", written.join(", "), a.out_dir.display());
    Ok(())
}

fn run_import(c: ImportCommand) -> Result<()> {
    let (items, output) = match c {
        ImportCommand::Pope { input, split, output } => {
            let text = fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            (import::pope(&text, &split, &input)?, output)
        }
        ImportCommand::Mme { input, subtask, output } => (import::mme(&input, subtask.as_deref())?, output),
    };
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = items.iter().find(|i| !seen.insert(i.sample_id.as_str())) {
        return Err(DataError(format!("duplicate sample id {}", dup.sample_id)).into());
    }
    fs::write(&output, write_dataset(&items)?).with_context(|| format!("writing {}", output.display()))?;
    eprintln!("wrote {} items to {}", items.len(), output.display());
    Ok(())
}

fn run_inspect(a: InspectArgs) -> Result<()> {
    let file = RecordFile::read(&a.records)?;
    let s = file.summary();
    if a.json {
        println!("{}", serde_json::to_string_pretty(&s)?);
        return Ok(());
    }
    println!("records: {}", s.records);
    println!("samples: {}", s.samples);
    let vocab: Vec<String> = s.vocab_sizes.iter().map(|(v, n)| format!("{v} ({n} samples)")).collect();
    println!("vocab size: {}", vocab.join(", "));
    println!("answer tokens in header: {}", if s.has_answer_tokens { "yes" } else { "no" });
    println!("variants:");
    for (k, n) in &s.variants {
        println!("  {k}: {n}");
    }
    Ok(())
}

fn expand_config(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = overlay::take_config(&mut args)? else { return Ok(args) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let (at, sub) = overlay::subcommand_path(&args, &["import"]);
    if sub.is_empty() {
        return Ok(args);
    }
    let extra = overlay::expand(&text, &sub).with_context(|| format!("config {}", path.display()))?;
    args.splice(at..at, extra);
    Ok(args)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let data = err.chain().any(|e| {
        e.downcast_ref::<DataError>().is_some()
            || e.downcast_ref::<cd_engine::Error>().is_some_and(|e| e.is_data_error())
    });
    if data {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Perturb(a) => run_perturb(a),
        Command::Calibrate(a) => run_calibrate(a),
        Command::Eval(a) => run_eval_cmd(a),
        Command::Import(c) => run_import(c),
        Command::Inspect(a) => run_inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
