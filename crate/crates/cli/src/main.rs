use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wdsel::allan::{allan_deviation, extract_coefficients, NoiseCoefficients};
use wdsel::experiment::{self, Arm, ARM_CRM, ARM_NO_CRM};
use wdsel::imu::make_dataset;
use wdsel::nav::{Quaternion, Vec3};
use wdsel::persist::{self, Checkpoint, ExperimentConfig, RESOLVED_CONFIG};
use wdsel::pipeline::{enhance_stream, select_stream, BankDenoiser};
use wdsel::signal::CHANNEL_NAMES;
use wdsel::{Error, Result};

const CHECKPOINT: &str = "checkpoint.bin";
const CHECKPOINT_NO_CRM: &str = "checkpoint-no-crm.bin";

#[derive(Parser)]
#[command(name = "wdsel", version, about = "Per-signal wavelet selection for inertial sensor denoising")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Test,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a labelled dataset and a stationary capture.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train the selector (and the ablation twin when configured).
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Defaults to the configuration stored with the dataset.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Denoise signal files with the wavelet chosen per window.
    Enhance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        /// Output file for a single input, otherwise a directory.
        #[arg(long)]
        out: PathBuf,
        /// Mix the retained bank members instead of taking the top choice.
        #[arg(long)]
        soft: bool,
    },
    /// Print the wavelet chosen for each window of a signal file.
    Select {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Allan-deviation noise coefficients of a stationary capture.
    Allan {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 10)]
        points_per_decade: usize,
        /// Also write the Allan curves as `<dir>/<channel>.csv`.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Strapdown trajectory of a signal file, optionally enhanced first.
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Reference trajectory supplying the initial attitude, position and
        /// velocity.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Compare raw, baseline and selector outputs on a dataset.
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Feature vectors with chosen and best wavelets per window.
    Features {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "test")]
        split: Split,
    },
    /// Filter coefficients of the wavelet bank.
    ExportBank {
        #[arg(long, default_value_t = 16)]
        bank_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn require(path: Option<PathBuf>, fallback: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.or_else(|| fallback.clone()).ok_or_else(|| Error::Usage(format!("--{flag} is required (or set paths.{flag} in the config)")))
}

fn load_config(explicit: Option<&Path>, fallbacks: &[&Path]) -> Result<ExperimentConfig> {
    if let Some(p) = explicit {
        return ExperimentConfig::load(p);
    }
    for dir in fallbacks {
        let p = dir.join(RESOLVED_CONFIG);
        if p.exists() {
            return ExperimentConfig::load(&p);
        }
    }
    Ok(ExperimentConfig::default())
}

fn checkpoint_path(model: &Path) -> PathBuf {
    if model.is_dir() {
        model.join(CHECKPOINT)
    } else {
        model.to_path_buf()
    }
}

fn load_arms(model_dir: &Path, cfg: &ExperimentConfig) -> Result<Vec<Arm>> {
    let mut arms = Vec::new();
    for (file, label) in [(CHECKPOINT, ARM_CRM), (CHECKPOINT_NO_CRM, ARM_NO_CRM)] {
        let p = model_dir.join(file);
        if p.exists() || file == CHECKPOINT {
            let ck = persist::load_checkpoint(&p)?;
            ck.expect(cfg.train.bank_size, &cfg.train.model)?;
            arms.push(Arm { label: label.into(), model: ck.model, meta: ck.meta, report: None });
        }
    }
    Ok(arms)
}

fn simulate(config: Option<PathBuf>, out: Option<PathBuf>, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_config(config.as_deref(), &[])?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = require(out, &cfg.paths.data, "out")?;
    let sim = &cfg.simulator;
    let ds = make_dataset(sim.n_windows, sim.window_len, sim, cfg.seed)?;
    let capture = persist::dataset_static_capture(&ds.config, ds.seed)?;
    persist::write_dataset(&out, &ds, Some(&capture))?;
    cfg.write_resolved(&out)?;
    println!("wrote {} windows from {} recordings to {}", ds.len(), ds.recordings.len(), out.display());
    Ok(())
}

fn train(data: Option<PathBuf>, out: Option<PathBuf>, config: Option<PathBuf>) -> Result<()> {
    let pre = config.as_deref().map(ExperimentConfig::load).transpose()?;
    let data = require(data, &pre.as_ref().and_then(|c| c.paths.data.clone()), "data")?;
    let cfg = match pre {
        Some(c) => c,
        None => load_config(None, &[&data])?,
    };
    let out = require(out, &cfg.paths.model, "out")?;
    let ds = persist::read_dataset(&data)?;
    let arms = experiment::train_arms(&ds, &cfg)?;
    std::fs::create_dir_all(&out)?;
    for arm in &arms {
        let (ck, rep) = if arm.label == ARM_CRM {
            (CHECKPOINT, "train_report.csv")
        } else if cfg.train.crm_enabled {
            (CHECKPOINT_NO_CRM, "train_report-no-crm.csv")
        } else {
            (CHECKPOINT, "train_report.csv")
        };
        persist::save_checkpoint(&out.join(ck), &arm.model, &arm.meta)?;
        if let Some(r) = &arm.report {
            std::fs::write(out.join(rep), r.to_csv())?;
            if let Some(last) = r.epochs.last() {
                println!("{}: loss {:.6}, S2 {:.4}, top-1 mass {:.3}", arm.label, last.total_loss, last.s2, last.top1_mass);
            }
        }
    }
    cfg.write_resolved(&out)?;
    Ok(())
}

fn enhance(model: PathBuf, inputs: Vec<PathBuf>, out: PathBuf, soft: bool) -> Result<()> {
    let ck = persist::load_checkpoint(&checkpoint_path(&model))?;
    let bank = BankDenoiser::new(ck.model.categories(), ck.meta.denoise)?;
    let eps = soft.then_some(ck.meta.epsilon_truncation);
    let single = inputs.len() == 1 && !out.is_dir();
    for input in &inputs {
        let signal = persist::read_signal(input)?;
        let (enhanced, picks) = enhance_stream(&signal, &ck.model, &bank, ck.meta.window_len, eps)?;
        let target = if single {
            out.clone()
        } else {
            let name = input.file_name().ok_or_else(|| Error::Input(format!("{} has no file name", input.display())))?;
            out.join(name)
        };
        persist::write_signal(&target, &enhanced)?;
        println!("{} -> {} ({} windows)", input.display(), target.display(), picks.len());
    }
    Ok(())
}

fn select(model: PathBuf, input: PathBuf) -> Result<()> {
    let ck = persist::load_checkpoint(&checkpoint_path(&model))?;
    let names = BankDenoiser::new(ck.model.categories(), ck.meta.denoise)?.names();
    let signal = persist::read_signal(&input)?;
    println!("window,start,wavelet");
    for (i, (s, j)) in select_stream(&signal, &ck.model, ck.meta.window_len)?.into_iter().enumerate() {
        println!("{i},{s},{}", names[j]);
    }
    Ok(())
}

#[derive(Serialize)]
struct ChannelReport<'a> {
    channel: &'a str,
    #[serde(flatten)]
    coefficients: NoiseCoefficients<f64>,
}

fn allan(input: PathBuf, json: bool, ppd: usize, curves: Option<PathBuf>) -> Result<()> {
    let signal = persist::read_signal(&input)?;
    let mut reports = Vec::new();
    for (c, name) in signal.channels().iter().zip(CHANNEL_NAMES) {
        let curve = allan_deviation(c, signal.sample_rate(), ppd)?;
        if let Some(dir) = &curves {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{name}.csv")), curve.to_csv())?;
        }
        reports.push(ChannelReport { channel: name, coefficients: extract_coefficients(&curve)? });
    }
    if json {
        let text = serde_json::to_string_pretty(&reports).map_err(|e| Error::Structural(e.to_string()))?;
        println!("{text}");
    } else {
        println!("channel,{}", NoiseCoefficients::<f64>::CSV_HEADER);
        for r in &reports {
            println!("{},{}", r.channel, r.coefficients.csv_row());
        }
    }
    Ok(())
}

fn reconstruct(input: PathBuf, out: PathBuf, model: Option<PathBuf>, truth: Option<PathBuf>) -> Result<()> {
    let mut signal = persist::read_signal(&input)?;
    if let Some(m) = model {
        let ck = persist::load_checkpoint(&checkpoint_path(&m))?;
        let bank = BankDenoiser::new(ck.model.categories(), ck.meta.denoise)?;
        signal = enhance_stream(&signal, &ck.model, &bank, ck.meta.window_len, None)?.0;
    }
    let (q0, v0, p0): (Quaternion<f64>, Vec3<f64>, Vec3<f64>) = match truth {
        Some(p) => {
            let t = persist::read_trajectory(&p)?;
            if t.is_empty() {
                return Err(Error::Input(format!("{} has no samples", p.display())));
            }
            (t.quaternions[0], t.velocity(0), t.positions[0])
        }
        None => (Quaternion::identity(), [0.0; 3], [0.0; 3]),
    };
    let traj = experiment::reconstruct(&signal, q0, v0, p0)?;
    persist::write_trajectory(&out, &traj)
}

fn evaluate(model: Option<PathBuf>, data: Option<PathBuf>, out: Option<PathBuf>, config: Option<PathBuf>) -> Result<()> {
    let pre = config.as_deref().map(ExperimentConfig::load).transpose()?;
    let model = require(model, &pre.as_ref().and_then(|c| c.paths.model.clone()), "model")?;
    let cfg = match pre {
        Some(c) => c,
        None => load_config(None, &[&model])?,
    };
    let data = require(data, &cfg.paths.data, "data")?;
    let out = out.or_else(|| cfg.paths.output.clone()).unwrap_or_else(|| model.join("evaluation"));
    let arms = load_arms(&model, &cfg)?;
    let ds = persist::read_dataset(&data)?;
    let capture = persist::read_static_capture(&data)?;
    let report = experiment::evaluate(&ds, &capture, &arms, &cfg.evaluation)?;
    report.write(&out)?;
    cfg.write_resolved(&out)?;
    print!("{}", report.dynamic_csv());
    print!("{}", report.selection_csv());
    Ok(())
}

fn features(model: PathBuf, data: PathBuf, out: PathBuf, split: Split) -> Result<()> {
    let ck: Checkpoint = persist::load_checkpoint(&checkpoint_path(&model))?;
    let ds = persist::read_dataset(&data)?;
    let (train_ids, test_ids) = ds.split();
    let ids: Vec<usize> = match split {
        Split::Train => train_ids,
        Split::Test => test_ids,
        Split::All => (0..ds.len()).collect(),
    };
    let csv = experiment::features_csv(&ck.model, &ds.samples(&ids)?, ck.meta.denoise)?;
    std::fs::write(&out, csv)?;
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("WDSEL_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("WDSEL_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { config, out, seed } => simulate(config, out, seed),
        Command::Train { data, out, config } => train(data, out, config),
        Command::Enhance { model, input, out, soft } => enhance(model, input, out, soft),
        Command::Select { model, input } => select(model, input),
        Command::Allan { input, json, points_per_decade, curves } => allan(input, json, points_per_decade, curves),
        Command::Reconstruct { input, out, model, truth } => reconstruct(input, out, model, truth),
        Command::Evaluate { model, data, out, config } => evaluate(model, data, out, config),
        Command::Features { model, data, out, split } => features(model, data, out, split),
        Command::ExportBank { bank_size, out } => {
            let csv = experiment::bank_csv(bank_size).map_err(|e| match e {
                Error::Config(m) | Error::Input(m) => Error::Usage(m),
                other => other,
            })?;
            std::fs::write(out, csv).map_err(Error::from)
        }
    }
}

fn fail(err: &Error) -> ExitCode {
    let msg = err.to_string().replace('\n', " ");
    eprintln!("error[{}]: {msg}", err.category());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
            return fail(&Error::Usage(first));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
