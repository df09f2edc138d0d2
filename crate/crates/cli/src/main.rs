//! `memlab` command-line driver.
//!
//! Settings come from an optional TOML config file; flags override the file.
//! Outputs go to `--out`, else the file's `output_dir`, else
//! `$MEMLAB_OUT/<command>`, else `runs/<command>`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memlab::dissection::ObjectiveKind;
use memlab::experiment::{cmd_report, run, DatasetSource, ExpError, ExperimentConfig, ExperimentKind, GeneratorSource, RunManifest, SynthDataset};
use memlab::models::Preset;

#[derive(Parser)]
#[command(name = "memlab", version, about = "Train, dissect and compare classifiers that learn or memorize")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one classifier per (seed, noise level).
    Train(Common),
    /// Train a generator/discriminator pair per seed.
    TrainGan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gan: GanArgs,
    },
    /// Compare a reference classifier against probe classifiers.
    Dissect {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dissect: DissectArgs,
    },
    /// Train the same setup under several seeds and compare trajectories.
    SeedStudy {
        #[command(flatten)]
        common: Common,
        /// Train accuracy that counts as fitted.
        #[arg(long)]
        fit_threshold: Option<f64>,
    },
    /// Dissect seed pairs across increasing label noise.
    NoiseSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dissect: DissectArgs,
    },
    /// Verify a run directory against its manifest and summarize it.
    Report {
        dir: PathBuf,
        /// Also draw every training report of the run into this SVG.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent runs (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Fractions of labels to randomize, e.g. `0,0.5,1`.
    #[arg(long, value_delimiter = ',')]
    noise: Option<Vec<f64>>,
    #[arg(long)]
    noise_seed: Option<u64>,

    /// synth, idx or cifar10.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    test_images: Option<PathBuf>,
    #[arg(long)]
    test_labels: Option<PathBuf>,
    /// CIFAR-10 binary batch files for training.
    #[arg(long, value_delimiter = ',')]
    cifar_train: Option<Vec<PathBuf>>,
    #[arg(long)]
    cifar_test: Option<PathBuf>,
    /// Keep only the first N training samples of a file dataset.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long)]
    held_out: Option<usize>,
    #[arg(long)]
    data_seed: Option<u64>,

    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    augment: bool,
    /// Skip the per-epoch input-gradient magnitude.
    #[arg(long)]
    no_gradients: bool,
}

#[derive(Args)]
struct GanArgs {
    #[arg(long)]
    generator_preset: Option<Preset>,
    #[arg(long)]
    discriminator_preset: Option<Preset>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    gan_lr: Option<f64>,
}

#[derive(Args)]
struct DissectArgs {
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long = "probe")]
    probes: Vec<PathBuf>,
    /// `cluster` or a generator checkpoint path.
    #[arg(long)]
    generator: Option<GeneratorSource>,
    #[arg(long)]
    seeds_per_class: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    ascent_lr: Option<f64>,
    /// logit or probability.
    #[arg(long)]
    objective: Option<String>,
    /// Ten seeds per class.
    #[arg(long)]
    fast: bool,
}

fn config_err(msg: impl Into<String>) -> ExpError {
    ExpError::Config(msg.into())
}

fn base_config(kind: ExperimentKind, c: &Common) -> Result<ExperimentConfig, ExpError> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::new(kind),
    };
    cfg.kind = kind;
    macro_rules! set {
        ($($flag:expr => $field:expr),* $(,)?) => {
            $(if let Some(v) = $flag.clone() { $field = v; })*
        };
    }
    if let Some(out) = &c.out {
        cfg.output_dir = Some(out.clone());
    }
    if c.workers.is_some() {
        cfg.workers = c.workers;
    }
    set!(c.seeds => cfg.seeds, c.noise => cfg.noise_levels, c.noise_seed => cfg.noise_seed);
    if let Some(name) = &c.dataset {
        cfg.dataset = match name.as_str() {
            "synth" => match cfg.dataset {
                DatasetSource::Synth(s) => DatasetSource::Synth(s),
                _ => DatasetSource::Synth(SynthDataset::default()),
            },
            "idx" => DatasetSource::Idx {
                images: c.images.clone().ok_or_else(|| config_err("--dataset idx needs --images"))?,
                labels: c.labels.clone().ok_or_else(|| config_err("--dataset idx needs --labels"))?,
                test_images: c.test_images.clone(),
                test_labels: c.test_labels.clone(),
                limit: c.limit,
            },
            "cifar10" => DatasetSource::Cifar10 {
                train: c.cifar_train.clone().ok_or_else(|| config_err("--dataset cifar10 needs --cifar-train"))?,
                test: c.cifar_test.clone(),
                limit: c.limit,
            },
            other => return Err(config_err(format!("unknown dataset {other:?} (expected synth, idx or cifar10)"))),
        };
    }
    let synth_flags = [c.classes, c.per_class, c.dims, c.held_out].iter().any(Option::is_some) || c.data_seed.is_some();
    match &mut cfg.dataset {
        DatasetSource::Synth(s) => {
            set!(c.classes => s.num_classes, c.per_class => s.per_class, c.dims => s.dims, c.held_out => s.held_out, c.data_seed => s.seed);
        }
        _ if synth_flags => return Err(config_err("--classes/--per-class/--dims/--held-out/--data-seed apply to synth data only")),
        _ => {}
    }
    set!(c.preset => cfg.model.preset);
    if c.hidden.is_some() {
        cfg.model.hidden = c.hidden;
    }
    let t = &mut cfg.training;
    set!(c.epochs => t.epochs, c.batch_size => t.batch_size, c.lr => t.lr, c.momentum => t.momentum, c.weight_decay => t.weight_decay);
    t.augment |= c.augment;
    if c.no_gradients {
        t.track_input_gradients = false;
    }
    Ok(cfg)
}

fn apply_dissect(cfg: &mut ExperimentConfig, d: &DissectArgs) -> Result<(), ExpError> {
    let s = &mut cfg.dissection;
    if d.fast {
        s.seeds_per_class = 10;
    }
    if d.reference.is_some() {
        s.reference = d.reference.clone();
    }
    if !d.probes.is_empty() {
        s.probes = d.probes.clone();
    }
    if let Some(g) = &d.generator {
        s.generator = g.clone();
    }
    if let Some(v) = d.seeds_per_class {
        s.seeds_per_class = v;
    }
    if let Some(v) = d.iterations {
        s.iterations = v;
    }
    if let Some(v) = d.ascent_lr {
        s.lr = v;
    }
    if let Some(o) = &d.objective {
        s.objective = match o.as_str() {
            "logit" => ObjectiveKind::Logit,
            "probability" => ObjectiveKind::Probability,
            other => return Err(config_err(format!("unknown objective {other:?} (expected logit or probability)"))),
        };
    }
    Ok(())
}

fn build(command: Command) -> Result<Option<ExperimentConfig>, ExpError> {
    Ok(Some(match command {
        Command::Train(c) => base_config(ExperimentKind::Train, &c)?,
        Command::TrainGan { common, gan } => {
            let mut cfg = base_config(ExperimentKind::TrainGan, &common)?;
            let g = &mut cfg.gan;
            // the shared size flags steer the GAN here
            if let Some(v) = common.epochs {
                g.epochs = v;
            }
            if let Some(v) = common.batch_size {
                g.batch_size = v;
            }
            if common.hidden.is_some() {
                g.hidden = common.hidden;
            }
            if let Some(v) = gan.generator_preset {
                g.generator = v;
            }
            if let Some(v) = gan.discriminator_preset {
                g.discriminator = v;
            }
            if let Some(v) = gan.latent_dim {
                g.latent_dim = v;
            }
            if let Some(v) = gan.gan_lr {
                g.lr = v;
            }
            cfg
        }
        Command::Dissect { common, dissect } => {
            let mut cfg = base_config(ExperimentKind::Dissect, &common)?;
            apply_dissect(&mut cfg, &dissect)?;
            cfg
        }
        Command::SeedStudy { common, fit_threshold } => {
            let mut cfg = base_config(ExperimentKind::SeedStudy, &common)?;
            if let Some(v) = fit_threshold {
                cfg.seed_study.fit_threshold = v;
            }
            cfg
        }
        Command::NoiseSweep { common, dissect } => {
            let mut cfg = base_config(ExperimentKind::NoiseSweep, &common)?;
            apply_dissect(&mut cfg, &dissect)?;
            cfg
        }
        Command::Report { dir, overlay } => {
            print!("{}", cmd_report(&dir, overlay.as_deref())?);
            return Ok(None);
        }
    }))
}

fn summarize(cfg: &ExperimentConfig, m: &RunManifest) {
    let root = cfg.clone().resolved().output_root();
    println!("{} finished: {} artifacts in {}", m.command, m.artifacts.len(), root.display());
    println!("config hash {}", m.config_hash);
    for (k, v) in &m.metrics {
        println!("{k} = {v}");
    }
    for n in &m.notes {
        println!("note: {n}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = build(cli.command).and_then(|cfg| match cfg {
        Some(cfg) => run(&cfg).map(|m| summarize(&cfg, &m)),
        None => Ok(()),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
