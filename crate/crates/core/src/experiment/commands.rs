use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::config::{load_dataset, DatasetSource, ExperimentConfig, ExperimentKind, GeneratorSource};
use super::manifest::{RunManifest, Timing};
use super::stats::spearman;
use super::svg::{emit_svg, emit_svg_panels, Bar, BarChart, LinePlot, Plot, Series};
use super::{write_file, ExpError, Result};
use crate::data::{randomize_labels, AugmentationPolicy, LabeledDataset};
use crate::dissection::{dissect_pair, patterns_to_csv, write_pnm, ClusterGenerator, DissectError, DissectionResult, LatentGenerator, PatternResult};
use crate::models::{encode_checkpoint, load_checkpoint, Network, PresetParams, Role};
use crate::tensor::OptimizerKind;
use crate::training::{parse_training_csv, train_classifier, train_gan, GanConfig, GanReport, TrainConfig, TrainingReport};

pub const SEED_STUDY_CSV_HEADER: &str = "seed,epoch,train_acc,g_bar";
pub const SWEEP_CSV_HEADER: &str = "noise_level,dist_mean,dist_variance";

fn pool(cfg: &ExperimentConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| ExpError::Runtime(format!("cannot start worker pool: {e}")))
}

fn run_dir(level: f64, seed: u64) -> String {
    format!("noise{level:.2}_seed{seed}")
}

/// Shared setup: validated config, output root and a fresh manifest.
fn begin(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<(ExperimentConfig, PathBuf, RunManifest)> {
    let mut cfg = cfg.clone().resolved();
    cfg.kind = kind;
    cfg.validate()?;
    let root = cfg.output_root();
    std::fs::create_dir_all(&root).map_err(|e| ExpError::io(&root, e))?;
    let manifest = RunManifest::new(kind.name(), cfg.config_hash());
    Ok((cfg, root, manifest))
}

fn finish(cfg: &ExperimentConfig, root: &Path, mut manifest: RunManifest, start: Instant) -> Result<RunManifest> {
    let text = cfg.to_text();
    manifest.write_artifact(root, "config.toml", "config", text.as_bytes())?;
    manifest.timings.push(Timing {
        name: "total".into(),
        seconds: start.elapsed().as_secs_f64(),
    });
    manifest.save(root)?;
    Ok(manifest)
}

fn train_config(cfg: &ExperimentConfig, data: &LabeledDataset, seed: u64) -> Result<TrainConfig> {
    let mut p = PresetParams::new(data.sample_shape(), data.num_classes(), seed);
    p.hidden = cfg.model.hidden;
    let desc = cfg.model.preset.descriptor(&p)?;
    if desc.role != Role::Classifier {
        return Err(ExpError::Config(format!("{} is not a classifier preset", cfg.model.preset)));
    }
    let t = &cfg.training;
    let mut tc = TrainConfig::new(desc, t.epochs);
    tc.batch_size = t.batch_size;
    tc.optimizer = OptimizerKind::SgdMomentum {
        lr: t.lr,
        momentum: t.momentum,
    };
    tc.weight_decay = t.weight_decay;
    tc.seed = seed;
    tc.track_input_gradients = t.track_input_gradients;
    if t.augment {
        if !data.is_image() {
            return Err(ExpError::Config("augmentation needs image data".into()));
        }
        let s = data.sample_shape();
        tc.augmentation = AugmentationPolicy {
            crop_size: (s[1], s[2]),
            ..AugmentationPolicy::cifar_standard()
        };
    }
    Ok(tc)
}

struct TrainedRun {
    level: f64,
    seed: u64,
    net: Network,
    report: TrainingReport,
    seconds: f64,
}

/// Trains one classifier per `(level, seed)`; labels at a level share
/// `noise_seed`, so runs at that level differ only in their own seed.
fn train_grid(cfg: &ExperimentConfig, train: &LabeledDataset, test: Option<&LabeledDataset>) -> Result<Vec<TrainedRun>> {
    let noisy: Vec<LabeledDataset> = cfg
        .noise_levels
        .iter()
        .map(|&p| randomize_labels(train, p, cfg.noise_seed))
        .collect::<std::result::Result<_, _>>()?;
    let jobs: Vec<(usize, u64)> = (0..noisy.len()).flat_map(|l| cfg.seeds.iter().map(move |&s| (l, s))).collect();
    pool(cfg)?.install(|| {
        jobs.par_iter()
            .map(|&(l, seed)| {
                let start = Instant::now();
                let tc = train_config(cfg, &noisy[l], seed)?;
                let (net, report) = train_classifier(&tc, &noisy[l], test)?;
                log::info!("trained {} in {:.1?}", run_dir(cfg.noise_levels[l], seed), start.elapsed());
                Ok(TrainedRun {
                    level: cfg.noise_levels[l],
                    seed,
                    net,
                    report,
                    seconds: start.elapsed().as_secs_f64(),
                })
            })
            .collect()
    })
}

fn curves_plot(report: &TrainingReport, title: &str) -> Vec<Plot> {
    let r = &report.records;
    let mut acc = vec![Series {
        name: "train".into(),
        points: r.iter().map(|e| (e.epoch as f64, e.train_accuracy)).collect(),
    }];
    if r.iter().all(|e| e.test_accuracy.is_some()) {
        acc.push(Series {
            name: "test".into(),
            points: r.iter().map(|e| (e.epoch as f64, e.test_accuracy.unwrap_or_default())).collect(),
        });
    }
    let mut plots = vec![Plot::Lines(LinePlot {
        title: format!("{title}: accuracy"),
        x_label: "epoch".into(),
        y_label: "accuracy (fraction)".into(),
        series: acc,
    })];
    if r.iter().all(|e| e.gradient_magnitude.is_some()) {
        plots.push(Plot::Lines(LinePlot {
            title: format!("{title}: input-gradient magnitude"),
            x_label: "epoch".into(),
            y_label: "mean input gradient (L1)".into(),
            series: vec![Series {
                name: "g_bar".into(),
                points: r.iter().map(|e| (e.epoch as f64, e.gradient_magnitude.unwrap_or_default())).collect(),
            }],
        }));
    }
    plots
}

fn write_run(manifest: &mut RunManifest, root: &Path, dir: &str, run: &TrainedRun) -> Result<()> {
    manifest.write_artifact(root, format!("{dir}/model.nnck"), "checkpoint", &encode_checkpoint(&run.net))?;
    manifest.write_artifact(root, format!("{dir}/report.csv"), "report", run.report.to_csv().as_bytes())?;
    manifest.write_artifact(root, format!("{dir}/train_config.toml"), "config-echo", run.report.config_echo().as_bytes())?;
    let svg = emit_svg_panels(&curves_plot(&run.report, dir))?;
    manifest.write_artifact(root, format!("{dir}/curves.svg"), "figure", svg.as_bytes())?;
    manifest.timings.push(Timing {
        name: dir.to_string(),
        seconds: run.seconds,
    });
    Ok(())
}

/// One classifier per (seed, noise level): checkpoint, report CSV, config
/// echo and accuracy/`Ḡ` curves.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let (cfg, root, mut manifest) = begin(cfg, ExperimentKind::Train)?;
    let (train, test) = load_dataset(&cfg.dataset)?;
    let runs = train_grid(&cfg, &train, test.as_ref())?;
    for run in &runs {
        let dir = run_dir(run.level, run.seed);
        write_run(&mut manifest, &root, &dir, run)?;
        let last = run.report.final_record();
        manifest.metrics.insert(format!("{dir}.train_acc"), last.train_accuracy);
        if let Some(t) = last.test_accuracy {
            manifest.metrics.insert(format!("{dir}.test_acc"), t);
        }
    }
    finish(&cfg, &root, manifest, start)
}

fn gan_plot(report: &GanReport, title: &str) -> Vec<Plot> {
    let e = &report.epochs;
    let pts = |f: fn(&crate::training::GanEpoch) -> f64| e.iter().map(|r| (r.epoch as f64, f(r))).collect();
    vec![
        Plot::Lines(LinePlot {
            title: format!("{title}: losses"),
            x_label: "epoch".into(),
            y_label: "mean loss (nats)".into(),
            series: vec![
                Series { name: "discriminator".into(), points: pts(|r| r.d_loss) },
                Series { name: "generator".into(), points: pts(|r| r.g_loss) },
            ],
        }),
        Plot::Lines(LinePlot {
            title: format!("{title}: held-out discriminator accuracy"),
            x_label: "epoch".into(),
            y_label: "accuracy (fraction)".into(),
            series: vec![Series { name: "held-out".into(), points: pts(|r| r.heldout_accuracy) }],
        }),
    ]
}

/// One generator/discriminator pair per seed.
pub fn cmd_train_gan(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let (cfg, root, mut manifest) = begin(cfg, ExperimentKind::TrainGan)?;
    let (train, test) = load_dataset(&cfg.dataset)?;
    let held_out = test.unwrap_or_else(|| train.clone());
    let g = &cfg.gan;
    let results: Vec<(u64, Network, Network, GanReport, f64)> = pool(&cfg)?.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| {
                let t = Instant::now();
                let mut p = PresetParams::new(train.sample_shape(), train.num_classes(), seed);
                p.latent_dim = g.latent_dim;
                p.hidden = g.hidden;
                let mut gc = GanConfig::new(g.generator.descriptor(&p)?, g.discriminator.descriptor(&p)?, g.epochs);
                gc.batch_size = g.batch_size;
                gc.optimizer = OptimizerKind::Adam {
                    lr: g.lr,
                    beta1: g.beta1,
                    beta2: g.beta2,
                    eps: 1e-8,
                };
                gc.seed = seed;
                let (gen, disc, report) = train_gan(&gc, &train, &held_out)?;
                Ok((seed, gen, disc, report, t.elapsed().as_secs_f64()))
            })
            .collect::<Result<_>>()
    })?;
    for (seed, gen, disc, report, seconds) in results {
        let dir = format!("seed{seed}");
        manifest.write_artifact(&root, format!("{dir}/generator.nnck"), "checkpoint", &encode_checkpoint(&gen))?;
        manifest.write_artifact(&root, format!("{dir}/discriminator.nnck"), "checkpoint", &encode_checkpoint(&disc))?;
        manifest.write_artifact(&root, format!("{dir}/gan.csv"), "gan-report", report.to_csv().as_bytes())?;
        let svg = emit_svg_panels(&gan_plot(&report, &dir))?;
        manifest.write_artifact(&root, format!("{dir}/gan.svg"), "figure", svg.as_bytes())?;
        if let Some(last) = report.epochs.last() {
            manifest.metrics.insert(format!("{dir}.heldout_acc"), last.heldout_accuracy);
        }
        manifest.timings.push(Timing { name: dir, seconds });
    }
    finish(&cfg, &root, manifest, start)
}

fn generator_for(cfg: &ExperimentConfig) -> Result<Box<dyn LatentGenerator>> {
    match (&cfg.dissection.generator, &cfg.dataset) {
        (GeneratorSource::Cluster, DatasetSource::Synth(s)) => Ok(Box::new(ClusterGenerator::for_spec(&s.spec())?)),
        (GeneratorSource::Cluster, _) => Err(ExpError::Config("the cluster generator needs a synth dataset".into())),
        (GeneratorSource::Checkpoint(path), _) => {
            let net = load_checkpoint(path)?;
            if net.role() != Role::Generator {
                return Err(ExpError::Config(format!("{} holds a {}, not a generator", path.display(), net.role())));
            }
            Ok(Box::new(net))
        }
    }
}

fn named_dissect(reference: (&Network, &str), probe: (&Network, &str), gen: &dyn LatentGenerator, cfg: &ExperimentConfig) -> Result<DissectionResult> {
    dissect_pair(reference.0, probe.0, gen, &cfg.dissection.dissect_config()).map_err(|e| match e {
        DissectError::Incompatible(msg) => ExpError::Runtime(format!("{} vs {}: {msg}", reference.1, probe.1)),
        other => other.into(),
    })
}

fn export_patterns(manifest: &mut RunManifest, root: &Path, patterns: &[PatternResult], per_class: usize) -> Result<()> {
    let picked: Vec<PatternResult> = patterns
        .chunk_by(|a, b| a.class == b.class)
        .flat_map(|c| c.iter().take(per_class).cloned())
        .collect();
    if picked.is_empty() {
        return Ok(());
    }
    if picked[0].x_star.rank() == 3 {
        for p in &picked {
            let ext = if p.x_star.shape()[0] == 1 { "pgm" } else { "ppm" };
            let rel = PathBuf::from(format!("patterns/class{}_seed{}.{ext}", p.class, p.seed));
            let full = root.join(&rel);
            if let Some(dir) = full.parent() {
                std::fs::create_dir_all(dir).map_err(|e| ExpError::io(dir, e))?;
            }
            write_pnm(&full, &p.x_star)?;
            let bytes = std::fs::read(&full).map_err(|e| ExpError::io(&full, e))?;
            manifest.record(rel, "pattern", &bytes);
        }
    } else {
        manifest.write_artifact(root, "patterns.csv", "pattern", patterns_to_csv(&picked).as_bytes())?;
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Dissects the reference against every probe in both directions.
pub fn cmd_dissect(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let (cfg, root, mut manifest) = begin(cfg, ExperimentKind::Dissect)?;
    let ref_path = cfg.dissection.reference.clone().expect("validated");
    let reference = load_checkpoint(&ref_path)?;
    let ref_name = ref_path.display().to_string();
    let probes: Vec<(PathBuf, Network)> = cfg
        .dissection
        .probes
        .iter()
        .map(|p| Ok((p.clone(), load_checkpoint(p)?)))
        .collect::<Result<_>>()?;
    let gen = generator_for(&cfg)?;
    let results: Vec<(DissectionResult, DissectionResult)> = pool(&cfg)?.install(|| {
        probes
            .iter()
            .map(|(path, probe)| {
                let name = path.display().to_string();
                let fwd = named_dissect((&reference, &ref_name), (probe, &name), gen.as_ref(), &cfg)?;
                let rev = named_dissect((probe, &name), (&reference, &ref_name), gen.as_ref(), &cfg)?;
                Ok((fwd, rev))
            })
            .collect::<Result<_>>()
    })?;
    let mut summary = String::from("probe,direction,dist_mean,dist_variance\n");
    let (mut fwd_bars, mut rev_bars) = (Vec::new(), Vec::new());
    for (i, ((path, _), (fwd, rev))) in probes.iter().zip(&results).enumerate() {
        manifest.write_artifact(&root, format!("pair{i}_forward.csv"), "dissection", fwd.to_csv().as_bytes())?;
        manifest.write_artifact(&root, format!("pair{i}_reverse.csv"), "dissection", rev.to_csv().as_bytes())?;
        let label = stem(path);
        for (dir, r, bars) in [("forward", fwd, &mut fwd_bars), ("reverse", rev, &mut rev_bars)] {
            summary.push_str(&format!("{},{dir},{},{}\n", path.display(), r.dist_mean, r.dist_variance));
            bars.push(Bar {
                label: label.clone(),
                value: r.dist_mean,
                whisker: r.dist_variance,
            });
        }
        manifest.metrics.insert(format!("pair{i}.forward.dist_mean"), fwd.dist_mean);
        manifest.metrics.insert(format!("pair{i}.reverse.dist_mean"), rev.dist_mean);
    }
    manifest.write_artifact(&root, "summary.csv", "dissection-summary", summary.as_bytes())?;
    let chart = |title: String, bars| {
        Plot::Bars(BarChart {
            title,
            y_label: "dist_mean (nats), whisker ± variance".into(),
            bars,
        })
    };
    let svg = emit_svg_panels(&[
        chart(format!("patterns from {}", stem(&ref_path)), fwd_bars),
        chart("patterns from each probe".into(), rev_bars),
    ])?;
    manifest.write_artifact(&root, "dissection.svg", "figure", svg.as_bytes())?;
    if let Some((fwd, _)) = results.first() {
        export_patterns(&mut manifest, &root, &fwd.patterns, cfg.dissection.export_per_class)?;
    }
    manifest.notes.push("forward: patterns maximized on the reference, KL(reference ‖ probe); reverse swaps the roles".into());
    finish(&cfg, &root, manifest, start)
}

/// Same data, one run per seed; trajectories and epochs-to-fit spread.
pub fn cmd_seed_study(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let (cfg, root, mut manifest) = begin(cfg, ExperimentKind::SeedStudy)?;
    let (train, test) = load_dataset(&cfg.dataset)?;
    let runs = train_grid(&cfg, &train, test.as_ref())?;
    let threshold = cfg.seed_study.fit_threshold;
    let mut csv = format!("{SEED_STUDY_CSV_HEADER}\n");
    let mut fit_csv = String::from("seed,epochs_to_fit\n");
    let (mut acc, mut gbar, mut fits) = (Vec::new(), Vec::new(), Vec::new());
    for run in &runs {
        for r in &run.report.records {
            let g = r.gradient_magnitude.map(|g| g.to_string()).unwrap_or_default();
            csv.push_str(&format!("{},{},{},{g}\n", run.seed, r.epoch, r.train_accuracy));
        }
        let fit = run.report.epochs_to_fit(threshold);
        fit_csv.push_str(&format!("{},{}\n", run.seed, fit.map(|e| e.to_string()).unwrap_or_default()));
        fits.push(fit);
        let name = format!("seed {}", run.seed);
        acc.push(Series {
            name: name.clone(),
            points: run.report.records.iter().map(|r| (r.epoch as f64, r.train_accuracy)).collect(),
        });
        if run.report.records.iter().all(|r| r.gradient_magnitude.is_some()) {
            gbar.push(Series {
                name,
                points: run.report.records.iter().map(|r| (r.epoch as f64, r.gradient_magnitude.unwrap_or_default())).collect(),
            });
        }
        let dir = format!("seed{}", run.seed);
        manifest.write_artifact(&root, format!("{dir}/model.nnck"), "checkpoint", &encode_checkpoint(&run.net))?;
        manifest.timings.push(Timing {
            name: dir,
            seconds: run.seconds,
        });
    }
    manifest.write_artifact(&root, "seed_study.csv", "seed-study", csv.as_bytes())?;
    manifest.write_artifact(&root, "epochs_to_fit.csv", "seed-study", fit_csv.as_bytes())?;
    let mut plots = vec![Plot::Lines(LinePlot {
        title: format!("train accuracy, noise level {}", cfg.noise_levels[0]),
        x_label: "epoch".into(),
        y_label: "train accuracy (fraction)".into(),
        series: acc,
    })];
    if !gbar.is_empty() {
        plots.push(Plot::Lines(LinePlot {
            title: "input-gradient magnitude".into(),
            x_label: "epoch".into(),
            y_label: "mean input gradient (L1)".into(),
            series: gbar,
        }));
    }
    manifest.write_artifact(&root, "seed_study.svg", "figure", emit_svg_panels(&plots)?.as_bytes())?;
    let fitted: Vec<usize> = fits.iter().flatten().copied().collect();
    if fitted.len() == fits.len() {
        let spread = fitted.iter().max().unwrap_or(&0) - fitted.iter().min().unwrap_or(&0);
        manifest.metrics.insert("epochs_to_fit_spread".into(), spread as f64);
    } else {
        manifest.notes.push(format!(
            "{} of {} runs never exceeded train accuracy {threshold}; spread not reported",
            fits.len() - fitted.len(),
            fits.len()
        ));
    }
    finish(&cfg, &root, manifest, start)
}

/// Per noise level: differently seeded models on the same noisy labels,
/// dissected against the first seed's model.
pub fn cmd_noise_sweep(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let (cfg, root, mut manifest) = begin(cfg, ExperimentKind::NoiseSweep)?;
    let (train, test) = load_dataset(&cfg.dataset)?;
    let gen = generator_for(&cfg)?;
    let runs = train_grid(&cfg, &train, test.as_ref())?;
    let per_level = cfg.seeds.len();
    let mut csv = format!("{SWEEP_CSV_HEADER}\n");
    let (mut levels, mut means) = (Vec::new(), Vec::new());
    for group in runs.chunks(per_level) {
        let level = group[0].level;
        let (reference, probes) = group.split_first().expect("at least two seeds");
        let ref_name = run_dir(level, reference.seed);
        let results: Vec<DissectionResult> = pool(&cfg)?.install(|| {
            probes
                .iter()
                .map(|p| named_dissect((&reference.net, &ref_name), (&p.net, &run_dir(level, p.seed)), gen.as_ref(), &cfg))
                .collect::<Result<_>>()
        })?;
        for run in group {
            let dir = run_dir(run.level, run.seed);
            write_run(&mut manifest, &root, &dir, run)?;
        }
        for (p, r) in probes.iter().zip(&results) {
            let name = format!("{ref_name}_vs_seed{}.csv", p.seed);
            manifest.write_artifact(&root, format!("dissections/{name}"), "dissection", r.to_csv().as_bytes())?;
        }
        let mean = results.iter().map(|r| r.dist_mean).sum::<f64>() / results.len() as f64;
        let terms: Vec<f64> = results.iter().flat_map(|r| r.terms.iter().map(|t| t.kl)).collect();
        let overall = terms.iter().sum::<f64>() / terms.len() as f64;
        let variance = terms.iter().map(|k| (k - overall).powi(2)).sum::<f64>() / terms.len() as f64;
        csv.push_str(&format!("{level},{mean},{variance}\n"));
        levels.push(level);
        means.push(mean);
    }
    manifest.write_artifact(&root, "sweep.csv", "sweep", csv.as_bytes())?;
    let svg = emit_svg(&Plot::Lines(LinePlot {
        title: "dissimilarity across label noise".into(),
        x_label: "noise level (fraction of labels randomized)".into(),
        y_label: "dist_mean (nats)".into(),
        series: vec![Series {
            name: "dist_mean".into(),
            points: levels.iter().copied().zip(means.iter().copied()).collect(),
        }],
    }))?;
    manifest.write_artifact(&root, "sweep.svg", "figure", svg.as_bytes())?;
    if let Some(rho) = spearman(&levels, &means) {
        manifest.metrics.insert("spearman_noise_vs_dist_mean".into(), rho);
    }
    manifest.notes.push(format!(
        "all runs at a noise level share label noise seed {}; only init/batch seeds differ",
        cfg.noise_seed
    ));
    manifest.notes.push("dist_mean is a dissimilarity: lower means more similar".into());
    finish(&cfg, &root, manifest, start)
}

/// Verifies a run directory against its manifest and summarizes it. With
/// `overlay`, also draws every training report in the run on one figure.
pub fn cmd_report(dir: &Path, overlay: Option<&Path>) -> Result<String> {
    let manifest = RunManifest::load(dir)?;
    manifest.verify(dir)?;
    let mut out = format!(
        "command: {}\nconfig hash: {}\ntool: {}\nartifacts: {} verified\n",
        manifest.command,
        manifest.config_hash,
        manifest.tool_version,
        manifest.artifacts.len()
    );
    for (k, v) in &manifest.metrics {
        out.push_str(&format!("{k} = {v}\n"));
    }
    for n in &manifest.notes {
        out.push_str(&format!("note: {n}\n"));
    }
    if let Some(svg_path) = overlay {
        let mut acc = Vec::new();
        for a in manifest.artifacts.iter().filter(|a| a.kind == "report") {
            let path = dir.join(&a.path);
            let text = std::fs::read_to_string(&path).map_err(|e| ExpError::io(&path, e))?;
            let records = parse_training_csv(&text)?;
            acc.push(Series {
                name: a.path.parent().map_or_else(String::new, |p| p.display().to_string()),
                points: records.iter().map(|r| (r.epoch as f64, r.train_accuracy)).collect(),
            });
        }
        if acc.is_empty() {
            return Err(ExpError::Runtime("run has no training reports to overlay".into()));
        }
        let svg = emit_svg(&Plot::Lines(LinePlot {
            title: format!("{} runs", manifest.command),
            x_label: "epoch".into(),
            y_label: "train accuracy (fraction)".into(),
            series: acc,
        }))?;
        write_file(svg_path, svg)?;
        out.push_str(&format!("overlay written to {}\n", svg_path.display()));
    }
    Ok(out)
}

/// Dispatches on `cfg.kind`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    match cfg.kind {
        ExperimentKind::Train => cmd_train(cfg),
        ExperimentKind::TrainGan => cmd_train_gan(cfg),
        ExperimentKind::Dissect => cmd_dissect(cfg),
        ExperimentKind::SeedStudy => cmd_seed_study(cfg),
        ExperimentKind::NoiseSweep => cmd_noise_sweep(cfg),
    }
}
