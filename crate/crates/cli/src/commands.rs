use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use qtrack_core::hitgraph::{
    discover_events, load_event, process_event, read_subgraphs, write_subgraph, CutMode,
    EventFiles, EventSummary, PtMode, SelectionCuts, SubGraph,
};
use qtrack_core::synthgen::{gen_event, GeneratorConfig};
use qtrack_core::training::{
    self, evaluate_metrics, fit_scaler, predict_edges, split_dataset, Metrics, TrainConfig,
};
use qtrack_core::ttn::{init_params, LAYOUT_VERSION};
use qtrack_core::{Error as CoreError, ShotConfig, TtnModel};

use crate::manifest::RunManifest;
use crate::settings::Settings;
use crate::{Common, UsageError};

pub const MODEL_FILE: &str = "model.txt";

/// Bookkeeping shared by all subcommands: settings, timing and the
/// manifest written at the end.
struct Run {
    command: &'static str,
    settings: Settings,
    started: Instant,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl Run {
    fn start(command: &'static str, common: &Common) -> Result<Self> {
        let settings = match (&common.config, &common.manifest) {
            (Some(path), _) => Settings::from_file(path)?,
            (None, Some(path)) => {
                let m = RunManifest::read(path)?;
                if m.command != command {
                    bail!(UsageError(format!(
                        "{} was written by `{}`, not `{command}`",
                        path.display(),
                        m.command
                    )));
                }
                Settings::from_map(m.config, path.display().to_string())
            }
            (None, None) => Settings::default(),
        };
        if let Some(jobs) = common.jobs {
            if jobs == 0 {
                bail!(UsageError("--jobs must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .context("configuring the worker pool")?;
        }
        Ok(Self {
            command,
            settings,
            started: Instant::now(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn out_dir(&self, flag: &Option<String>) -> Result<PathBuf> {
        let out = PathBuf::from(self.settings.require::<String>("out", flag.clone())?);
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok(out)
    }

    fn seed(&mut self, name: &str, flag: Option<u64>, default: u64) -> Result<u64> {
        let key = format!("{name}_seed");
        let v = self.settings.get(&key, flag, default)?;
        self.seeds.insert(name.into(), v);
        Ok(v)
    }

    fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    fn finish(self, out: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            layout: LAYOUT_VERSION.into(),
            config: self.settings.finish()?,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            jobs: rayon::current_num_threads(),
            duration_secs: self.started.elapsed().as_secs_f64(),
        };
        let path = manifest.write(out)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    common: Common,
    /// Number of events
    #[arg(long)]
    events: Option<u64>,
    /// Tracks per event
    #[arg(long)]
    tracks: Option<usize>,
    /// Noise hits per event
    #[arg(long)]
    noise: Option<usize>,
    /// Lower edge of the pT range, GeV
    #[arg(long)]
    pt_min: Option<f64>,
    /// Upper edge of the pT range, GeV
    #[arg(long)]
    pt_max: Option<f64>,
    /// Solenoid field, T
    #[arg(long)]
    b_field: Option<f64>,
    /// Vertex z spread, mm
    #[arg(long)]
    z0_spread: Option<f64>,
    /// Largest track |eta|
    #[arg(long)]
    eta_max: Option<f64>,
    /// Noise hits fill |z| below this, mm
    #[arg(long)]
    noise_z_max: Option<f64>,
    /// Gaussian hit smearing, mm
    #[arg(long)]
    smear: Option<f64>,
    /// Generator seed
    #[arg(long)]
    seed: Option<u64>,
}

pub fn gen(a: GenArgs) -> Result<()> {
    let mut run = Run::start("gen", &a.common)?;
    let out = run.out_dir(&a.common.out)?;
    let s = &run.settings;
    let d = GeneratorConfig::default();
    let events = s.get("events", a.events, 1)?;
    if events == 0 {
        bail!(UsageError("--events must be at least 1".into()));
    }
    let mut cfg = GeneratorConfig {
        n_tracks: s.get("tracks", a.tracks, d.n_tracks)?,
        pt_range: (
            s.get("pt_min", a.pt_min, d.pt_range.0)?,
            s.get("pt_max", a.pt_max, d.pt_range.1)?,
        ),
        noise_hits: s.get("noise", a.noise, d.noise_hits)?,
        b_field: s.get("b_field", a.b_field, d.b_field)?,
        z0_spread: s.get("z0_spread", a.z0_spread, d.z0_spread)?,
        eta_max: s.get("eta_max", a.eta_max, d.eta_max)?,
        noise_z_max: s.get("noise_z_max", a.noise_z_max, d.noise_z_max)?,
        smear: s.get("smear", a.smear, d.smear)?,
        ..d
    };
    cfg.seed = run.seed("gen", a.seed, 0)?;
    cfg.validate()?;

    let written: Vec<EventFiles> = (0..events)
        .into_par_iter()
        .map(|i| gen_event(&cfg, i)?.write_csv(&out, &format!("{i:09}")))
        .collect::<Result<_, CoreError>>()?;
    for f in &written {
        for p in [&f.hits, &f.particles, &f.truth] {
            run.output(p);
        }
    }
    println!("generated {events} event(s) in {}", out.display());
    run.finish(&out)
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    common: Common,
    /// Directory holding event<ID>-{hits,particles,truth}.csv
    #[arg(long)]
    data: Option<String>,
    /// Truth pT threshold for true edges, GeV
    #[arg(long)]
    pt_min: Option<f64>,
    /// Azimuth cut: rad/mm in slope mode, rad in raw mode
    #[arg(long)]
    dphi_max: Option<f64>,
    /// Largest |z0|, mm
    #[arg(long)]
    z0_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eta_min: Option<f64>,
    #[arg(long)]
    eta_max: Option<f64>,
    /// slope or raw
    #[arg(long)]
    cut_mode: Option<CutMode>,
    /// label or filter
    #[arg(long)]
    pt_mode: Option<PtMode>,
    /// Largest layer step an edge may span
    #[arg(long)]
    layer_gap: Option<usize>,
}

fn summary_line(id: &str, s: &EventSummary) -> String {
    let ratio = if s.fake_edges > 0 {
        format!("{:.3}", s.true_edges as f64 / s.fake_edges as f64)
    } else {
        "n/a".into()
    };
    format!(
        "event {id}: {}/{} hits kept, {} doublets ({} true, {} fake, true/fake {ratio}), {} cross-sector dropped",
        s.hits_kept, s.hits_total, s.doublets, s.true_edges, s.fake_edges, s.cross_sector
    )
}

pub fn preprocess(a: PreprocessArgs) -> Result<()> {
    let mut run = Run::start("preprocess", &a.common)?;
    let out = run.out_dir(&a.common.out)?;
    let s = &run.settings;
    let d = SelectionCuts::default();
    let data = PathBuf::from(s.require::<String>("data", a.data.clone())?);
    let cuts = SelectionCuts {
        pt_min: s.get("pt_min", a.pt_min, d.pt_min)?,
        dphi_max: s.get("dphi_max", a.dphi_max, d.dphi_max)?,
        z0_max: s.get("z0_max", a.z0_max, d.z0_max)?,
        eta_range: (
            s.get("eta_min", a.eta_min, d.eta_range.0)?,
            s.get("eta_max", a.eta_max, d.eta_range.1)?,
        ),
        cut_mode: s.get("cut_mode", a.cut_mode, d.cut_mode)?,
        pt_mode: s.get("pt_mode", a.pt_mode, d.pt_mode)?,
        layer_gap: s.get("layer_gap", a.layer_gap, d.layer_gap)?,
    };
    cuts.validate()?;

    let ids = discover_events(&data)?;
    if ids.is_empty() {
        return Err(
            CoreError::Data(format!("no event<ID>-hits.csv files in {}", data.display())).into(),
        );
    }
    let processed = ids
        .par_iter()
        .map(|id| {
            let event = load_event(&EventFiles::in_dir(&data, id))?;
            let done = process_event(id, &event, &cuts);
            for g in &done.subgraphs {
                write_subgraph(g, &out.join(g.name()))?;
            }
            Ok(done.summary)
        })
        .collect::<Result<Vec<_>, CoreError>>()?;

    let mut csv = String::from(
        "event,hits_total,hits_kept,doublets,true_edges,fake_edges,zero_dr,missing_truth,cross_sector\n",
    );
    for (id, s) in ids.iter().zip(&processed) {
        if s.hits_kept == 0 {
            eprintln!("warning: event {id} has no barrel hits; its 16 subgraphs are empty");
        }
        println!("{}", summary_line(id, s));
        writeln!(
            csv,
            "{id},{},{},{},{},{},{},{},{}",
            s.hits_total,
            s.hits_kept,
            s.doublets,
            s.true_edges,
            s.fake_edges,
            s.zero_dr,
            s.missing_truth,
            s.cross_sector
        )
        .unwrap();
        let f = EventFiles::in_dir(&data, id);
        run.inputs
            .extend([&f.hits, &f.particles, &f.truth].map(|p| p.display().to_string()));
    }
    let summary = out.join("preprocess-summary.csv");
    write_text(&summary, &csv)?;
    run.output(&summary);
    println!(
        "{} event(s) -> {} subgraphs in {}",
        ids.len(),
        ids.len() * qtrack_core::hitgraph::SECTORS_PER_EVENT,
        out.display()
    );
    run.finish(&out)
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Directory of preprocessed subgraphs
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    /// SGD learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Fraction of subgraphs used for training
    #[arg(long)]
    split_ratio: Option<f64>,
    /// Validation decision threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// Probability clamp inside the loss
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    init_seed: Option<u64>,
    #[arg(long)]
    shuffle_seed: Option<u64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn name_list(graphs: &[SubGraph]) -> String {
    graphs.iter().map(|g| g.name() + "\n").collect()
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut run = Run::start("train", &a.common)?;
    let out = run.out_dir(&a.common.out)?;
    let d = TrainConfig::default();
    let data = PathBuf::from(run.settings.require::<String>("data", a.data.clone())?);
    let s = &run.settings;
    let mut cfg = TrainConfig {
        epochs: s.get("epochs", a.epochs, d.epochs)?,
        learning_rate: s.get("lr", a.lr, d.learning_rate)?,
        split_ratio: s.get("split_ratio", a.split_ratio, d.split_ratio)?,
        threshold: s.get("threshold", a.threshold, d.threshold)?,
        eps: s.get("eps", a.eps, d.eps)?,
        ..d
    };
    let split_seed = run.seed("split", a.split_seed, 0)?;
    let init_seed = run.seed("init", a.init_seed, 0)?;
    cfg.seed = run.seed("shuffle", a.shuffle_seed, 0)?;
    cfg.validate()?;

    let graphs = read_subgraphs(&data)?;
    run.inputs.push(data.display().to_string());
    let (train_set, test_set) = split_dataset(&graphs, cfg.split_ratio, split_seed)?;
    let scaler = fit_scaler(&train_set)?;
    let init = init_params(init_seed);
    println!(
        "{} subgraphs: {} train, {} test",
        graphs.len(),
        train_set.len(),
        test_set.len()
    );
    let (params, history) = training::train(&train_set, &test_set, &cfg, &init, &scaler)?;
    println!("initial loss {}", fmt_opt(history.initial_loss));
    for e in &history.epochs {
        let m = e.validation;
        println!(
            "epoch {}: train loss {}, validation accuracy {} (majority {})",
            e.epoch,
            fmt_opt(e.train_loss),
            fmt_opt(m.and_then(|m| m.accuracy())),
            fmt_opt(m.and_then(|m| m.majority_baseline())),
        );
    }

    let model = TtnModel {
        scaler,
        params,
        seed: init_seed,
    };
    let model_path = out.join(MODEL_FILE);
    model.write(&model_path)?;
    history.write_csv(&out)?;
    let train_list = out.join("train-set.txt");
    let test_list = out.join("test-set.txt");
    write_text(&train_list, &name_list(&train_set))?;
    write_text(&test_list, &name_list(&test_set))?;
    for p in [
        model_path,
        out.join("updates.csv"),
        out.join("epochs.csv"),
        train_list,
        test_list,
    ] {
        run.output(&p);
    }
    run.finish(&out)
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Directory of preprocessed subgraphs
    #[arg(long)]
    data: Option<String>,
    /// Model file written by `train`
    #[arg(long)]
    model: Option<String>,
    /// Only use the subgraphs named in this file, one per line
    #[arg(long)]
    subset: Option<String>,
    /// Decision threshold
    #[arg(long)]
    threshold: Option<f64>,
    /// Estimate probabilities from this many shots instead of exactly
    #[arg(long)]
    shots: Option<u32>,
    #[arg(long)]
    shot_seed: Option<u64>,
}

struct Scored {
    graphs: Vec<SubGraph>,
    model: TtnModel,
    shots: Option<ShotConfig>,
    threshold: f64,
}

fn load_scored(run: &mut Run, a: &EvalArgs) -> Result<Scored> {
    let s = &run.settings;
    let data = PathBuf::from(s.require::<String>("data", a.data.clone())?);
    let model_path = PathBuf::from(s.require::<String>("model", a.model.clone())?);
    let subset = s.get_opt::<String>("subset", a.subset.clone())?;
    let threshold = s.get("threshold", a.threshold, TrainConfig::default().threshold)?;
    if !(threshold > 0.0 && threshold < 1.0) {
        bail!(UsageError(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let n_shots = s.get_opt::<u32>("shots", a.shots)?;
    let shot_seed = run.seed("shots", a.shot_seed, 0)?;
    let shots = n_shots.map(|n| ShotConfig::new(n, shot_seed)).transpose()?;

    let model = TtnModel::read(&model_path)?;
    let mut graphs = read_subgraphs(&data)?;
    run.inputs
        .extend([data.display().to_string(), model_path.display().to_string()]);
    if let Some(list) = subset {
        let list = PathBuf::from(list);
        let text = fs::read_to_string(&list)
            .map_err(|e| CoreError::Data(format!("cannot read subset {}: {e}", list.display())))?;
        let wanted: HashSet<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        graphs.retain(|g| wanted.contains(g.name().as_str()));
        if graphs.len() != wanted.len() {
            return Err(CoreError::Data(format!(
                "{}: {} subgraph(s) listed but {} found in {}",
                list.display(),
                wanted.len(),
                graphs.len(),
                data.display()
            ))
            .into());
        }
        run.inputs.push(list.display().to_string());
    }
    Ok(Scored {
        graphs,
        model,
        shots,
        threshold,
    })
}

fn report_text(m: &Metrics, sc: &Scored) -> String {
    let mode = match &sc.shots {
        None => "analytic".to_string(),
        Some(c) => format!("{} shots, seed {}", c.n_shots, c.seed),
    };
    format!(
        "subgraphs {}\nedges {}\nthreshold {}\nreadout {mode}\ntp {}\nfp {}\ntn {}\nfn {}\n\
         purity {}\nefficiency {}\naccuracy {}\nmajority_baseline {}\n",
        sc.graphs.len(),
        m.total(),
        sc.threshold,
        m.tp,
        m.fp,
        m.tn,
        m.fn_,
        fmt_opt(m.purity()),
        fmt_opt(m.efficiency()),
        fmt_opt(m.accuracy()),
        fmt_opt(m.majority_baseline()),
    )
}

fn report_csv(m: &Metrics) -> String {
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "edges,tp,fp,tn,fn,purity,efficiency,accuracy,majority_baseline\n{},{},{},{},{},{},{},{},{}\n",
        m.total(),
        m.tp,
        m.fp,
        m.tn,
        m.fn_,
        cell(m.purity()),
        cell(m.efficiency()),
        cell(m.accuracy()),
        cell(m.majority_baseline()),
    )
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let mut run = Run::start("eval", &a.common)?;
    let out = run.out_dir(&a.common.out)?;
    let sc = load_scored(&mut run, &a)?;
    let m = evaluate_metrics(
        &sc.graphs,
        &sc.model.params,
        &sc.model.scaler,
        sc.threshold,
        sc.shots.as_ref(),
    )?;
    let text = report_text(&m, &sc);
    print!("{text}");
    let txt = out.join("metrics.txt");
    let csv = out.join("metrics.csv");
    write_text(&txt, &text)?;
    write_text(&csv, &report_csv(&m))?;
    run.output(&txt);
    run.output(&csv);
    run.finish(&out)
}

pub fn predict(a: EvalArgs) -> Result<()> {
    let mut run = Run::start("predict", &a.common)?;
    let out = run.out_dir(&a.common.out)?;
    let sc = load_scored(&mut run, &a)?;
    let probs = predict_edges(
        &sc.graphs,
        &sc.model.params,
        &sc.model.scaler,
        sc.shots.as_ref(),
    );
    let mut csv = String::from("subgraph,src,dst,label,probability,predicted\n");
    let edges = sc
        .graphs
        .iter()
        .flat_map(|g| g.edges.iter().map(move |e| (g.name(), e)));
    for ((name, e), p) in edges.zip(&probs) {
        writeln!(
            csv,
            "{name},{},{},{},{p},{}",
            e.src,
            e.dst,
            u8::from(e.label),
            u8::from(*p >= sc.threshold)
        )
        .unwrap();
    }
    let path = out.join("predictions.csv");
    write_text(&path, &csv)?;
    run.output(&path);
    println!(
        "{} edge predictions written to {}",
        probs.len(),
        path.display()
    );
    run.finish(&out)
}
