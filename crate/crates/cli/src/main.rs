use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use medgnn::harness::{
    self, aggregate, bench_activation_forward, fmt_f64, gen_source_localization, gradcheck_trial,
    invariance_trial, load_edge_list, load_signals, run_trial_with, save_edge_list, save_signals,
    ExperimentConfig, GraphFamily, SplitSizes,
};
use medgnn::model::{parse_checkpoint, Checkpoint, Target};
use medgnn::optim::{evaluate, Sample};
use medgnn::signal::GraphSignal;
use medgnn::ActivationKind;

#[derive(Parser)]
#[command(name = "medgnn", version, about = "GNNs with median and max graph-filter activations")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    /// Experiment configuration (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Restricts to one activation: relu, median or max.
    #[arg(long, global = true)]
    activation: Option<ActivationKind>,
    /// Overrides the neighborhood depth of median/max activations.
    #[arg(long, global = true)]
    hops: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated graph and source-localization splits.
    Gen {
        #[arg(long)]
        graph_only: bool,
    },
    /// Run the configured trials and write metrics and checkpoints.
    Train,
    /// Evaluate a checkpoint on a signal file.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        signals: PathBuf,
        /// Feature values per node in the signal file.
        #[arg(long, default_value_t = 1)]
        features: usize,
    },
    /// Finite-difference check of analytic gradients on random instances.
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 1e-6)]
        step: f64,
        #[arg(long, default_value_t = 20)]
        max_nodes: usize,
    },
    /// Random relabeling trials.
    Invariance {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 30)]
        max_nodes: usize,
    },
    /// Activation forward time at n and 2n nodes.
    Bench {
        #[arg(long, default_value_t = 2000)]
        nodes: usize,
        #[arg(long, default_value_t = 8)]
        degree: usize,
        #[arg(long, default_value_t = 8)]
        features: usize,
        #[arg(long, default_value_t = 21)]
        reps: usize,
    },
}

impl Shared {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(kind) = self.activation {
            cfg.activations = vec![kind];
        }
        if let Some(hops) = self.hops {
            cfg.hops = hops;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn kinds(&self) -> Vec<ActivationKind> {
        self.activation
            .map_or_else(|| ActivationKind::ALL.to_vec(), |k| vec![k])
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let s = &cli.shared;
    match &cli.command {
        Command::Gen { graph_only } => gen(s, *graph_only),
        Command::Train => train(s),
        Command::Eval {
            checkpoint,
            graph,
            signals,
            features,
        } => eval(s, checkpoint, graph, signals, *features),
        Command::Gradcheck {
            trials,
            step,
            max_nodes,
        } => gradcheck(s, *trials, *step, *max_nodes),
        Command::Invariance { trials, max_nodes } => invariance(s, *trials, *max_nodes),
        Command::Bench {
            nodes,
            degree,
            features,
            reps,
        } => bench(s, *nodes, *degree, *features, *reps),
    }
}

fn gen(s: &Shared, graph_only: bool) -> Result<()> {
    let cfg = s.experiment()?;
    let graph = match cfg.family {
        GraphFamily::Er => harness::gen_er_graph(cfg.n, cfg.p, cfg.seed)?,
        GraphFamily::Geometric => harness::gen_geometric_graph(cfg.n, cfg.radius, cfg.seed)?,
        GraphFamily::File => load_edge_list(cfg.graph_file.as_ref().expect("validated"))?,
    };
    let dir = s.out_dir()?;
    save_edge_list(dir.join("graph.txt"), &graph)?;
    if graph_only {
        return Ok(());
    }
    let sizes = SplitSizes {
        train: cfg.train_samples,
        val: cfg.val_samples,
        test: cfg.test_samples,
    };
    let data = gen_source_localization(&graph, cfg.classes, sizes, cfg.t_max, cfg.seed)?.data;
    for (name, split) in [("train", &data.train), ("val", &data.val), ("test", &data.test)] {
        save_signals(dir.join(format!("{name}.csv")), &labeled(split))?;
    }
    eprintln!(
        "wrote graph ({} nodes, mean degree {:.2}) and {} samples to {}",
        graph.n(),
        graph.mean_degree(),
        data.train.len() + data.val.len() + data.test.len(),
        dir.display()
    );
    Ok(())
}

fn labeled(split: &[Sample]) -> Vec<(GraphSignal, usize)> {
    split
        .iter()
        .map(|smp| match smp.target {
            Target::Class(c) => (smp.x.clone(), c),
            _ => unreachable!("source localization has class targets"),
        })
        .collect()
}

fn train(s: &Shared) -> Result<()> {
    let cfg = s.experiment()?;
    let dir = s.out_dir()?;
    let mut metrics = String::new();
    let mut trials = Vec::with_capacity(cfg.trials);
    for t in 0..cfg.trials {
        let start = Instant::now();
        let res = run_trial_with(&cfg, t, |kind, e| {
            eprintln!(
                "trial {t} {kind} epoch {:>3}: train {:.4} val {:.4} acc {:.3}",
                e.epoch, e.train_loss, e.val_loss, e.val_acc
            );
        })?;
        save_edge_list(dir.join(format!("trial{t}_graph.txt")), &res.graph)?;
        for r in &res.runs {
            let path = dir.join(format!("trial{t}_{}.ckpt", r.activation));
            fs::write(&path, Checkpoint::from_model(&r.model).to_text())?;
            eprintln!(
                "trial {t} {}: test accuracy {:.3} ({:.1}s)",
                r.activation,
                r.test.accuracy,
                start.elapsed().as_secs_f64()
            );
        }
        metrics.push_str(&res.to_json_lines(cfg.hops));
        trials.push(res);
    }
    for a in aggregate(&trials) {
        metrics.push_str(&a.to_json_line(cfg.hops));
    }
    fs::write(dir.join("metrics.jsonl"), metrics)?;
    Ok(())
}

fn eval(s: &Shared, checkpoint: &Path, graph: &Path, signals: &Path, features: usize) -> Result<()> {
    let text = fs::read_to_string(checkpoint)
        .with_context(|| format!("reading {}", checkpoint.display()))?;
    let graph = load_edge_list(graph)?;
    let model = parse_checkpoint(&text)?.into_model(&graph)?;
    let samples: Vec<Sample> = load_signals(signals, features)?
        .into_iter()
        .map(|(x, c)| Sample {
            x,
            target: Target::Class(c),
        })
        .collect();
    if samples.is_empty() {
        bail!("{} holds no samples", signals.display());
    }
    let m = evaluate(&model, &samples)?;
    s.emit(&format!(
        "{{\"samples\":{},\"loss\":{},\"accuracy\":{}}}\n",
        m.samples,
        fmt_f64(m.loss),
        fmt_f64(m.accuracy)
    ))
}

fn gradcheck(s: &Shared, trials: usize, step: f64, max_nodes: usize) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.unwrap_or(0));
    let mut out = String::new();
    for kind in s.kinds() {
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let r = gradcheck_trial(kind, max_nodes, step, &mut rng)?;
            worst = worst.max(r.max_rel_error);
        }
        out.push_str(&format!(
            "{{\"activation\":\"{kind}\",\"trials\":{trials},\"step\":{},\"max_rel_error\":{}}}\n",
            fmt_f64(step),
            fmt_f64(worst)
        ));
    }
    s.emit(&out)
}

fn invariance(s: &Shared, trials: usize, max_nodes: usize) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.unwrap_or(0));
    let mut out = String::new();
    for kind in s.kinds() {
        let (mut sel, mut e2e): (f64, f64) = (0.0, 0.0);
        for _ in 0..trials {
            let r = invariance_trial(kind, max_nodes, &mut rng)?;
            sel = sel.max(r.selection_deviation);
            e2e = e2e.max(r.end_to_end_deviation);
        }
        out.push_str(&format!(
            "{{\"activation\":\"{kind}\",\"trials\":{trials},\"selection_deviation\":{},\
             \"end_to_end_deviation\":{}}}\n",
            fmt_f64(sel),
            fmt_f64(e2e)
        ));
    }
    s.emit(&out)
}

fn bench(s: &Shared, nodes: usize, degree: usize, features: usize, reps: usize) -> Result<()> {
    let seed = s.seed.unwrap_or(0);
    let hops = s.hops.unwrap_or(1);
    let mut out = String::new();
    for kind in s.kinds().into_iter().filter(|k| k.rank().is_some()) {
        let small = bench_activation_forward(kind, nodes, degree, hops, features, reps, seed)?;
        let large = bench_activation_forward(kind, 2 * nodes, degree, hops, features, reps, seed)?;
        let ratio = large.per_call.as_secs_f64() / small.per_call.as_secs_f64();
        out.push_str(&format!(
            "{{\"activation\":\"{kind}\",\"hops\":{hops},\"n\":{},\"seconds_n\":{},\
             \"seconds_2n\":{},\"ratio\":{}}}\n",
            nodes,
            fmt_f64(small.per_call.as_secs_f64()),
            fmt_f64(large.per_call.as_secs_f64()),
            fmt_f64(ratio)
        ));
    }
    s.emit(&out)
}
