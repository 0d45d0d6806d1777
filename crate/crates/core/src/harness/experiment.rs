use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, GraphFamily};
use super::fmt_f64;
use super::generators::{gen_er_graph, gen_geometric_graph, gen_source_localization, SplitSizes};
use super::io::load_edge_list;
use crate::error::Result;
use crate::graph::Graph;
use crate::model::{ActivationKind, GnnModel, ModelConfig, ModelOperators};
use crate::optim::{evaluate, train_with_observer, EpochMetrics, EvalMetrics};

/// One trained architecture within a trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub activation: ActivationKind,
    pub history: Vec<EpochMetrics>,
    pub test: EvalMetrics,
    /// Parameters in the convolutional layers, activation coefficients included.
    pub param_count: usize,
    pub total_params: usize,
    pub model: GnnModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub graph: Graph,
    pub mean_degree: f64,
    pub runs: Vec<RunResult>,
}

/// Mean and standard error of test accuracy across trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub activation: ActivationKind,
    pub trials: usize,
    pub mean_test_acc: f64,
    pub stderr_test_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub hops: usize,
    pub trials: Vec<TrialResult>,
    pub aggregates: Vec<Aggregate>,
}

struct TrialSeeds {
    graph: u64,
    data: u64,
    init: u64,
    train: u64,
}

fn trial_seeds(seed: u64, trial: usize) -> TrialSeeds {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    TrialSeeds {
        graph: rng.next_u64(),
        data: rng.next_u64(),
        init: rng.next_u64(),
        train: rng.next_u64(),
    }
}

fn trial_graph(cfg: &ExperimentConfig, seed: u64) -> Result<Graph> {
    match cfg.family {
        GraphFamily::Er => gen_er_graph(cfg.n, cfg.p, seed),
        GraphFamily::Geometric => gen_geometric_graph(cfg.n, cfg.radius, seed),
        GraphFamily::File => load_edge_list(cfg.graph_file.as_ref().expect("validated")),
    }
}

/// Runs trial `trial` alone. The result depends only on `cfg` and `trial`.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialResult> {
    run_trial_with(cfg, trial, |_, _| {})
}

/// [`run_trial`] reporting every epoch as it completes.
pub fn run_trial_with(
    cfg: &ExperimentConfig,
    trial: usize,
    mut observe: impl FnMut(ActivationKind, &EpochMetrics),
) -> Result<TrialResult> {
    cfg.validate()?;
    let seeds = trial_seeds(cfg.seed, trial);
    let graph = trial_graph(cfg, seeds.graph)?;
    let sizes = SplitSizes {
        train: cfg.train_samples,
        val: cfg.val_samples,
        test: cfg.test_samples,
    };
    let data = gen_source_localization(&graph, cfg.classes, sizes, cfg.t_max, seeds.data)?.data;
    let ops = ModelOperators::from_graph(&graph)?;
    let mut runs = Vec::with_capacity(cfg.activations.len());
    for &activation in &cfg.activations {
        let mcfg =
            ModelConfig::single_layer(activation, cfg.features, cfg.taps, cfg.hops, cfg.classes);
        let model = GnnModel::init(&mcfg, ops.clone(), &mut ChaCha8Rng::seed_from_u64(seeds.init))?;
        let (model, history) = train_with_observer(
            model,
            &data,
            &cfg.train_config(seeds.train),
            |e| observe(activation, e),
        )?;
        let test = evaluate(&model, &data.test)?;
        runs.push(RunResult {
            activation,
            history,
            test,
            param_count: model.conv_param_count(),
            total_params: model.param_count(),
            model,
        });
    }
    Ok(TrialResult {
        trial,
        mean_degree: graph.mean_degree(),
        graph,
        runs,
    })
}

pub fn aggregate(trials: &[TrialResult]) -> Vec<Aggregate> {
    let Some(first) = trials.first() else {
        return Vec::new();
    };
    first
        .runs
        .iter()
        .map(|r| r.activation)
        .map(|activation| {
            let accs: Vec<f64> = trials
                .iter()
                .flat_map(|t| t.runs.iter())
                .filter(|r| r.activation == activation)
                .map(|r| r.test.accuracy)
                .collect();
            let k = accs.len() as f64;
            let mean = accs.iter().sum::<f64>() / k;
            let stderr = if accs.len() < 2 {
                0.0
            } else {
                let var = accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (k - 1.0);
                (var / k).sqrt()
            };
            Aggregate {
                activation,
                trials: accs.len(),
                mean_test_acc: mean,
                stderr_test_acc: stderr,
            }
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let trials = (0..cfg.trials)
        .map(|t| run_trial(cfg, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        hops: cfg.hops,
        aggregates: aggregate(&trials),
        trials,
    })
}

fn num(x: f64) -> String {
    if x.is_finite() {
        fmt_f64(x)
    } else {
        "null".to_string()
    }
}

impl TrialResult {
    /// Epoch records then one summary record per architecture, as JSON lines.
    pub fn to_json_lines(&self, hops: usize) -> String {
        let mut out = String::new();
        for r in &self.runs {
            for e in &r.history {
                let _ = writeln!(
                    out,
                    "{{\"record\":\"epoch\",\"trial\":{},\"activation\":\"{}\",\"hops\":{hops},\
                     \"epoch\":{},\"train_loss\":{},\"val_loss\":{},\"val_acc\":{}}}",
                    self.trial,
                    r.activation,
                    e.epoch,
                    num(e.train_loss),
                    num(e.val_loss),
                    num(e.val_acc)
                );
            }
        }
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{{\"record\":\"summary\",\"trial\":{},\"activation\":\"{}\",\"hops\":{hops},\
                 \"test_acc\":{},\"test_loss\":{},\"param_count\":{},\"total_params\":{},\
                 \"mean_degree\":{}}}",
                self.trial,
                r.activation,
                num(r.test.accuracy),
                num(r.test.loss),
                r.param_count,
                r.total_params,
                num(self.mean_degree)
            );
        }
        out
    }
}

impl Aggregate {
    pub fn to_json_line(&self, hops: usize) -> String {
        format!(
            "{{\"record\":\"aggregate\",\"activation\":\"{}\",\"hops\":{hops},\"trials\":{},\
             \"mean_test_acc\":{},\"stderr_test_acc\":{}}}\n",
            self.activation,
            self.trials,
            num(self.mean_test_acc),
            num(self.stderr_test_acc)
        )
    }
}

impl ExperimentResult {
    pub fn to_json_lines(&self) -> String {
        let mut out: String = self.trials.iter().map(|t| t.to_json_lines(self.hops)).collect();
        for a in &self.aggregates {
            out.push_str(&a.to_json_line(self.hops));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            n: 12,
            p: 0.3,
            classes: 3,
            train_samples: 30,
            val_samples: 6,
            test_samples: 6,
            t_max: 3,
            features: 4,
            taps: 2,
            epochs: 2,
            batch_size: 10,
            trials: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn zero_epochs_only_initial_evaluation() {
        let cfg = ExperimentConfig { epochs: 0, trials: 1, ..tiny() };
        let res = run_experiment(&cfg).unwrap();
        for r in &res.trials[0].runs {
            assert_eq!(r.history.len(), 1);
            assert_eq!(r.history[0].epoch, 0);
        }
    }

    #[test]
    fn output_is_reproducible() {
        let cfg = tiny();
        let a = run_experiment(&cfg).unwrap().to_json_lines();
        let b = run_experiment(&cfg).unwrap().to_json_lines();
        assert_eq!(a, b);
        assert_eq!(
            run_trial(&cfg, 1).unwrap().to_json_lines(cfg.hops),
            run_experiment(&cfg).unwrap().trials[1].to_json_lines(cfg.hops)
        );
        // 2 trials x 3 architectures x 3 epoch records, 6 summaries, 3 aggregates.
        assert_eq!(a.lines().count(), 18 + 6 + 3);
        assert!(a.lines().all(|l| l.starts_with('{') && l.ends_with('}')));
    }

    #[test]
    fn aggregate_standard_error() {
        let cfg = ExperimentConfig { trials: 1, epochs: 0, ..tiny() };
        let base = run_trial(&cfg, 0).unwrap();
        let with_acc = |acc: f64, trial| {
            let mut t = base.clone();
            t.trial = trial;
            for r in &mut t.runs {
                r.test.accuracy = acc;
            }
            t
        };
        let agg = aggregate(&[with_acc(0.2, 0), with_acc(0.4, 1), with_acc(0.6, 2)]);
        assert_eq!(agg.len(), 3);
        for a in agg {
            assert!((a.mean_test_acc - 0.4).abs() < 1e-15);
            // sample sd 0.2, three trials
            assert!((a.stderr_test_acc - 0.2 / 3f64.sqrt()).abs() < 1e-15);
        }
    }
}
