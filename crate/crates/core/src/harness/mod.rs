//! Synthetic data, file formats, experiment configuration and the
//! experiment runner.

mod checks;
mod config;
mod experiment;
mod generators;
mod io;

pub use checks::{
    bench_activation_forward, gen_degree_capped_graph, gradcheck_trial, invariance_trial,
    random_model_config, BenchResult, InvarianceReport,
};
pub use config::{parse_config, ExperimentConfig, GraphFamily};
pub use experiment::{
    aggregate, run_experiment, run_trial, run_trial_with, Aggregate, ExperimentResult, RunResult, TrialResult,
};
pub use generators::{
    gen_er_graph, gen_geometric_graph, gen_source_localization, geometric_graph_from_points,
    uniform_points, SourceLocDataset, SplitSizes, MAX_RETRIES,
};
pub use io::{
    load_edge_list, load_signals, parse_edge_list, parse_signals, save_edge_list, save_signals,
    write_edge_list, write_signals, MAX_NODES,
};

/// Decimal text with 17 significant digits, enough to recover any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::fmt_f64;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1e308, f64::MIN_POSITIVE, 0.0, -0.0] {
            let s = fmt_f64(x);
            let mantissa = s.split('e').next().unwrap();
            let digits = mantissa.chars().filter(char::is_ascii_digit).count();
            assert_eq!(digits, 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
