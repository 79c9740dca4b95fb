//! Prints correlation summaries for the default tree experiment and its sweeps.
//! Usage: cargo run --release --example tree_experiment [master_seed]

use opeval_core::harness::{magnitude_sweep, prior_sweep, run_correlation_experiment, stochastic_sweep, ExperimentConfig};
use opeval_core::harness::CorrelationSummary;

fn show(s: &CorrelationSummary) {
    println!(
        "  {:<8} xi={:>8.4}  r2={:>7.4}  n={}",
        s.metric.as_str(),
        s.spearman.unwrap_or(f64::NAN),
        s.r_squared.unwrap_or(f64::NAN),
        s.n_models
    );
}

fn main() -> opeval_core::Result<()> {
    let seed = std::env::args().nth(1).map(|s| s.parse().expect("seed")).unwrap_or(0);
    let cfg = ExperimentConfig { master_seed: seed, ..ExperimentConfig::default() };

    println!("tree, one success leaf");
    for s in &run_correlation_experiment(&cfg)?.summaries {
        show(s);
    }
    for (slip, res) in stochastic_sweep(&cfg)? {
        println!("slip {slip}");
        res.summaries.iter().for_each(show);
    }
    for (dist, res) in magnitude_sweep(&cfg)? {
        println!("{}", dist.label());
        res.summaries.iter().for_each(show);
    }
    let sweep = prior_sweep(&cfg)?;
    println!("prior sweep");
    for p in &sweep.points {
        println!(
            "  p={:.2}  OPC xi={:>8.4}  SoftOPC xi={:>8.4}",
            p.prior,
            p.opc.spearman.unwrap_or(f64::NAN),
            p.soft_opc.spearman.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
