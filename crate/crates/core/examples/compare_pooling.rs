// Paired comparison of the four pooling operators on synthetic bags with sparse witnesses.
//
// ```bash
// cargo run --release --example compare_pooling
// ```

use attnmil::bench::{compare, Execution, RunConfig};
use attnmil::mildata::{synth_witness, SynthConfig};
use attnmil::milpool::PoolingKind;

pub fn run() -> attnmil::Result<()> {
    let dataset = synth_witness(
        &SynthConfig {
            n_bags: 80,
            cluster_separation: 3.0,
            ..SynthConfig::default()
        },
        5,
    )?;
    let mut config = RunConfig {
        hidden: vec![64, 32],
        folds: 4,
        repeats: 1,
        ..RunConfig::default()
    };
    config.train.epochs = 20;
    config.train.learning_rate = 5e-4;

    let comparison = compare(&dataset, &config, &PoolingKind::ALL, Execution::Parallel)?;
    print!("{}", comparison.summary_table());
    // every kind saw the same folds and the same per-fold seeds
    assert!(comparison.reports.windows(2).all(|w| w[0].fold_plans == w[1].fold_plans));
    Ok(())
}

#[allow(dead_code)]
fn main() -> attnmil::Result<()> {
    run()
}
