// Ten-fold cross-validation of attention MIL on MUSK1 (or any C4.5 MUSK file).
//
// ```bash
// cargo run --release --example musk_crossval -- data/musk1.data 5
// ```
//
// Arguments: the data file (default `data/musk1.data`) and the number of repeats (default 1).

use std::path::PathBuf;

use attnmil::bench::{crossval, DataFormat, Execution, RunConfig};

fn main() -> attnmil::Result<()> {
    let mut args = std::env::args().skip(1);
    let data = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/musk1.data")
    });
    let repeats = args.next().and_then(|r| r.parse().ok()).unwrap_or(1);

    let config = RunConfig {
        data: Some(data),
        format: DataFormat::Musk,
        repeats,
        ..RunConfig::default()
    };
    let dataset = config.load_data()?;
    let report = crossval(&dataset, &config, Execution::Parallel)?;
    for fold in &report.folds {
        println!(
            "repeat {} fold {}: {}/{} correct, final train loss {:.4}, {:.1}s",
            fold.repeat,
            fold.fold,
            (fold.metrics.accuracy * fold.test_bags as f64).round(),
            fold.test_bags,
            fold.final_train_loss,
            fold.wall_clock_secs
        );
    }
    println!("{}", report.summary_line());
    Ok(())
}
