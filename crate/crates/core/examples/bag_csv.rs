// Reading your own data: bag-CSV parsing, fold planning and train-fold normalization.
//
// ```bash
// cargo run --example bag_csv
// ```

use attnmil::mildata::{normalize, parse_bag_csv, stratified_kfold};

const CSV: &str = "\
bag_id,label,f0,f1
doc-a,1,0.9,12.0
doc-a,1,0.1,10.5
doc-b,0,0.2,11.0
doc-c,1,0.8,13.5
doc-c,1,0.3,9.0
doc-c,1,0.0,10.0
doc-d,0,0.1,12.5
doc-e,0,0.3,10.0
";

pub fn run() -> attnmil::Result<()> {
    let dataset = parse_bag_csv(CSV, "toy", "inline")?;
    for bag in &dataset.bags {
        println!("{} label {} with {} instances", bag.bag_id, bag.label, bag.len());
    }

    let plan = stratified_kfold(&dataset, 2, 0)?;
    println!("fold sizes {:?}", plan.fold_sizes());
    let (train_idx, _) = plan.split(0);
    let (stats, scaled) = normalize(&dataset.subset(&train_idx), &dataset.bags)?;
    println!("training mean {:.3?}, std {:.3?}", stats.mean, stats.std);
    println!("first bag after scaling {:.3?}", scaled[0].instances.row(0));

    // mistakes are reported with their line
    let broken = "bag_id,label,f0\nx,1,0.5\nx,0,0.7\n";
    println!("{}", parse_bag_csv(broken, "broken", "broken.csv").unwrap_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> attnmil::Result<()> {
    run()
}
