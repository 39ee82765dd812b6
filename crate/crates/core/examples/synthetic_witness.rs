// Train on synthetic witness bags and check whether the most attended
// instance of each positive test bag is one of its planted witnesses.
//
// ```bash
// cargo run --release --example synthetic_witness
// ```

use attnmil::bench::prepare_split;
use attnmil::mildata::{stratified_kfold, synth_witness, SynthConfig};
use attnmil::milnet::{evaluate, train, Model, ModelConfig, TrainConfig};
use attnmil::milpool::PoolingKind;

pub fn run() -> attnmil::Result<()> {
    let dataset = synth_witness(
        &SynthConfig {
            n_bags: 120,
            cluster_separation: 6.0,
            ..SynthConfig::default()
        },
        11,
    )?;
    println!(
        "{} bags, {} instances, {} features",
        dataset.len(),
        dataset.instance_count(),
        dataset.d_feat
    );

    // hold out one fifth
    let plan = stratified_kfold(&dataset, 5, 0)?;
    let (train_idx, test_idx) = plan.split(0);
    let (train_bags, test_bags) = prepare_split(dataset.subset(&train_idx), dataset.subset(&test_idx), true)?;

    let mut model = Model::new(ModelConfig::new(dataset.d_feat, PoolingKind::Attention).with_seed(3))?;
    let history = train(&mut model, &train_bags, &TrainConfig { seed: 3, ..TrainConfig::default() })?;
    println!(
        "training loss {:.4} -> {:.4}",
        history.epoch_losses[0],
        history.final_loss().unwrap()
    );
    println!("test accuracy {:.3}", evaluate(&model, &test_bags)?.accuracy);

    let mut hits = 0;
    let mut positives = 0;
    for bag in test_bags.iter().filter(|b| b.label == 1) {
        let (top, weight) = model.key_instances(bag, 1)?[0];
        let witness = bag.instance_labels.as_ref().unwrap()[top] == 1;
        positives += 1;
        hits += usize::from(witness);
        println!(
            "{}: top instance {top} (weight {weight:.3}) {}",
            bag.bag_id,
            if witness { "witness" } else { "background" }
        );
    }
    println!("top-1 witness rate {hits}/{positives}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> attnmil::Result<()> {
    run()
}
