// Train a gated-attention model, write it to disk, read it back and confirm
// the predictions are bit-for-bit the same.
//
// ```bash
// cargo run --example save_and_load
// ```

use attnmil::mildata::{synth_witness, SynthConfig};
use attnmil::milnet::{load_model, model_to_string, save_model, train, Model, ModelConfig, TrainConfig};
use attnmil::milpool::PoolingKind;

pub fn run() -> attnmil::Result<()> {
    let dataset = synth_witness(&SynthConfig { n_bags: 30, ..SynthConfig::default() }, 2)?;
    let config = ModelConfig::new(dataset.d_feat, PoolingKind::Gated).with_hidden(vec![32, 16]).with_seed(4);
    let mut model = Model::new(config)?;
    train(&mut model, &dataset.bags, &TrainConfig { epochs: 5, learning_rate: 1e-3, ..TrainConfig::default() })?;

    let dir = std::env::temp_dir().join(format!("attnmil-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| attnmil::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("gated.model");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;

    let text = model_to_string(&model);
    println!("{}", text.lines().take(3).collect::<Vec<_>>().join("\n"));
    println!("... {} lines in {}", text.lines().count(), path.display());

    for bag in dataset.bags.iter().take(5) {
        let a = model.predict(bag)?;
        let b = loaded.predict(bag)?;
        assert_eq!(a, b);
        println!("{} label {} θ = {:.4}", bag.bag_id, bag.label, a.bag_prob[0]);
    }
    assert_eq!(model_to_string(&loaded), text);
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}

#[allow(dead_code)]
fn main() -> attnmil::Result<()> {
    run()
}
