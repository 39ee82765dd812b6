// Attention pooling on a hand-made bag: weights, the pooled vector and the
// effect of the softmax temperature.
//
// ```bash
// cargo run --example attention_pooling
// ```

use attnmil::milpool::{max_pool, mean_pool, weighted_pool, GatedAttention, SpatialAttention};
use attnmil::numgrad::{Matrix, RngState};

pub fn run() -> attnmil::Result<()> {
    // three 4-d instances; the last one is far from the others
    let bag = Matrix::from_rows(&[[0.1, 0.0, 0.2, 0.1], [0.0, 0.1, 0.1, 0.0], [2.5, 2.0, 1.8, 3.0]]);
    let mut rng = RngState::new(7);

    let mut spatial = SpatialAttention::new(4, "attention", &mut rng)?;
    // push the scorer towards the first feature so the outlier stands out
    spatial.w.value.set(0, 0, 3.0);
    for t in [1.0, 0.25, 0.05] {
        let (weights, _) = spatial.forward(&bag, t)?;
        println!("spatial T={t:<5} weights {:.3?}", &*weights);
    }
    let (weights, _) = spatial.forward(&bag, 1.0)?;
    let largest = weights.iter().cloned().fold(f64::MIN, f64::max);
    let smallest = weights.iter().cloned().fold(f64::MAX, f64::min);
    // sigmoid scores live in (0, 1), so at T = 1 no weight is more than e times another
    println!("max/min ratio at T=1: {:.3} (bound e = {:.3})", largest / smallest, std::f64::consts::E);

    let gated = GatedAttention::new(4, 8, "attention", &mut rng)?;
    let (g_weights, _) = gated.forward(&bag, 1.0)?;
    println!("gated          weights {:.3?}", &*g_weights);

    println!("attention pool {:.3?}", weighted_pool(&bag, &weights)?);
    println!("mean pool      {:.3?}", mean_pool(&bag)?);
    println!("max pool       {:.3?}", max_pool(&bag)?.0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> attnmil::Result<()> {
    run()
}
