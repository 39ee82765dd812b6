use serde::{Deserialize, Serialize};

use super::{Bag, Dataset};
use crate::error::{Error, Result};
use crate::numgrad::{Matrix, RngState};

/// Two-blob witness bags: background instances around the origin, witnesses
/// around a point `cluster_separation` away along a seeded random direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_bags: usize,
    /// Inclusive bag-size range.
    pub bag_size_range: (usize, usize),
    pub d_feat: usize,
    /// Probability that an instance of a positive bag is a witness.
    pub witness_rate: f64,
    pub cluster_separation: f64,
    pub noise_std: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_bags: 100,
            bag_size_range: (5, 15),
            d_feat: 10,
            witness_rate: 0.1,
            cluster_separation: 6.0,
            noise_std: 1.0,
        }
    }
}

/// Generates a binary dataset with ground-truth instance labels.
///
/// Half the bags (rounded down) are positive and hold at least one witness;
/// negative bags hold none. Bag order is shuffled.
pub fn synth_witness(config: &SynthConfig, seed: u64) -> Result<Dataset> {
    let (lo, hi) = config.bag_size_range;
    if lo == 0 || hi < lo {
        return Err(Error::Domain(format!("infeasible bag size range {lo}..={hi}")));
    }
    if config.n_bags < 2 {
        return Err(Error::Domain("synthetic dataset needs at least 2 bags".into()));
    }
    if config.d_feat == 0 {
        return Err(Error::Domain("synthetic dataset needs at least one feature".into()));
    }
    if !(config.witness_rate > 0.0 && config.witness_rate <= 1.0) {
        return Err(Error::Domain(format!("witness rate {} outside (0, 1]", config.witness_rate)));
    }
    if !(config.cluster_separation > 0.0) || !(config.noise_std >= 0.0) {
        return Err(Error::Domain("separation must be positive and noise non-negative".into()));
    }

    let mut rng = RngState::new(seed);
    let mut direction: Vec<f64> = (0..config.d_feat).map(|_| rng.normal()).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let witness_center: Vec<f64> = direction
        .iter_mut()
        .map(|v| *v / norm * config.cluster_separation)
        .collect();

    let mut labels: Vec<usize> = (0..config.n_bags).map(|i| usize::from(i < config.n_bags / 2)).collect();
    rng.shuffle(&mut labels);

    let mut bags = Vec::with_capacity(config.n_bags);
    for (b, &label) in labels.iter().enumerate() {
        let k = rng.int_inclusive(lo, hi);
        let mut flags: Vec<u8> = if label == 1 {
            (0..k).map(|_| u8::from(rng.uniform() < config.witness_rate)).collect()
        } else {
            vec![0; k]
        };
        if label == 1 && flags.iter().all(|&f| f == 0) {
            let forced = rng.int_inclusive(0, k - 1);
            flags[forced] = 1;
        }
        let mut values = Vec::with_capacity(k * config.d_feat);
        for &flag in &flags {
            for center in &witness_center {
                let mean = if flag == 1 { *center } else { 0.0 };
                values.push(mean + config.noise_std * rng.normal());
            }
        }
        let bag = Bag::new(format!("synth-{b:04}"), label, Matrix::new(k, config.d_feat, values)?)?
            .with_instance_labels(flags)?;
        bags.push(bag);
    }
    Dataset::new("synth_witness", bags, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_witness_rate_marks_every_positive_instance() {
        let cfg = SynthConfig {
            witness_rate: 1.0,
            ..Default::default()
        };
        let ds = synth_witness(&cfg, 5).unwrap();
        for b in ds.bags.iter().filter(|b| b.label == 1) {
            assert!(b.instance_labels.as_ref().unwrap().iter().all(|&l| l == 1));
        }
    }

    #[test]
    fn nearest_centroid_separates_blobs() {
        let cfg = SynthConfig {
            n_bags: 200,
            d_feat: 10,
            cluster_separation: 6.0,
            noise_std: 1.0,
            witness_rate: 0.3,
            ..Default::default()
        };
        let ds = synth_witness(&cfg, 99).unwrap();
        // centroids estimated from the ground-truth labels
        let mut sums = [vec![0.0; 10], vec![0.0; 10]];
        let mut counts = [0usize; 2];
        for b in &ds.bags {
            for (row, &l) in b.instances.iter_rows().zip(b.instance_labels.as_ref().unwrap()) {
                counts[l as usize] += 1;
                sums[l as usize].iter_mut().zip(row).for_each(|(s, v)| *s += v);
            }
        }
        let centroids: Vec<Vec<f64>> = (0..2).map(|c| sums[c].iter().map(|s| s / counts[c] as f64).collect()).collect();
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let mut correct = 0;
        let mut total = 0;
        for b in &ds.bags {
            for (row, &l) in b.instances.iter_rows().zip(b.instance_labels.as_ref().unwrap()) {
                let guess = u8::from(dist(row, &centroids[1]) < dist(row, &centroids[0]));
                correct += usize::from(guess == l);
                total += 1;
            }
        }
        assert!(correct as f64 / total as f64 >= 0.99, "{correct}/{total}");
    }

    #[test]
    fn infeasible_configs() {
        let zero = SynthConfig {
            bag_size_range: (0, 3),
            ..Default::default()
        };
        assert!(matches!(synth_witness(&zero, 0), Err(Error::Domain(_))));
        let rate = SynthConfig {
            witness_rate: 0.0,
            ..Default::default()
        };
        assert!(synth_witness(&rate, 0).is_err());
        let sep = SynthConfig {
            cluster_separation: 0.0,
            ..Default::default()
        };
        assert!(synth_witness(&sep, 0).is_err());
    }

    #[test]
    fn seed_determinism() {
        let cfg = SynthConfig::default();
        assert_eq!(synth_witness(&cfg, 1).unwrap(), synth_witness(&cfg, 1).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn standard_assumption_holds_by_construction(
            seed: u64,
            n_bags in 2usize..40,
            lo in 1usize..6,
            extra in 0usize..6,
            rate in 0.01f64..=1.0,
        ) {
            let cfg = SynthConfig {
                n_bags,
                bag_size_range: (lo, lo + extra),
                d_feat: 3,
                witness_rate: rate,
                cluster_separation: 2.0,
                noise_std: 1.0,
            };
            let ds = synth_witness(&cfg, seed).unwrap();
            prop_assert_eq!(ds.len(), n_bags);
            for b in &ds.bags {
                prop_assert_eq!(b.satisfies_standard_assumption(), Some(true));
                prop_assert!(b.len() >= lo && b.len() <= lo + extra);
            }
        }
    }
}
