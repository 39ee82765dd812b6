use serde::{Deserialize, Serialize};

use super::Bag;
use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature z-score statistics (population standard deviation).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    /// Clamped below at [`STD_FLOOR`].
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn fit(bags: &[Bag]) -> Result<Self> {
        let d = bags.first().map_or(0, Bag::d_feat);
        let n: usize = bags.iter().map(Bag::len).sum();
        if n == 0 {
            return Err(Error::Domain("cannot fit normalization on zero instances".into()));
        }
        let mut mean = vec![0.0; d];
        for bag in bags {
            if bag.d_feat() != d {
                return Err(Error::shape("normalize", format!("{d} features"), format!("{}", bag.d_feat())));
            }
            for row in bag.instances.iter_rows() {
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);

        let mut var = vec![0.0; d];
        for bag in bags {
            for row in bag.instances.iter_rows() {
                for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
        }
        let std = var.into_iter().map(|s| (s / n as f64).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn is_degenerate(&self, feature: usize) -> bool {
        self.std[feature] <= STD_FLOOR
    }

    /// Z-scores every instance. Degenerate (constant) features map to 0.
    pub fn apply(&self, bag: &Bag) -> Result<Bag> {
        if bag.d_feat() != self.mean.len() {
            return Err(Error::shape(
                "normalize",
                format!("{} features", self.mean.len()),
                format!("bag `{}` with {}", bag.bag_id, bag.d_feat()),
            ));
        }
        let mut out = bag.clone();
        let d = self.mean.len();
        for (i, v) in out.instances.as_mut_slice().iter_mut().enumerate() {
            let j = i % d;
            *v = if self.is_degenerate(j) {
                0.0
            } else {
                (*v - self.mean[j]) / self.std[j]
            };
        }
        Ok(out)
    }
}

/// Fits statistics on the training bags only and applies them to `all_bags`.
pub fn normalize(train_bags: &[Bag], all_bags: &[Bag]) -> Result<(NormStats, Vec<Bag>)> {
    let stats = NormStats::fit(train_bags)?;
    let out = all_bags.iter().map(|b| stats.apply(b)).collect::<Result<Vec<_>>>()?;
    Ok((stats, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numgrad::Matrix;

    fn bag(id: &str, rows: &[[f64; 3]]) -> Bag {
        Bag::new(id, 0, Matrix::from_rows(rows)).unwrap()
    }

    fn train() -> Vec<Bag> {
        vec![
            bag("a", &[[1.0, 0.1, 5.0], [2.0, 0.1, -3.0]]),
            bag("b", &[[4.0, 0.1, 7.5], [0.5, 0.1, 0.0], [9.0, 0.1, 2.0]]),
        ]
    }

    #[test]
    fn constant_column_becomes_zero() {
        let (stats, out) = normalize(&train(), &train()).unwrap();
        assert!(stats.is_degenerate(1));
        assert_eq!(stats.std[1], STD_FLOOR);
        for b in &out {
            assert!(b.instances.column(1).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn fitted_instances_have_zero_mean_unit_std() {
        let (_, out) = normalize(&train(), &train()).unwrap();
        let refit = NormStats::fit(&out).unwrap();
        for j in [0, 2] {
            assert!(refit.mean[j].abs() < 1e-10);
            assert!((refit.std[j] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn value_at_train_mean_maps_to_zero() {
        let stats = NormStats::fit(&train()).unwrap();
        let probe = bag("t", &[[stats.mean[0], 123.0, stats.mean[2]]]);
        let out = stats.apply(&probe).unwrap();
        assert_eq!(out.instances.get(0, 0), 0.0);
        assert_eq!(out.instances.get(0, 2), 0.0);
    }

    #[test]
    fn no_training_instances_is_domain_error() {
        assert!(matches!(normalize(&[], &train()), Err(Error::Domain(_))));
    }

    #[test]
    fn idempotent_on_normalized_data() {
        let (_, once) = normalize(&train(), &train()).unwrap();
        let (_, twice) = normalize(&once, &once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!(a.instances.max_abs_diff(&b.instances) < 1e-9);
        }
    }
}
