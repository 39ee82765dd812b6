use serde::{Deserialize, Serialize};

use super::{Matrix, Parameterized, RngState};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckOptions {
    /// Central-difference step, in `[1e-6, 1e-4]`.
    pub step: f64,
    /// Entries sampled per parameter; smaller parameters are checked exhaustively.
    pub max_entries_per_param: usize,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            step: 1e-5,
            max_entries_per_param: 24,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamCheck {
    pub name: String,
    pub entries_checked: usize,
    pub max_relative_error: f64,
    pub worst_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub entries_checked: usize,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }

    pub fn worst(&self) -> Option<&ParamCheck> {
        self.params
            .iter()
            .max_by(|a, b| a.max_relative_error.total_cmp(&b.max_relative_error))
    }
}

/// `|a − n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares analytic gradients against central differences.
///
/// `loss_fn` must zero and then repopulate the gradients of `model`, returning the
/// loss. It is called once for the analytic gradient, once more to confirm it is
/// deterministic, and twice per checked entry.
pub fn grad_check<M, F>(model: &mut M, mut loss_fn: F, opts: &GradCheckOptions) -> Result<GradCheckReport>
where
    M: Parameterized,
    F: FnMut(&mut M) -> Result<f64>,
{
    if !(1e-6..=1e-4).contains(&opts.step) {
        return Err(Error::Domain(format!("finite-difference step {} outside [1e-6, 1e-4]", opts.step)));
    }

    let first = loss_fn(model)?;
    let analytic: Vec<Matrix> = model.params().iter().map(|p| p.grad.clone()).collect();
    let second = loss_fn(model)?;
    if first.to_bits() != second.to_bits() {
        return Err(Error::Contract(format!(
            "loss function is not deterministic ({first} then {second})"
        )));
    }

    let mut rng = RngState::new(opts.seed);
    let h = opts.step;
    let mut params = Vec::new();
    let n_params = analytic.len();
    for pi in 0..n_params {
        let (name, len) = {
            let ps = model.params();
            (ps[pi].name.clone(), ps[pi].len())
        };
        let mut indices: Vec<usize> = (0..len).collect();
        if len > opts.max_entries_per_param {
            rng.shuffle(&mut indices);
            indices.truncate(opts.max_entries_per_param);
            indices.sort_unstable();
        }

        let mut check = ParamCheck {
            name,
            entries_checked: 0,
            max_relative_error: 0.0,
            worst_index: 0,
        };
        for &i in &indices {
            let original = model.params()[pi].value.as_slice()[i];
            set_entry(model, pi, i, original + h);
            let up = loss_fn(model)?;
            set_entry(model, pi, i, original - h);
            let down = loss_fn(model)?;
            set_entry(model, pi, i, original);

            let numeric = (up - down) / (2.0 * h);
            let err = relative_error(analytic[pi].as_slice()[i], numeric);
            check.entries_checked += 1;
            if err > check.max_relative_error || err.is_nan() {
                check.max_relative_error = err;
                check.worst_index = i;
            }
        }
        params.push(check);
    }

    // leave the analytic gradients in place, as a plain loss evaluation would
    loss_fn(model)?;

    let max_relative_error = params.iter().map(|p| p.max_relative_error).fold(0.0, f64::max);
    let entries_checked = params.iter().map(|p| p.entries_checked).sum();
    Ok(GradCheckReport {
        max_relative_error,
        entries_checked,
        params,
    })
}

fn set_entry<M: Parameterized>(model: &mut M, param: usize, index: usize, value: f64) {
    model.params_mut()[param].value.as_mut_slice()[index] = value;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numgrad::Param;

    fn quadratic(params: &mut Vec<Param>) -> Result<f64> {
        params.zero_grads();
        let mut loss = 0.0;
        for p in params.iter_mut() {
            for (v, g) in p.value.as_slice().iter().zip(p.grad.as_mut_slice()) {
                loss += 0.5 * v * v;
                *g = *v;
            }
        }
        Ok(loss)
    }

    #[test]
    fn quadratic_is_exact() {
        for step in [1e-6, 1e-5, 1e-4] {
            let mut params = vec![Param::new("theta", Matrix::from_rows(&[[3.0]]))];
            let report = grad_check(
                &mut params,
                quadratic,
                &GradCheckOptions {
                    step,
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(report.max_relative_error < 1e-9, "{report:?}");
            assert_eq!(params[0].value.get(0, 0), 3.0);
            assert_eq!(params[0].grad.get(0, 0), 3.0);
        }
    }

    #[test]
    fn wrong_gradient_is_detected() {
        let mut params = vec![Param::new("theta", Matrix::from_rows(&[[3.0, -1.0]]))];
        let report = grad_check(
            &mut params,
            |p: &mut Vec<Param>| {
                let loss = quadratic(p)?;
                p[0].grad.scale(1.1);
                Ok(loss)
            },
            &GradCheckOptions::default(),
        )
        .unwrap();
        assert!(!report.passes(1e-4));
        assert_eq!(report.worst().unwrap().name, "theta");
    }

    #[test]
    fn nondeterministic_loss_is_rejected() {
        let mut params = vec![Param::new("theta", Matrix::from_rows(&[[1.0]]))];
        let mut calls = 0.0;
        let err = grad_check(
            &mut params,
            |p: &mut Vec<Param>| {
                calls += 1.0;
                Ok(quadratic(p)? + calls)
            },
            &GradCheckOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn step_outside_range_is_rejected() {
        let mut params = vec![Param::new("theta", Matrix::from_rows(&[[1.0]]))];
        let opts = GradCheckOptions {
            step: 1e-2,
            ..Default::default()
        };
        assert!(matches!(grad_check(&mut params, quadratic, &opts), Err(Error::Domain(_))));
    }
}
