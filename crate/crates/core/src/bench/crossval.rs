use std::time::Instant;

use rayon::prelude::*;

use super::config::{repeat_seed, run_seed, RunConfig};
use super::report::{mean_and_std, Comparison, DatasetSummary, ExperimentReport, FoldReport, ARTIFACT_VERSION, REPORT_KIND};
use crate::error::{Error, Result};
use crate::mildata::{stratified_kfold, Bag, Dataset, FoldPlan, NormStats};
use crate::milnet::{evaluate, train, Model};
use crate::milpool::PoolingKind;

/// How fold jobs are scheduled. Results do not depend on it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// One rayon task per `(repeat, fold)`.
    #[default]
    Parallel,
}

/// One plan per repeat, each stratified with its own derived seed.
pub fn fold_plans(dataset: &Dataset, config: &RunConfig) -> Result<Vec<FoldPlan>> {
    config.validate_for(dataset)?;
    (0..config.repeats)
        .map(|r| stratified_kfold(dataset, config.folds, repeat_seed(config.seed, r)))
        .collect()
}

/// Fits normalization on `train` (if enabled) and applies it to both splits.
pub fn prepare_split(train: Vec<Bag>, test: Vec<Bag>, normalize: bool) -> Result<(Vec<Bag>, Vec<Bag>)> {
    if !normalize {
        return Ok((train, test));
    }
    let stats = NormStats::fit(&train)?;
    let apply = |bags: &[Bag]| bags.iter().map(|b| stats.apply(b)).collect::<Result<Vec<_>>>();
    Ok((apply(&train)?, apply(&test)?))
}

fn run_fold(dataset: &Dataset, config: &RunConfig, plan: &FoldPlan, repeat: usize, fold: usize) -> Result<FoldReport> {
    let start = Instant::now();
    let (train_idx, test_idx) = plan.split(fold);
    let (train_bags, test_bags) = prepare_split(dataset.subset(&train_idx), dataset.subset(&test_idx), config.normalize)?;
    let seed = run_seed(config.seed, repeat, fold);
    let mut model = Model::new(config.model_config(dataset, seed))?;
    let history = train(&mut model, &train_bags, &config.train_config(seed))?;
    let metrics = evaluate(&model, &test_bags)?;
    Ok(FoldReport {
        repeat,
        fold,
        seed,
        train_bags: train_bags.len(),
        test_bags: test_bags.len(),
        final_train_loss: history.final_loss().unwrap_or(f64::NAN),
        metrics,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Cross-validates `config` over the given plans (one per repeat).
pub fn crossval_with_plans(
    dataset: &Dataset,
    config: &RunConfig,
    plans: &[FoldPlan],
    execution: Execution,
) -> Result<ExperimentReport> {
    config.validate_for(dataset)?;
    if plans.len() != config.repeats || plans.iter().any(|p| p.k != config.folds) {
        return Err(Error::Config(format!(
            "expected {} fold plans of {} folds",
            config.repeats, config.folds
        )));
    }
    let start = Instant::now();
    let jobs: Vec<(usize, usize)> = (0..config.repeats)
        .flat_map(|r| (0..config.folds).map(move |f| (r, f)))
        .collect();
    let job = |&(r, f): &(usize, usize)| run_fold(dataset, config, &plans[r], r, f);
    let folds: Vec<FoldReport> = match execution {
        Execution::Serial => jobs.iter().map(job).collect::<Result<_>>()?,
        Execution::Parallel => jobs.par_iter().map(job).collect::<Result<_>>()?,
    };
    let accuracies: Vec<f64> = folds.iter().map(|f| f.metrics.accuracy).collect();
    let (mean_accuracy, std_accuracy) = mean_and_std(&accuracies);
    Ok(ExperimentReport {
        kind: REPORT_KIND.into(),
        version: ARTIFACT_VERSION.into(),
        pooling: config.pooling.kind,
        dataset: DatasetSummary::of(dataset),
        config: config.clone(),
        fold_plans: plans.to_vec(),
        folds,
        mean_accuracy,
        std_accuracy,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Repeated stratified k-fold cross-validation of one configuration.
pub fn crossval(dataset: &Dataset, config: &RunConfig, execution: Execution) -> Result<ExperimentReport> {
    let plans = fold_plans(dataset, config)?;
    crossval_with_plans(dataset, config, &plans, execution)
}

/// Paired cross-validation: every kind sees the same fold plans and per-fold seeds.
pub fn compare(dataset: &Dataset, config: &RunConfig, kinds: &[PoolingKind], execution: Execution) -> Result<Comparison> {
    if kinds.is_empty() {
        return Err(Error::Config("compare needs at least one pooling kind".into()));
    }
    let plans = fold_plans(dataset, config)?;
    let reports = kinds
        .iter()
        .map(|&kind| crossval_with_plans(dataset, &config.clone().with_pooling(kind), &plans, execution))
        .collect::<Result<_>>()?;
    Ok(Comparison { reports })
}
