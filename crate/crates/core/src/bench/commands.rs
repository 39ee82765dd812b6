use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::report::write_file;
use crate::error::{Error, Result};
use crate::mildata::{bag_csv_string, synth_witness, Bag, Dataset, NormStats, SynthConfig};
use crate::milnet::{evaluate, load_model, save_model, train, Metrics, Model, TrainHistory};
use crate::milpool::PoolingKind;
use crate::numgrad::{affine, grad_check, mix_seed, relu, GradCheckOptions, Matrix, RngState};

/// A trained model together with the normalization it expects its inputs in.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub model: Model,
    pub norm: Option<NormStats>,
}

/// Sidecar holding the normalization statistics: `<model>.norm.json`.
pub fn norm_path(model_path: &Path) -> PathBuf {
    let mut s = model_path.as_os_str().to_owned();
    s.push(".norm.json");
    PathBuf::from(s)
}

impl TrainedModel {
    pub fn prepare(&self, bags: &[Bag]) -> Result<Vec<Bag>> {
        let width = self.model.config().input_dim;
        if let Some(bag) = bags.iter().find(|b| b.d_feat() != width) {
            return Err(Error::shape("model input", format!("{width} features"), format!("{} features", bag.d_feat())));
        }
        match &self.norm {
            Some(stats) => bags.iter().map(|b| stats.apply(b)).collect(),
            None => Ok(bags.to_vec()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_model(&self.model, path)?;
        let sidecar = norm_path(path);
        match &self.norm {
            Some(stats) => write_file(&sidecar, &serde_json::to_string(stats).expect("stats serialize")),
            None if sidecar.exists() => std::fs::remove_file(&sidecar).map_err(|e| Error::io(&sidecar, e)),
            None => Ok(()),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model = load_model(path)?;
        let sidecar = norm_path(path);
        let norm = if sidecar.exists() {
            let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            Some(serde_json::from_str(&text).map_err(|e| Error::Format {
                path: sidecar.display().to_string(),
                line: e.line(),
                msg: e.to_string(),
            })?)
        } else {
            None
        };
        Ok(Self { model, norm })
    }
}

/// Trains one model on the whole dataset, seeded with `config.seed`.
pub fn train_full(dataset: &Dataset, config: &RunConfig) -> Result<(TrainedModel, TrainHistory)> {
    config.train.validate()?;
    let norm = if config.normalize { Some(NormStats::fit(&dataset.bags)?) } else { None };
    let mut trained = TrainedModel {
        model: Model::new(config.model_config(dataset, config.seed))?,
        norm,
    };
    let bags = trained.prepare(&dataset.bags)?;
    let history = train(&mut trained.model, &bags, &config.train_config(config.seed))?;
    Ok((trained, history))
}

pub fn evaluate_dataset(trained: &TrainedModel, dataset: &Dataset) -> Result<Metrics> {
    evaluate(&trained.model, &trained.prepare(&dataset.bags)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainRow {
    pub bag_id: String,
    pub label: usize,
    pub predicted: usize,
    pub rank: usize,
    pub instance: usize,
    pub weight: f64,
}

/// Top-`top` attention instances of every bag (fewer for smaller bags).
pub fn explain(trained: &TrainedModel, dataset: &Dataset, top: usize) -> Result<Vec<ExplainRow>> {
    if top == 0 {
        return Err(Error::Domain("--top must be at least 1".into()));
    }
    let bags = trained.prepare(&dataset.bags)?;
    let mut rows = Vec::new();
    for bag in &bags {
        let predicted = trained.model.predict(bag)?.predicted_class();
        for (rank, (instance, weight)) in trained.model.key_instances(bag, top.min(bag.len()))?.into_iter().enumerate() {
            rows.push(ExplainRow {
                bag_id: bag.bag_id.clone(),
                label: bag.label,
                predicted,
                rank: rank + 1,
                instance,
                weight,
            });
        }
    }
    Ok(rows)
}

pub fn explain_table(rows: &[ExplainRow]) -> String {
    let mut out = String::from("bag_id,label,predicted,rank,instance,weight\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{},{}", r.bag_id, r.label, r.predicted, r.rank, r.instance, r.weight).unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradCheckSettings {
    pub d_feat: usize,
    pub bag_size: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Scales the classifier weight gradient after backprop; for testing the checker.
    pub fault: Option<f64>,
}

impl Default for GradCheckSettings {
    fn default() -> Self {
        Self {
            d_feat: 16,
            bag_size: 6,
            tolerance: 1e-4,
            seed: 0,
            fault: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KindCheck {
    pub pooling: PoolingKind,
    pub max_relative_error: f64,
    pub worst_param: Option<String>,
    pub entries_checked: usize,
    pub passed: bool,
}

fn random_bag(k: usize, d: usize, label: usize, rng: &mut RngState) -> Bag {
    let id = format!("gradcheck-{label}");
    let values = (0..k * d).map(|_| rng.normal()).collect();
    Bag::new(id, label, Matrix::new(k, d, values).expect("sized")).expect("non-empty")
}

/// Whether every output column has a unique maximum instance by a visible margin.
fn unique_argmax(scores: &Matrix) -> bool {
    (0..scores.cols()).all(|c| {
        let mut col = scores.column(c);
        col.sort_by(|a, b| b.total_cmp(a));
        col.len() < 2 || col[0] - col[1] > 1e-3
    })
}

/// Smallest |pre-activation| over every backbone ReLU. A central difference
/// straddling a ReLU kink disagrees with the one-sided analytic gradient, so
/// checked bags keep all units clear of zero, as max pooling keeps a unique argmax.
fn relu_margin(model: &Model, x: &Matrix) -> Result<f64> {
    let mut h = x.clone();
    let mut margin = f64::INFINITY;
    for layer in model.backbone() {
        let pre = affine(&h, &layer.w, &layer.b)?;
        margin = pre.as_slice().iter().fold(margin, |m, v| m.min(v.abs()));
        h = relu(&pre);
    }
    Ok(margin)
}

/// Kink clearance required of checked bags, comfortably above the pre-activation
/// shift a single perturbed parameter can cause.
const RELU_CLEARANCE: f64 = 1e-3;

/// Full-model finite-difference check for each pooling kind, on random bags
/// of both labels. Bags are redrawn until no ReLU sits near its kink and, for
/// max pooling, until the argmax is unique.
pub fn gradcheck_all(config: &RunConfig, settings: &GradCheckSettings, kinds: &[PoolingKind]) -> Result<Vec<KindCheck>> {
    let mut out = Vec::with_capacity(kinds.len());
    for (i, &kind) in kinds.iter().enumerate() {
        let seed = mix_seed(settings.seed, i as u64);
        let dataset_shape = Dataset::new(
            "gradcheck",
            vec![
                random_bag(1, settings.d_feat, 0, &mut RngState::new(0)),
                random_bag(1, settings.d_feat, 1, &mut RngState::new(0)),
            ],
            2,
        )?;
        let mut model = Model::new(config.clone().with_pooling(kind).model_config(&dataset_shape, seed))?;
        model.inject_gradient_fault(settings.fault);
        let mut rng = RngState::new(mix_seed(seed, 1));
        let mut worst = KindCheck {
            pooling: kind,
            max_relative_error: 0.0,
            worst_param: None,
            entries_checked: 0,
            passed: true,
        };
        for label in [0, 1] {
            let bag = loop {
                let bag = random_bag(settings.bag_size, settings.d_feat, label, &mut rng);
                let clear = relu_margin(&model, &bag.instances)? > RELU_CLEARANCE;
                if clear && (kind != PoolingKind::Max || unique_argmax(&model.predict(&bag)?.instance_scores)) {
                    break bag;
                }
            };
            let opts = GradCheckOptions {
                seed: mix_seed(seed, 2 + label as u64),
                step: 1e-4,
                ..GradCheckOptions::default()
            };
            let report = grad_check(
                &mut model,
                |m: &mut Model| m.bag_loss_grads(&bag, false, &mut RngState::new(0)),
                &opts,
            )?;
            worst.entries_checked += report.entries_checked;
            if report.max_relative_error >= worst.max_relative_error {
                worst.max_relative_error = report.max_relative_error;
                worst.worst_param = report.worst().map(|p| p.name.clone());
            }
        }
        worst.passed = worst.max_relative_error < settings.tolerance;
        out.push(worst);
    }
    Ok(out)
}

/// Writes `dataset` as bag-CSV plus, when instance labels exist, a
/// `<path>.instances.csv` sidecar of `bag_id,instance,label` rows.
pub fn write_synth(dataset: &Dataset, path: &Path) -> Result<Option<PathBuf>> {
    write_file(path, &bag_csv_string(dataset))?;
    if dataset.bags.iter().all(|b| b.instance_labels.is_none()) {
        return Ok(None);
    }
    let mut table = String::from("bag_id,instance,label\n");
    for bag in &dataset.bags {
        for (i, l) in bag.instance_labels.iter().flatten().enumerate() {
            writeln!(table, "{},{i},{l}", bag.bag_id).unwrap();
        }
    }
    let mut s = path.as_os_str().to_owned();
    s.push(".instances.csv");
    let sidecar = PathBuf::from(s);
    write_file(&sidecar, &table)?;
    Ok(Some(sidecar))
}

pub fn generate_synth(config: &SynthConfig, seed: u64, path: &Path) -> Result<(Dataset, Option<PathBuf>)> {
    let dataset = synth_witness(config, seed)?;
    let sidecar = write_synth(&dataset, path)?;
    Ok((dataset, sidecar))
}
