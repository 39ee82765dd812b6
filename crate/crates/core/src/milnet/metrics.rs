use serde::{Deserialize, Serialize};

use super::model::Model;
use crate::error::{Error, Result};
use crate::mildata::Bag;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f_score: Vec<f64>,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_confusion(confusion: Vec<Vec<usize>>) -> Self {
        let classes = confusion.len();
        let total: usize = confusion.iter().flatten().sum();
        let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
        let mut precision = Vec::with_capacity(classes);
        let mut recall = Vec::with_capacity(classes);
        let mut f_score = Vec::with_capacity(classes);
        for c in 0..classes {
            let tp = confusion[c][c];
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            let actual: usize = confusion[c].iter().sum();
            let p = ratio(tp, predicted);
            let r = ratio(tp, actual);
            precision.push(p);
            recall.push(r);
            f_score.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
        }
        Self {
            accuracy: ratio(correct, total),
            precision,
            recall,
            f_score,
            confusion,
            total,
        }
    }

    pub fn from_predictions(class_count: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut confusion = vec![vec![0; class_count]; class_count];
        for (truth, predicted) in pairs {
            confusion[truth][predicted] += 1;
        }
        Self::from_confusion(confusion)
    }
}

/// Evaluation-mode metrics; binary models threshold `θ` at 0.5, multi-class models take the argmax.
pub fn evaluate(model: &Model, bags: &[Bag]) -> Result<Metrics> {
    if bags.is_empty() {
        return Err(Error::Domain("cannot evaluate on an empty set of bags".into()));
    }
    let class_count = model.config().class_count;
    let mut pairs = Vec::with_capacity(bags.len());
    for bag in bags {
        if bag.label >= class_count {
            return Err(Error::Domain(format!(
                "bag `{}` label {} out of range for {class_count} classes",
                bag.bag_id, bag.label
            )));
        }
        pairs.push((bag.label, model.predict(bag)?.predicted_class()));
    }
    Ok(Metrics::from_predictions(class_count, pairs))
}
