//! Bags, datasets and everything that produces them: file loaders, feature
//! normalization, stratified fold planning and a synthetic witness-bag generator.

mod bagcsv;
mod folds;
mod musk;
mod normalize;
mod synth;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numgrad::Matrix;

pub use bagcsv::{bag_csv_string, load_bag_csv, parse_bag_csv, write_bag_csv};
pub use folds::{stratified_kfold, FoldPlan};
pub use musk::{load_musk_c45, parse_musk_c45, write_musk_c45, MUSK_FEATURES};
pub use normalize::{normalize, NormStats, STD_FLOOR};
pub use synth::{synth_witness, SynthConfig};

/// Labeled set of instances; instance order is kept as read.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bag {
    pub bag_id: String,
    pub label: usize,
    /// `k × d_feat`, one instance per row.
    pub instances: Matrix,
    /// Ground-truth witness flags, only ever set by synthetic generators.
    pub instance_labels: Option<Vec<u8>>,
}

impl Bag {
    pub fn new(bag_id: impl Into<String>, label: usize, instances: Matrix) -> Result<Self> {
        let bag = Self {
            bag_id: bag_id.into(),
            label,
            instances,
            instance_labels: None,
        };
        bag.validate()?;
        Ok(bag)
    }

    pub fn with_instance_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        self.instance_labels = Some(labels);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.instances.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d_feat(&self) -> usize {
        self.instances.cols()
    }

    /// `Some(true)` when the bag label agrees with "positive iff it holds a witness";
    /// `None` when no instance labels are known.
    pub fn satisfies_standard_assumption(&self) -> Option<bool> {
        let labels = self.instance_labels.as_ref()?;
        let has_witness = labels.iter().any(|&l| l == 1);
        Some(has_witness == (self.label == 1))
    }

    /// Same bag with its instances reordered; instance labels follow.
    pub fn permuted(&self, order: &[usize]) -> Bag {
        Bag {
            bag_id: self.bag_id.clone(),
            label: self.label,
            instances: self.instances.select_rows(order),
            instance_labels: self
                .instance_labels
                .as_ref()
                .map(|l| order.iter().map(|&i| l[i]).collect()),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.instances.rows() == 0 {
            return Err(Error::Domain(format!("bag `{}` has no instances", self.bag_id)));
        }
        if let Some(labels) = &self.instance_labels {
            if labels.len() != self.len() {
                return Err(Error::shape(
                    "instance labels",
                    format!("{} instances", self.len()),
                    format!("{} labels", labels.len()),
                ));
            }
            if labels.iter().any(|&l| l > 1) {
                return Err(Error::Domain(format!("bag `{}` has instance labels outside {{0,1}}", self.bag_id)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub bags: Vec<Bag>,
    pub d_feat: usize,
    pub class_count: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, bags: Vec<Bag>, class_count: usize) -> Result<Self> {
        let name = name.into();
        let d_feat = bags
            .first()
            .map(Bag::d_feat)
            .ok_or_else(|| Error::Domain(format!("dataset `{name}` has no bags")))?;
        if class_count < 2 {
            return Err(Error::Domain(format!("dataset `{name}` needs at least 2 classes")));
        }
        let mut seen = HashSet::new();
        for bag in &bags {
            bag.validate()?;
            if bag.d_feat() != d_feat {
                return Err(Error::shape(
                    "dataset feature width",
                    format!("{d_feat} features"),
                    format!("bag `{}` with {}", bag.bag_id, bag.d_feat()),
                ));
            }
            if bag.label >= class_count {
                return Err(Error::Domain(format!(
                    "bag `{}` label {} out of range for {class_count} classes",
                    bag.bag_id, bag.label
                )));
            }
            if !seen.insert(bag.bag_id.as_str()) {
                return Err(Error::Domain(format!("duplicate bag id `{}`", bag.bag_id)));
            }
        }
        Ok(Self {
            name,
            bags,
            d_feat,
            class_count,
        })
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn instance_count(&self) -> usize {
        self.bags.iter().map(Bag::len).sum()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for b in &self.bags {
            counts[b.label] += 1;
        }
        counts
    }

    /// Bags at `indices`, cloned, in that order.
    pub fn subset(&self, indices: &[usize]) -> Vec<Bag> {
        indices.iter().map(|&i| self.bags[i].clone()).collect()
    }
}
