//! Two-level classifier: discharge vs. thermal at the root, then a 3-class
//! branch model for the chosen superclass. Routing is hard (argmax at the root).

use serde::{Deserialize, Serialize};

use crate::boost::{self, BoostedEnsemble, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{FaultClass, SuperClass};

/// Per-stage training settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyConfig {
    pub root: TrainConfig,
    pub discharge: TrainConfig,
    pub thermal: TrainConfig,
}

impl HierarchyConfig {
    pub fn uniform(config: TrainConfig) -> Self {
        Self {
            root: config.clone(),
            discharge: config.clone(),
            thermal: config,
        }
    }
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self::uniform(TrainConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalModel {
    pub root: BoostedEnsemble,
    pub discharge: BoostedEnsemble,
    pub thermal: BoostedEnsemble,
    pub feature_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalPrediction {
    pub fault: FaultClass,
    pub superclass: SuperClass,
    /// `[discharge, thermal]`.
    pub root_probs: Vec<f64>,
    /// Probabilities over the chosen superclass's three members.
    pub branch_probs: Vec<f64>,
    /// Root probability of the chosen superclass times branch probability of the fault.
    pub confidence: f64,
}

impl HierarchicalModel {
    /// Model with no trees; every stage predicts uniformly.
    pub fn untrained(feature_count: usize) -> Self {
        Self {
            root: BoostedEnsemble::empty(2, feature_count),
            discharge: BoostedEnsemble::empty(3, feature_count),
            thermal: BoostedEnsemble::empty(3, feature_count),
            feature_count,
        }
    }

    pub fn branch(&self, superclass: SuperClass) -> &BoostedEnsemble {
        match superclass {
            SuperClass::Discharge => &self.discharge,
            SuperClass::Thermal => &self.thermal,
        }
    }
}

fn branch_rows(
    x: &[Vec<f64>],
    y: &[FaultClass],
    superclass: SuperClass,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    x.iter()
        .zip(y)
        .filter(|(_, c)| c.superclass() == superclass)
        .map(|(row, c)| (row.clone(), c.branch_index()))
        .unzip()
}

fn distinct(labels: &[usize]) -> usize {
    let mut seen = [false; 3];
    for &l in labels {
        seen[l] = true;
    }
    seen.iter().filter(|&&s| s).count()
}

pub fn train_hierarchy(
    x: &[Vec<f64>],
    y: &[FaultClass],
    config: &HierarchyConfig,
) -> Result<HierarchicalModel> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(y.len(), x.len()));
    }
    let feature_count = x.first().map_or(0, Vec::len);
    let (dx, dy) = branch_rows(x, y, SuperClass::Discharge);
    let (tx, ty) = branch_rows(x, y, SuperClass::Thermal);
    for (branch, labels) in [("discharge", &dy), ("thermal", &ty)] {
        let found = distinct(labels);
        if found < 2 {
            return Err(Error::MissingBranchData { branch, found });
        }
    }

    let root_labels: Vec<usize> = y.iter().map(|c| c.superclass().index()).collect();
    let root = boost::train(x, &root_labels, 2, &config.root)?;
    let (discharge, thermal) = rayon::join(
        || boost::train(&dx, &dy, 3, &config.discharge),
        || boost::train(&tx, &ty, 3, &config.thermal),
    );
    Ok(HierarchicalModel {
        root,
        discharge: discharge?,
        thermal: thermal?,
        feature_count,
    })
}

pub fn predict_hierarchy(model: &HierarchicalModel, x: &[f64]) -> Result<HierarchicalPrediction> {
    if x.len() != model.feature_count {
        return Err(Error::DimensionMismatch {
            expected: model.feature_count,
            actual: x.len(),
        });
    }
    let root = model.root.predict(x)?;
    let superclass = SuperClass::ALL[root.class];
    let branch = model.branch(superclass).predict(x)?;
    let fault = superclass.members()[branch.class];
    Ok(HierarchicalPrediction {
        fault,
        superclass,
        confidence: root.probs[root.class] * branch.probs[branch.class],
        root_probs: root.probs,
        branch_probs: branch.probs,
    })
}
