use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::labels::{Labeling, MetaProperty};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCounts {
    pub correct: u64,
    pub incorrect: u64,
}

impl PropertyCounts {
    pub fn total(&self) -> u64 {
        self.correct + self.incorrect
    }

    /// `correct / total`, or 0 when nothing was counted.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.correct as f64 / n as f64,
        }
    }
}

/// Correct/incorrect counts for I, U, R and D.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AccuracyCounts([PropertyCounts; 4]);

impl AccuracyCounts {
    pub fn get(&self, p: MetaProperty) -> PropertyCounts {
        self.0[p.index()]
    }

    pub fn get_mut(&mut self, p: MetaProperty) -> &mut PropertyCounts {
        &mut self.0[p.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (MetaProperty, PropertyCounts)> + '_ {
        MetaProperty::ALL.into_iter().map(|p| (p, self.get(p)))
    }
}

impl Add for AccuracyCounts {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for AccuracyCounts {
    fn add_assign(&mut self, rhs: Self) {
        for p in MetaProperty::ALL {
            let c = self.get_mut(p);
            c.correct += rhs.get(p).correct;
            c.incorrect += rhs.get(p).incorrect;
        }
    }
}

/// Scores a prediction against gold, property by property. A missing
/// predicted value counts as incorrect.
pub fn compute_accuracy(pred: &Labeling, gold: &Labeling) -> Result<AccuracyCounts, EvalError> {
    if let Some(extra) = pred.classes().find(|c| gold.get(c.as_str()).is_none()) {
        return Err(EvalError::ClassSetMismatch(extra.to_string()));
    }
    let mut counts = AccuracyCounts::default();
    for (class, gold_labels) in gold.iter() {
        for (p, expected) in gold_labels.values() {
            let slot = counts.get_mut(p);
            if pred.value(class.as_str(), p) == Some(expected) {
                slot.correct += 1;
            } else {
                slot.incorrect += 1;
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyScore {
    pub correct: u64,
    pub incorrect: u64,
    pub accuracy: f64,
}

impl From<PropertyCounts> for PropertyScore {
    fn from(c: PropertyCounts) -> Self {
        Self {
            correct: c.correct,
            incorrect: c.incorrect,
            accuracy: c.accuracy(),
        }
    }
}

/// Accumulated per-property results of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub config_descriptor: String,
    pub trials: u64,
    pub per_property: BTreeMap<MetaProperty, PropertyScore>,
}

impl AccuracyReport {
    pub fn new(config_descriptor: impl Into<String>, trials: u64, counts: AccuracyCounts) -> Self {
        Self {
            config_descriptor: config_descriptor.into(),
            trials,
            per_property: counts.iter().map(|(p, c)| (p, c.into())).collect(),
        }
    }

    pub fn accuracy(&self, p: MetaProperty) -> f64 {
        self.per_property.get(&p).map_or(0.0, |s| s.accuracy)
    }

    pub fn counts(&self) -> AccuracyCounts {
        let mut counts = AccuracyCounts::default();
        for (&p, s) in &self.per_property {
            *counts.get_mut(p) = PropertyCounts {
                correct: s.correct,
                incorrect: s.incorrect,
            };
        }
        counts
    }
}

/// Sums reports of the same configuration run on different benchmarks.
pub fn pool_reports(config_descriptor: impl Into<String>, reports: &[AccuracyReport]) -> AccuracyReport {
    let counts = reports
        .iter()
        .fold(AccuracyCounts::default(), |acc, r| acc + r.counts());
    let trials = reports.iter().map(|r| r.trials).sum();
    AccuracyReport::new(config_descriptor, trials, counts)
}
