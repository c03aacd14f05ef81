use crate::error::{Error, Result};
use crate::hyplayers::{bce_from_logit, prob_from_logit, Label};

use super::{Model, PairSample};

/// Binary confusion counts with "change" as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Change, Label::Change) => self.tp += 1,
            (Label::Change, Label::NoChange) => self.fp += 1,
            (Label::NoChange, Label::Change) => self.fn_ += 1,
            (Label::NoChange, Label::NoChange) => self.tn += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `2PR / (P + R)`, zero when `P + R = 0`.
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub loss: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

/// Accuracy and F1 with prediction `p̂ ≥ threshold`, plus the mean Hyp-BCE loss.
pub fn evaluate(dataset: &[PairSample], model: &Model, threshold: f64) -> Result<Metrics> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut confusion = Confusion::default();
    let mut loss = 0.0;
    for s in dataset {
        let logit = model.logit(s)?;
        let p = prob_from_logit(logit);
        loss += bce_from_logit(logit, s.label).0;
        confusion.record(Label::from_bool(p >= threshold), s.label);
    }
    Ok(Metrics {
        loss: loss / dataset.len() as f64,
        accuracy: confusion.accuracy(),
        f1: confusion.f1(),
        confusion,
    })
}
