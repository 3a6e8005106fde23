//! Task construction and scoring: neutral augmentation, sentence-balanced
//! three-fold splits, document-level majority voting and macro-F1.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AttitudeRecord, Document};
use crate::dataset::Example;
use crate::encoders::Model;
use crate::error::{Error, Result};
use crate::label::{Label, Scale};

/// Adds a neutral attitude for every ordered pair of distinct synonym groups
/// that co-occur in some sentence and are not already annotated.
pub fn augment_neutral(doc: &Document) -> Result<Vec<AttitudeRecord>> {
    let annotated: HashSet<(&str, &str)> =
        doc.attitudes.iter().map(|a| (a.subject.as_str(), a.object.as_str())).collect();
    let mut pairs: BTreeSet<(String, String)> = BTreeSet::new();
    for sentence in doc.marked_sentences()? {
        let groups: BTreeSet<&str> = sentence.entities().map(|e| e.synonym_group.as_str()).collect();
        for &a in &groups {
            for &b in &groups {
                if a != b && !annotated.contains(&(a, b)) {
                    pairs.insert((a.to_string(), b.to_string()));
                }
            }
        }
    }
    let mut out = doc.attitudes.clone();
    out.extend(pairs.into_iter().map(|(s, o)| AttitudeRecord::new(s, o, Label::Neu)));
    Ok(out)
}

/// Attitudes a document contributes to a task: sentiment attitudes only in
/// the two-scale task, annotation plus neutral augmentation in the
/// three-scale task.
pub fn task_attitudes(doc: &Document, scale: Scale) -> Result<Vec<AttitudeRecord>> {
    match scale {
        Scale::Two => Ok(doc.attitudes.iter().filter(|a| a.label.is_sentiment()).cloned().collect()),
        Scale::Three => augment_neutral(doc),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub doc_ids: Vec<String>,
    pub sentence_count: usize,
}

/// Greedy sentence-balanced 3-way partition.
///
/// Documents are shuffled with `seed` (which only decides the order among
/// equally long documents), sorted by descending sentence count, and each
/// is given to the fold with the fewest sentences so far (lowest index on
/// ties).
pub fn split_cv3(docs: &[Document], seed: u64) -> Result<[Fold; 3]> {
    if docs.len() < 3 {
        return Err(Error::InvalidArgument(format!("cross-validation needs at least 3 documents, got {}", docs.len())));
    }
    let mut order: Vec<(usize, &str)> = docs.iter().map(|d| (d.sentence_count(), d.doc_id.as_str())).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by_key(|&(count, _)| std::cmp::Reverse(count));
    let mut folds: [Fold; 3] = Default::default();
    for (count, id) in order {
        let lightest = (0..3).min_by_key(|&i| (folds[i].sentence_count, i)).expect("three folds");
        folds[lightest].doc_ids.push(id.to_string());
        folds[lightest].sentence_count += count;
    }
    Ok(folds)
}

/// Document-level pair label from its context predictions. Ties go to
/// neutral in the three-scale task and to positive in the two-scale task.
pub fn majority_vote(votes: &[Label], scale: Scale) -> Label {
    let count = |l: Label| votes.iter().filter(|&&v| v == l).count();
    let counts: Vec<(Label, usize)> = scale.labels().iter().map(|&l| (l, count(l))).collect();
    let best = counts.iter().map(|c| c.1).max().unwrap_or(0);
    let winners: Vec<Label> = counts.iter().filter(|c| c.1 == best).map(|c| c.0).collect();
    if winners.len() == 1 {
        return winners[0];
    }
    if winners.len() > 1 {
        log::debug!("vote tie between {winners:?}");
    }
    match scale {
        Scale::Three => Label::Neu,
        Scale::Two => Label::Pos,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPrediction {
    pub doc_id: String,
    pub subject: String,
    pub object: String,
    pub gold: Label,
    pub pred: Label,
}

/// Per-class confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ClassCounts {
    /// F1 of the class, or `None` when the class is absent from both gold
    /// and predictions.
    pub fn f1(self) -> Option<f64> {
        if self.tp + self.fp + self.fn_ == 0 {
            return None;
        }
        let precision = if self.tp + self.fp == 0 { 0.0 } else { self.tp as f64 / (self.tp + self.fp) as f64 };
        let recall = if self.tp + self.fn_ == 0 { 0.0 } else { self.tp as f64 / (self.tp + self.fn_) as f64 };
        Some(if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) })
    }
}

/// Positive/negative F1 of one document; `None` when neither class occurs
/// in its gold labels or predictions.
pub fn document_f1(preds: &[&PairPrediction]) -> Option<f64> {
    let scores: Vec<f64> = [Label::Pos, Label::Neg]
        .into_iter()
        .filter_map(|class| {
            let mut c = ClassCounts::default();
            for p in preds {
                match (p.gold == class, p.pred == class) {
                    (true, true) => c.tp += 1,
                    (false, true) => c.fp += 1,
                    (true, false) => c.fn_ += 1,
                    (false, false) => {}
                }
            }
            c.f1()
        })
        .collect();
    (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Macro-F1: the positive/negative average per document, averaged over the
/// documents where it is defined. Zero when no document is scoreable.
pub fn macro_f1(preds: &[PairPrediction]) -> f64 {
    let mut by_doc: BTreeMap<&str, Vec<&PairPrediction>> = BTreeMap::new();
    for p in preds {
        by_doc.entry(p.doc_id.as_str()).or_default().push(p);
    }
    let scores: Vec<f64> = by_doc.values().filter_map(|ps| document_f1(ps)).collect();
    if scores.is_empty() {
        0.0
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

fn check_scale(model: &Model, scale: Scale) -> Result<()> {
    if model.config().classes != scale.class_count() {
        return Err(Error::InvalidArgument(format!(
            "model predicts {} classes but the task has {}",
            model.config().classes,
            scale.class_count()
        )));
    }
    Ok(())
}

/// Document-level prediction for one example by majority vote over its
/// contexts. An example without contexts is not scored in the two-scale
/// task (`None`) and is predicted neutral in the three-scale task.
pub fn predict_example(model: &Model, ex: &Example, scale: Scale) -> Result<Option<PairPrediction>> {
    check_scale(model, scale)?;
    let pred = if ex.inputs.is_empty() {
        match scale {
            Scale::Two => return Ok(None),
            Scale::Three => Label::Neu,
        }
    } else {
        let votes = ex
            .inputs
            .iter()
            .map(|x| {
                let class = model.predict_class(x)?;
                Ok(scale.label_of(class).expect("class within scale"))
            })
            .collect::<Result<Vec<_>>>()?;
        majority_vote(&votes, scale)
    };
    Ok(Some(PairPrediction {
        doc_id: ex.doc_id.clone(),
        subject: ex.attitude.subject.clone(),
        object: ex.attitude.object.clone(),
        gold: ex.attitude.label,
        pred,
    }))
}

/// [`predict_example`] over a slice, dropping unscored examples.
pub fn predict_examples(model: &Model, examples: &[Example], scale: Scale) -> Result<Vec<PairPrediction>> {
    check_scale(model, scale)?;
    examples
        .iter()
        .filter_map(|ex| predict_example(model, ex, scale).transpose())
        .collect()
}

/// `doc_id<TAB>subject<TAB>object<TAB>gold<TAB>pred` lines.
pub fn format_predictions(preds: &[PairPrediction]) -> String {
    let mut s = String::new();
    for p in preds {
        let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}", p.doc_id, p.subject, p.object, p.gold, p.pred);
    }
    s
}
