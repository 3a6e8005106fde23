//! Bag-structured training: per-bag maximal cross-entropy, AdaDelta steps,
//! periodic train-set evaluation and the F1 stopping rule.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::dataset::Example;
use crate::encoders::Model;
use crate::error::{Error, Result};
use crate::evaluation::{macro_f1, predict_example, predict_examples};
use crate::label::Scale;
use crate::optim::AdaDeltaState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Bags per minibatch.
    pub l_batch: usize,
    /// Contexts per bag.
    pub t_bag: usize,
    pub max_epochs: usize,
    pub eval_every: usize,
    /// Training stops once train-set F1 exceeds this value at an
    /// evaluation epoch; a value ≤ 0 stops at the first evaluation.
    pub stop_threshold: f64,
    pub rho: f64,
    pub epsilon: f64,
    /// Multiplier on the AdaDelta update; 1.0 is the standard rule.
    pub learning_rate: f64,
    /// Which training examples the stopping F1 is measured on.
    pub stop_on: StopSet,
}

/// Examples scored for the stopping rule when distant-supervision data is
/// mixed into training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopSet {
    /// Every training example, labeled and distant alike.
    #[default]
    Mixture,
    /// Only the manually labeled examples.
    Supervised,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            l_batch: 2,
            t_bag: 3,
            max_epochs: 150,
            eval_every: 10,
            stop_threshold: 0.85,
            rho: 0.95,
            epsilon: 1e-6,
            learning_rate: 1.0,
            stop_on: StopSet::Mixture,
        }
    }
}

impl TrainConfig {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("l_batch", self.l_batch), ("t_bag", self.t_bag), ("max_epochs", self.max_epochs), ("eval_every", self.eval_every)] {
            if v == 0 {
                out.push(format!("training.{name} must be at least 1"));
            }
        }
        if self.eval_every > self.max_epochs && self.max_epochs > 0 {
            out.push(format!(
                "training.eval_every ({}) exceeds training.max_epochs ({})",
                self.eval_every, self.max_epochs
            ));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            out.push(format!("training.rho must lie in (0, 1), got {}", self.rho));
        }
        if !(self.epsilon > 0.0) {
            out.push(format!("training.epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            out.push(format!("training.learning_rate must be positive, got {}", self.learning_rate));
        }
        out
    }
}

/// `t_bag` contexts of one attitude: indices into `Example::inputs` of
/// example `example`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bag {
    pub example: usize,
    pub contexts: Vec<usize>,
}

/// Groups each attitude's contexts into bags of exactly `t_bag`, filling a
/// short final bag by cycling through the attitude's contexts from the
/// start, then shuffles the bags.
pub fn compose_bags(context_counts: &[usize], t_bag: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Bag>> {
    if t_bag == 0 {
        return Err(Error::InvalidArgument("t_bag must be at least 1".into()));
    }
    if context_counts.is_empty() {
        return Err(Error::InvalidArgument("no attitudes to train on".into()));
    }
    let mut bags = Vec::new();
    for (example, &n) in context_counts.iter().enumerate() {
        if n == 0 {
            return Err(Error::InvalidArgument(format!("attitude {example} has no contexts")));
        }
        let bag_count = n.div_ceil(t_bag);
        for b in 0..bag_count {
            let contexts = (0..t_bag).map(|k| (b * t_bag + k) % n).collect();
            bags.push(Bag { example, contexts });
        }
    }
    bags.shuffle(rng);
    Ok(bags)
}

/// Consecutive groups of `l_batch` bags; the last group wraps around to the
/// first bags so every minibatch is full.
pub fn minibatches(bags: &[Bag], l_batch: usize) -> Vec<Vec<&Bag>> {
    if bags.is_empty() || l_batch == 0 {
        return Vec::new();
    }
    (0..bags.len().div_ceil(l_batch))
        .map(|i| (0..l_batch).map(|k| &bags[(i * l_batch + k) % bags.len()]).collect())
        .collect()
}

/// Maximum loss within each consecutive slice of `t_bag` losses.
pub fn bag_cost(losses: &[f64], t_bag: usize) -> Result<Vec<f64>> {
    if t_bag == 0 || !losses.len().is_multiple_of(t_bag) {
        return Err(Error::Shape(format!("{} losses do not split into bags of {t_bag}", losses.len())));
    }
    Ok(losses.chunks(t_bag).map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect())
}

/// Graph version of [`bag_cost`] summed over bags: the minibatch objective.
pub fn bag_objective(g: &mut Graph, losses: &[Var], t_bag: usize) -> Result<Var> {
    if t_bag == 0 || losses.is_empty() || !losses.len().is_multiple_of(t_bag) {
        return Err(Error::Shape(format!("{} losses do not split into bags of {t_bag}", losses.len())));
    }
    let mut costs = Vec::with_capacity(losses.len() / t_bag);
    for chunk in losses.chunks(t_bag) {
        let row = g.concat_cols(chunk)?;
        let col = g.transpose(row)?;
        costs.push(g.max_rows(col)?);
    }
    let all = g.concat_cols(&costs)?;
    Ok(g.sum(all))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub split: String,
    pub f1: f64,
    pub mean_cost: f64,
}

/// `epoch<TAB>split<TAB>f1<TAB>mean_cost` lines.
pub fn format_log(records: &[EpochRecord]) -> String {
    let mut s = String::new();
    for r in records {
        let _ = writeln!(s, "{}\t{}\t{:.6}\t{:.6}", r.epoch, r.split, r.f1, r.mean_cost);
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub epochs_run: usize,
    pub stopped_early: bool,
    pub log: Vec<EpochRecord>,
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Mean cross-entropy over all contexts of `examples` in inference mode.
fn mean_context_loss(model: &Model, examples: &[&Example], scale: Scale) -> Result<f64> {
    let mut total = 0.0;
    let mut n = 0usize;
    for ex in examples {
        let class = scale.class_of(ex.attitude.label).expect("filtered to task classes");
        for x in &ex.inputs {
            let (probs, _) = model.predict(x)?;
            total += -probs[class].max(crate::autodiff::PROB_FLOOR).ln();
            n += 1;
        }
    }
    Ok(if n == 0 { 0.0 } else { total / n as f64 })
}

/// Trains `model` in place on `train`.
///
/// Every `eval_every` epochs the train-set macro-F1 is computed (and, when
/// `heldout` is given, the held-out F1 for the log); training stops once
/// the train F1 exceeds `stop_threshold`. Examples without contexts or with
/// labels outside the task are ignored.
pub fn train(
    model: &mut Model,
    train: &[Example],
    heldout: Option<&[Example]>,
    scale: Scale,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    train_mixed(model, train, &[], heldout, scale, cfg, seed)
}

/// [`train`] on `supervised` followed by `distant`. With
/// [`StopSet::Supervised`] the stopping F1 ignores the distant examples.
pub fn train_mixed(
    model: &mut Model,
    supervised: &[Example],
    distant: &[Example],
    heldout: Option<&[Example]>,
    scale: Scale,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    if model.config().classes != scale.class_count() {
        return Err(Error::InvalidArgument(format!(
            "model has {} classes, task needs {}",
            model.config().classes,
            scale.class_count()
        )));
    }
    let keep = |e: &&Example| !e.inputs.is_empty() && scale.class_of(e.attitude.label).is_some();
    let usable: Vec<&Example> = supervised.iter().chain(distant).filter(keep).collect();
    let stop_set: Vec<&Example> = match cfg.stop_on {
        StopSet::Mixture => usable.clone(),
        StopSet::Supervised => supervised.iter().filter(keep).collect(),
    };
    if stop_set.is_empty() {
        log::warn!("no labeled examples to score for stopping; training runs to max_epochs");
    }
    if usable.is_empty() {
        return Err(Error::InvalidArgument("training corpus has no usable contexts".into()));
    }
    let counts: Vec<usize> = usable.iter().map(|e| e.inputs.len()).collect();
    let classes: Vec<usize> = usable.iter().map(|e| scale.class_of(e.attitude.label).expect("filtered")).collect();

    let mut opt = AdaDeltaState::new(model.params(), cfg.rho, cfg.epsilon)?;
    opt.learning_rate = cfg.learning_rate;
    let mut log = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed(seed, epoch));
        let bags = compose_bags(&counts, cfg.t_bag, &mut rng)?;
        let mut cost_sum = 0.0;
        let mut bag_count = 0usize;
        for batch in minibatches(&bags, cfg.l_batch) {
            let mut g = Graph::new();
            let mut losses = Vec::with_capacity(cfg.l_batch * cfg.t_bag);
            for bag in &batch {
                let ex = usable[bag.example];
                for &c in &bag.contexts {
                    let out = model.forward(&mut g, &ex.inputs[c], Some(&mut rng))?;
                    losses.push(g.cross_entropy(out.probs, classes[bag.example])?);
                }
            }
            let objective = bag_objective(&mut g, &losses, cfg.t_bag)?;
            let value = g.value(objective).item()?;
            if !value.is_finite() {
                let parameter = model.params().first_non_finite().unwrap_or("objective").to_string();
                return Err(Error::Divergence { epoch, parameter });
            }
            cost_sum += value;
            bag_count += batch.len();
            let grads = g.backward(objective)?.for_store(model.params());
            opt.step(model.params_mut(), &grads)?;
            if let Some(name) = model.params().first_non_finite() {
                return Err(Error::Divergence { epoch, parameter: name.to_string() });
            }
        }
        let mean_cost = cost_sum / bag_count as f64;
        log::debug!("epoch {epoch}: mean bag cost {mean_cost:.5}");

        if epoch % cfg.eval_every == 0 {
            let preds = stop_set
                .iter()
                .filter_map(|e| predict_example(model, e, scale).transpose())
                .collect::<Result<Vec<_>>>()?;
            let f1 = macro_f1(&preds);
            log::info!("epoch {epoch}: train F1 {f1:.4}, mean cost {mean_cost:.4}");
            log.push(EpochRecord { epoch, split: "train".into(), f1, mean_cost });
            if let Some(held) = heldout {
                let f1 = macro_f1(&predict_examples(model, held, scale)?);
                let refs: Vec<&Example> =
                    held.iter().filter(|e| scale.class_of(e.attitude.label).is_some()).collect();
                let loss = mean_context_loss(model, &refs, scale)?;
                log.push(EpochRecord { epoch, split: "test".into(), f1, mean_cost: loss });
            }
            if cfg.stop_threshold <= 0.0 || log.iter().rev().find(|r| r.split == "train").is_some_and(|r| r.f1 > cfg.stop_threshold) {
                return Ok(TrainOutcome { epochs_run: epoch, stopped_early: true, log });
            }
        }
    }
    Ok(TrainOutcome { epochs_run: cfg.max_epochs, stopped_early: false, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn bags_pad_by_repetition() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bags = compose_bags(&[3], 3, &mut rng).unwrap();
        assert_eq!(bags, vec![Bag { example: 0, contexts: vec![0, 1, 2] }]);
        let bags = compose_bags(&[1], 3, &mut rng).unwrap();
        assert_eq!(bags[0].contexts, vec![0, 0, 0]);
        let mut bags = compose_bags(&[4, 2, 7], 3, &mut rng).unwrap();
        let total: usize = bags.iter().map(|b| b.contexts.len()).sum();
        assert_eq!(total % 3, 0);
        bags.sort_by_key(|b| (b.example, b.contexts.clone()));
        assert_eq!(bags[0].contexts, vec![0, 1, 2]);
        assert_eq!(bags[1].contexts, vec![3, 0, 1]);
        assert!(compose_bags(&[], 3, &mut rng).is_err());
        assert!(compose_bags(&[0], 3, &mut rng).is_err());
    }

    #[test]
    fn bag_shuffle_is_seeded() {
        let a = compose_bags(&[2; 20], 3, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = compose_bags(&[2; 20], 3, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let c = compose_bags(&[2; 20], 3, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn minibatches_wrap() {
        let bags: Vec<Bag> = (0..5).map(|i| Bag { example: i, contexts: vec![0] }).collect();
        let mb = minibatches(&bags, 2);
        assert_eq!(mb.len(), 3);
        assert_eq!(mb[2].iter().map(|b| b.example).collect::<Vec<_>>(), vec![4, 0]);
    }

    #[test]
    fn bag_cost_examples() {
        assert_eq!(bag_cost(&[1.0, 2.0, 3.0, 0.0, 0.0, 5.0], 3).unwrap(), vec![3.0, 5.0]);
        assert_eq!(bag_cost(&[0.7; 6], 3).unwrap(), vec![0.7, 0.7]);
        assert!(bag_cost(&[1.0; 4], 3).is_err());
    }

    #[test]
    fn bag_objective_matches_oracle_and_routes_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let vals: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..4.0)).collect();
            let mut g = Graph::new();
            let vars: Vec<Var> = vals.iter().map(|&v| g.input(crate::tensor::Tensor::scalar(v))).collect();
            let obj = bag_objective(&mut g, &vars, 3).unwrap();
            let oracle: f64 = bag_cost(&vals, 3).unwrap().iter().sum();
            assert_eq!(g.value(obj).item().unwrap(), oracle);
            let grads = g.backward(obj).unwrap();
            for bag in 0..2 {
                let slice = &vals[bag * 3..bag * 3 + 3];
                let arg = (0..3).fold(0, |b, i| if slice[i] > slice[b] { i } else { b });
                for i in 0..3 {
                    let gi = grads.wrt(vars[bag * 3 + i]).map_or(0.0, |t| t.data()[0]);
                    assert_eq!(gi, if i == arg { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn config_problems_are_listed() {
        let cfg = TrainConfig { l_batch: 0, t_bag: 0, rho: 1.5, ..TrainConfig::default() };
        assert_eq!(cfg.problems().len(), 3);
        assert!(TrainConfig::default().problems().is_empty());
    }
}
