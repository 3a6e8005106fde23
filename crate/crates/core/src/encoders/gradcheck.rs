//! Central finite-difference check of a model's parameter gradients.

use super::model::Model;
use crate::autodiff::Graph;
use crate::error::Result;
use crate::text::features::InputEmbedding;

/// Worst coordinate found by [`check_gradients`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub coordinates: usize,
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Relative error `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

fn loss(model: &Model, input: &InputEmbedding, class: usize) -> Result<f64> {
    let mut g = Graph::new();
    let out = model.forward(&mut g, input, None)?;
    let l = g.cross_entropy(out.probs, class)?;
    g.value(l).item()
}

/// Compares the backward-pass gradient of the inference-mode cross-entropy
/// loss against central differences with step `h`, over every coordinate of
/// every parameter.
pub fn check_gradients(
    model: &Model,
    input: &InputEmbedding,
    class: usize,
    h: f64,
    floor: f64,
) -> Result<GradCheckReport> {
    let mut g = Graph::new();
    let out = model.forward(&mut g, input, None)?;
    let l = g.cross_entropy(out.probs, class)?;
    let grads = g.backward(l)?.for_store(model.params());

    let mut report = GradCheckReport {
        coordinates: 0,
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    let mut probe = model.clone();
    for (k, id) in model.params().ids().enumerate() {
        for i in 0..model.params().get(id).numel() {
            let orig = model.params().get(id).data()[i];
            probe.params_mut().get_mut(id).data_mut()[i] = orig + h;
            let plus = loss(&probe, input, class)?;
            probe.params_mut().get_mut(id).data_mut()[i] = orig - h;
            let minus = loss(&probe, input, class)?;
            probe.params_mut().get_mut(id).data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = grads[k].data()[i];
            let err = relative_error(analytic, numeric, floor);
            report.coordinates += 1;
            if err > report.max_rel_error {
                report = GradCheckReport {
                    coordinates: report.coordinates,
                    max_rel_error: err,
                    worst_param: model.params().name(id).to_string(),
                    worst_index: i,
                    analytic,
                    numeric,
                };
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoders::{Combine, EncoderConfig, EncoderKind};
    use crate::tensor::Tensor;
    use crate::text::features::Feature;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_kind_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for kind in EncoderKind::ALL {
            let cfg = EncoderConfig {
                kind,
                window: 2,
                filters: 4,
                lstm_hidden: 5,
                mlp_hidden: 3,
                classes: 3,
                d_word: 1,
                d_feat: 1,
                n_max: 6,
                keep_prob: 0.8,
                combine: Combine::Concat,
            };
            let model = Model::new(cfg, 5).unwrap();
            let n = 6;
            let words = Tensor::matrix(n, 1, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let indices =
                std::array::from_fn(|f| (0..n).map(|_| rng.random_range(0..Feature::ALL[f].rows(6))).collect());
            let input = InputEmbedding { words, indices, subj_pos: 1, obj_pos: 4, n_max: 6 };
            let r = check_gradients(&model, &input, 2, 1e-4, 1e-6).unwrap();
            assert!(r.max_rel_error < 1e-5, "{kind}: {r:?}");
        }
    }

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0, 1e-6), 0.0);
        assert!((relative_error(1e-7, 0.0, 1e-6) - 0.1).abs() < 1e-12);
        assert!((relative_error(2.0, 1.0, 1e-6) - 0.5).abs() < 1e-12);
    }
}
