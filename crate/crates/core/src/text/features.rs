//! Per-term auxiliary feature indices and the assembled input embedding.
//!
//! Every term row of the input embedding is
//! `word ∥ d_obj ∥ d_subj ∥ sd_obj ∥ sd_subj ∥ pos ∥ a0a1`, where each
//! auxiliary part is a row of a learnable table selected by the indices
//! computed here.

use serde::{Deserialize, Serialize};

use super::embedding::WordEmbedder;
use super::lexicon::{Polarity, PosTag};
use super::terms::{Context, Role, TermGroup};
use crate::error::Result;
use crate::tensor::Tensor;

/// The six auxiliary feature tables, in row-assembly order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Feature {
    DistObj,
    DistSubj,
    SynDistObj,
    SynDistSubj,
    Pos,
    A0A1,
}

impl Feature {
    pub const ALL: [Feature; 6] =
        [Feature::DistObj, Feature::DistSubj, Feature::SynDistObj, Feature::SynDistSubj, Feature::Pos, Feature::A0A1];

    pub fn name(self) -> &'static str {
        match self {
            Feature::DistObj => "feat.dist_obj",
            Feature::DistSubj => "feat.dist_subj",
            Feature::SynDistObj => "feat.syn_dist_obj",
            Feature::SynDistSubj => "feat.syn_dist_subj",
            Feature::Pos => "feat.pos",
            Feature::A0A1 => "feat.a0a1",
        }
    }

    /// Number of table rows for a given `n_max`.
    pub fn rows(self, n_max: usize) -> usize {
        match self {
            Feature::DistObj | Feature::DistSubj => 2 * n_max + 1,
            Feature::SynDistObj | Feature::SynDistSubj => n_max + 1,
            Feature::Pos => PosTag::COUNT,
            Feature::A0A1 => Polarity::COUNT,
        }
    }
}

/// Table row of a signed distance, clipped to `[-n_max, n_max]`.
pub fn signed_distance_index(distance: i64, n_max: usize) -> usize {
    let n = n_max as i64;
    (distance.clamp(-n, n) + n) as usize
}

/// Table row of an absolute distance, clipped to `n_max`.
pub fn absolute_distance_index(distance: usize, n_max: usize) -> usize {
    distance.min(n_max)
}

/// Model input for one context: fixed word vectors plus feature indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEmbedding {
    /// `[n x d_word]`.
    pub words: Tensor,
    /// `indices[f][i]` is term `i`'s row in table `Feature::ALL[f]`.
    pub indices: [Vec<usize>; 6],
    pub subj_pos: usize,
    pub obj_pos: usize,
    pub n_max: usize,
}

impl InputEmbedding {
    pub fn len(&self) -> usize {
        self.words.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature(&self, f: Feature) -> &[usize] {
        let i = Feature::ALL.iter().position(|&g| g == f).expect("feature listed in ALL");
        &self.indices[i]
    }

    /// Full `[n x m]` matrix given the current feature tables (in
    /// `Feature::ALL` order).
    pub fn assemble(&self, tables: &[&Tensor; 6]) -> Tensor {
        let n = self.len();
        let mut data = Vec::new();
        for i in 0..n {
            data.extend_from_slice(self.words.row_slice(i));
            for (f, table) in tables.iter().enumerate() {
                data.extend_from_slice(table.row_slice(self.indices[f][i]));
            }
        }
        let m = data.len() / n;
        Tensor::matrix(n, m, data).expect("consistent row widths")
    }

    /// `[n_max x m]` zero-padded matrix and the mask of real rows.
    pub fn padded(&self, tables: &[&Tensor; 6]) -> (Tensor, Vec<bool>) {
        let x = self.assemble(tables);
        let rows = self.n_max.max(self.len());
        let mut data = x.data().to_vec();
        data.resize(rows * x.cols(), 0.0);
        let mask = (0..rows).map(|i| i < self.len()).collect();
        (Tensor::matrix(rows, x.cols(), data).expect("padded shape"), mask)
    }
}

/// Nearest position (by absolute distance) among `candidates`.
fn nearest(i: usize, candidates: &[usize]) -> usize {
    candidates.iter().map(|&c| c.abs_diff(i)).min().unwrap_or(0)
}

/// Computes word vectors and feature indices for a context.
pub fn assemble_features(context: &Context, embedder: &WordEmbedder, n_max: usize) -> Result<InputEmbedding> {
    let n = context.len();
    let d = embedder.dim();
    let mut words = Vec::with_capacity(n * d);
    for t in &context.terms {
        words.extend(embedder.embed_term(t));
    }

    let synonyms = |role: Role, own: usize| -> Vec<usize> {
        let mut v: Vec<usize> = context
            .terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.group == TermGroup::EntityMaskOther && t.synonym_of == Some(role))
            .map(|(i, _)| i)
            .collect();
        v.push(own);
        v
    };
    let syn_obj = synonyms(Role::Object, context.obj_pos);
    let syn_subj = synonyms(Role::Subject, context.subj_pos);

    let mut indices: [Vec<usize>; 6] = Default::default();
    for (i, t) in context.terms.iter().enumerate() {
        indices[0].push(signed_distance_index(i as i64 - context.obj_pos as i64, n_max));
        indices[1].push(signed_distance_index(i as i64 - context.subj_pos as i64, n_max));
        indices[2].push(absolute_distance_index(nearest(i, &syn_obj), n_max));
        indices[3].push(absolute_distance_index(nearest(i, &syn_subj), n_max));
        let pos = if t.group == TermGroup::Word { t.pos } else { PosTag::Unknown };
        indices[4].push(pos.index());
        indices[5].push(t.polarity().index());
    }

    Ok(InputEmbedding {
        words: Tensor::matrix(n, d, words)?,
        indices,
        subj_pos: context.subj_pos,
        obj_pos: context.obj_pos,
        n_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label;
    use crate::text::embedding::EmbeddingModel;
    use crate::text::lexicon::{FrameLexicon, PosTable};
    use crate::text::terms::TextProcessor;

    fn setup() -> (TextProcessor, WordEmbedder) {
        let frames = FrameLexicon::from_pairs([("support", Polarity::Pos)]);
        let pos = PosTable::new([("meets", PosTag::Verb), ("in", PosTag::Prep)]);
        let model = EmbeddingModel::parse("support 1 1\nmeets 0 1\n", "m").unwrap();
        (TextProcessor::new(frames, pos).with_negation("not"), WordEmbedder::new(model, 3))
    }

    #[test]
    fn participant_distances_and_defaults() {
        let (p, e) = setup();
        let ctx = p.parse_context("x [[A|a]] meets y support [[B|b]] in", "a", "b", Label::Pos).unwrap().unwrap();
        let emb = assemble_features(&ctx, &e, 50).unwrap();
        assert_eq!(emb.len(), 7);
        // Term at the subject position has signed subject distance 0.
        assert_eq!(emb.feature(Feature::DistSubj)[ctx.subj_pos], signed_distance_index(0, 50));
        assert_eq!(emb.feature(Feature::DistSubj)[ctx.subj_pos], 50);
        // No synonyms: synonym distance equals |participant distance|.
        for i in 0..emb.len() {
            assert_eq!(emb.feature(Feature::SynDistObj)[i], i.abs_diff(ctx.obj_pos));
            assert_eq!(emb.feature(Feature::SynDistSubj)[i], i.abs_diff(ctx.subj_pos));
        }
        let support = ctx.terms.iter().position(|t| t.surface == "support").unwrap();
        assert_eq!(emb.feature(Feature::A0A1)[support], Polarity::Pos.index());
        let meets = ctx.terms.iter().position(|t| t.surface == "meets").unwrap();
        assert_eq!(emb.feature(Feature::A0A1)[meets], Polarity::Neu.index());
        assert_eq!(emb.feature(Feature::Pos)[meets], PosTag::Verb.index());
        assert_eq!(emb.feature(Feature::Pos)[ctx.subj_pos], PosTag::Unknown.index());
        assert_eq!(emb.feature(Feature::Pos)[support], PosTag::Unknown.index());
    }

    #[test]
    fn synonym_distance_uses_nearest_mention() {
        let (p, e) = setup();
        let ctx = p
            .parse_context("[[A|a1|ga]] [[B|b]] q q q [[A2|a2|ga]] r", "ga", "b", Label::Pos)
            .unwrap()
            .unwrap();
        let emb = assemble_features(&ctx, &e, 50).unwrap();
        // Last term "r" is 1 away from the synonym at 5, 6 away from the subject.
        assert_eq!(emb.feature(Feature::SynDistSubj)[6], 1);
        assert_eq!(emb.feature(Feature::DistSubj)[6], signed_distance_index(6, 50));
    }

    #[test]
    fn distances_clip() {
        assert_eq!(signed_distance_index(-80, 50), 0);
        assert_eq!(signed_distance_index(80, 50), 100);
        assert_eq!(absolute_distance_index(80, 50), 50);
    }

    #[test]
    fn lookup_is_total_and_padding_masks() {
        let (p, e) = setup();
        let ctx = p.parse_context("[[A|a]] support , [[B|b]]", "a", "b", Label::Pos).unwrap().unwrap();
        let n_max = 6;
        let emb = assemble_features(&ctx, &e, n_max).unwrap();
        let tables: Vec<Tensor> = Feature::ALL.iter().map(|f| Tensor::full(&[f.rows(n_max), 5], 0.5)).collect();
        let refs: [&Tensor; 6] = std::array::from_fn(|i| &tables[i]);
        for (f, feat) in Feature::ALL.iter().enumerate() {
            assert!(emb.indices[f].iter().all(|&r| r < feat.rows(n_max)));
        }
        let (padded, mask) = emb.padded(&refs);
        assert_eq!(padded.shape(), &[6, 2 + 30]);
        assert_eq!(mask, vec![true, true, true, true, false, false]);
        assert!(padded.row_slice(5).iter().all(|&v| v == 0.0));
    }
}
