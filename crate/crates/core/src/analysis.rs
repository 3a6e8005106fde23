//! Attention-weight analysis: how much attention each term group receives
//! in sentiment (S) versus neutral (N) contexts.
//!
//! Per context, a group's weight is the attention mass on its terms. The
//! S and N weight samples are compared with the two-sample
//! Kolmogorov–Smirnov statistic and the difference of their means, and
//! smoothed with a Gaussian KDE for plotting.

use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::dataset::Example;
use crate::encoders::Model;
use crate::error::{Error, Result};
use crate::text::lexicon::{PosTag, SentimentLexicon};
use crate::text::terms::{Term, TermGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalysisGroup {
    Frames,
    Nouns,
    Prep,
    Sentiment,
    Verbs,
}

impl AnalysisGroup {
    pub const ALL: [AnalysisGroup; 5] =
        [AnalysisGroup::Frames, AnalysisGroup::Nouns, AnalysisGroup::Prep, AnalysisGroup::Sentiment, AnalysisGroup::Verbs];

    pub fn as_str(self) -> &'static str {
        match self {
            AnalysisGroup::Frames => "frames",
            AnalysisGroup::Nouns => "nouns",
            AnalysisGroup::Prep => "prep",
            AnalysisGroup::Sentiment => "sentiment",
            AnalysisGroup::Verbs => "verbs",
        }
    }

    /// Single-letter column heading.
    pub fn letter(self) -> char {
        self.as_str().chars().next().expect("non-empty").to_ascii_uppercase()
    }

    /// Default KDE plotting range.
    pub fn default_range(self) -> (f64, f64) {
        match self {
            AnalysisGroup::Frames | AnalysisGroup::Sentiment => (0.0, 0.4),
            AnalysisGroup::Nouns => (0.0, 0.5),
            AnalysisGroup::Prep => (0.0, 0.2),
            AnalysisGroup::Verbs => (0.0, 0.4),
        }
    }
}

impl fmt::Display for AnalysisGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Group of a context term, if any. Frames come first; words found in the
/// sentiment lexicon are never counted as nouns or verbs.
pub fn classify_term(term: &Term, sentiment: &SentimentLexicon) -> Option<AnalysisGroup> {
    match term.group {
        TermGroup::Frame { .. } => Some(AnalysisGroup::Frames),
        TermGroup::Word if sentiment.contains(&term.surface) => Some(AnalysisGroup::Sentiment),
        TermGroup::Word => match term.pos {
            PosTag::Prep => Some(AnalysisGroup::Prep),
            PosTag::Noun => Some(AnalysisGroup::Nouns),
            PosTag::Verb => Some(AnalysisGroup::Verbs),
            _ => None,
        },
        _ => None,
    }
}

/// Attention mass on the terms of `group`.
pub fn context_group_weight(alpha: &[f64], terms: &[Term], group: AnalysisGroup, sentiment: &SentimentLexicon) -> f64 {
    alpha
        .iter()
        .zip(terms)
        .filter(|(_, t)| classify_term(t, sentiment) == Some(group))
        .map(|(a, _)| a)
        .sum()
}

/// Empirical CDF with the strict convention `F(x) = P(X < x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::InvalidArgument("empirical CDF of an empty sample".into()));
        }
        if sample.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidArgument("sample contains NaN".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    /// Fraction of the sample strictly below `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.sorted.len() as f64
    }

    /// Fraction of the sample at or below `x` (the right limit of `eval`).
    pub fn eval_inclusive(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }
}

pub fn ecdf(sample: &[f64]) -> Result<Ecdf> {
    Ecdf::new(sample)
}

/// Two-sample Kolmogorov–Smirnov statistic: the largest gap between the
/// two empirical CDFs. Both CDFs are step functions that only change at
/// sample points, so checking both one-sided limits at every sample point
/// finds the supremum exactly.
pub fn ks_statistic(sample_s: &[f64], sample_n: &[f64]) -> Result<f64> {
    let fs = Ecdf::new(sample_s)?;
    let fn_ = Ecdf::new(sample_n)?;
    let mut d: f64 = 0.0;
    for &x in fs.values().iter().chain(fn_.values()) {
        d = d.max((fs.eval(x) - fn_.eval(x)).abs());
        d = d.max((fs.eval_inclusive(x) - fn_.eval_inclusive(x)).abs());
    }
    Ok(d)
}

fn mean(sample: &[f64]) -> f64 {
    sample.iter().sum::<f64>() / sample.len() as f64
}

/// `mean(S) − mean(N)`; positive when the group weighs more in sentiment contexts.
pub fn delta_mean(sample_s: &[f64], sample_n: &[f64]) -> Result<f64> {
    if sample_s.is_empty() || sample_n.is_empty() {
        return Err(Error::InvalidArgument("Δ-mean needs two non-empty samples".into()));
    }
    Ok(mean(sample_s) - mean(sample_n))
}

/// Bandwidth used when a sample has zero spread.
pub const FALLBACK_BANDWIDTH: f64 = 0.01;

/// Silverman's rule of thumb, `1.06 σ n^(-1/5)`.
pub fn silverman_bandwidth(sample: &[f64]) -> f64 {
    if sample.len() < 2 {
        return FALLBACK_BANDWIDTH;
    }
    let m = mean(sample);
    let var = sample.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (sample.len() - 1) as f64;
    let h = 1.06 * var.sqrt() * (sample.len() as f64).powf(-0.2);
    if h > 0.0 && h.is_finite() {
        h
    } else {
        FALLBACK_BANDWIDTH
    }
}

/// Gaussian KDE on `points` evenly spaced positions covering `range`.
pub fn kde_table(sample: &[f64], bandwidth: f64, range: (f64, f64), points: usize) -> Result<Vec<(f64, f64)>> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument(format!("KDE bandwidth must be positive, got {bandwidth}")));
    }
    if sample.is_empty() {
        return Err(Error::InvalidArgument("KDE of an empty sample".into()));
    }
    if points < 2 || !(range.1 > range.0) {
        return Err(Error::InvalidArgument("KDE grid needs at least 2 points over a non-empty range".into()));
    }
    let norm = 1.0 / (sample.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let step = (range.1 - range.0) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let x = range.0 + step * i as f64;
            let density = sample.iter().map(|&v| (-0.5 * ((x - v) / bandwidth).powi(2)).exp()).sum::<f64>() * norm;
            (x, density)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ContextClass {
    S,
    N,
}

impl ContextClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextClass::S => "S",
            ContextClass::N => "N",
        }
    }
}

/// Per-group weight samples over a set of contexts.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GroupSamples {
    pub sentiment: Vec<Vec<f64>>,
    pub neutral: Vec<Vec<f64>>,
}

impl GroupSamples {
    fn new() -> Self {
        Self { sentiment: vec![Vec::new(); 5], neutral: vec![Vec::new(); 5] }
    }

    pub fn sample(&self, group: AnalysisGroup, class: ContextClass) -> &[f64] {
        let i = AnalysisGroup::ALL.iter().position(|&g| g == group).expect("listed");
        match class {
            ContextClass::S => &self.sentiment[i],
            ContextClass::N => &self.neutral[i],
        }
    }
}

/// Statistics for one term group.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupStats {
    pub group: AnalysisGroup,
    pub d: f64,
    pub delta: f64,
    pub mean_s: f64,
    pub mean_n: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub model: String,
    pub s_contexts: usize,
    pub n_contexts: usize,
    pub groups: Vec<GroupStats>,
    #[serde(skip)]
    pub samples: GroupSamples,
}

impl AnalysisReport {
    pub fn group(&self, group: AnalysisGroup) -> &GroupStats {
        self.groups.iter().find(|g| g.group == group).expect("every group is reported")
    }

    /// Writes `group_class.tsv` KDE files (e.g. `frames_S.tsv`) into `dir`.
    pub fn write_kde(&self, dir: &Path, points: usize) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for group in AnalysisGroup::ALL {
            for class in [ContextClass::S, ContextClass::N] {
                let sample = self.samples.sample(group, class);
                if sample.is_empty() {
                    continue;
                }
                let table = kde_table(sample, silverman_bandwidth(sample), group.default_range(), points)?;
                let path = dir.join(format!("{}_{}.tsv", group.as_str(), class.as_str()));
                let body: String = table.iter().map(|(x, d)| format!("{x:.6}\t{d:.6}\n")).collect();
                std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model: {}  (S contexts: {}, N contexts: {})", self.model, self.s_contexts, self.n_contexts)?;
        let header: String = AnalysisGroup::ALL.iter().map(|g| format!("\t{}", g.letter())).collect();
        writeln!(f, "\nKS statistic D (S vs N)\nmodel{header}")?;
        write!(f, "{}", self.model)?;
        for g in &self.groups {
            write!(f, "\t{:.2}", g.d)?;
        }
        writeln!(f, "\n\nΔ-mean (S − N)\nmodel{header}")?;
        write!(f, "{}", self.model)?;
        for g in &self.groups {
            write!(f, "\t{:.2}", g.delta)?;
        }
        writeln!(f)
    }
}

/// Collects group weights of every context of `examples` under `model`'s
/// attention. Contexts of sentiment attitudes form S, neutral ones N.
pub fn collect_samples(model: &Model, examples: &[Example], sentiment: &SentimentLexicon) -> Result<GroupSamples> {
    if !model.kind().has_attention() {
        return Err(Error::InvalidArgument(format!("model kind `{}` has no attention to analyze", model.kind())));
    }
    let mut samples = GroupSamples::new();
    for ex in examples {
        let class = if ex.attitude.label.is_sentiment() { ContextClass::S } else { ContextClass::N };
        for (ctx, input) in ex.contexts.iter().zip(&ex.inputs) {
            let (_, trace) = model.predict(input)?;
            let alpha = trace
                .mean()
                .ok_or_else(|| Error::Contract(format!("model kind `{}` returned no attention", model.kind())))?;
            let target = match class {
                ContextClass::S => &mut samples.sentiment,
                ContextClass::N => &mut samples.neutral,
            };
            for (i, group) in AnalysisGroup::ALL.into_iter().enumerate() {
                target[i].push(context_group_weight(&alpha, &ctx.terms, group, sentiment));
            }
        }
    }
    Ok(samples)
}

/// Full analysis of an attention model over labeled examples.
pub fn analyze(model: &Model, examples: &[Example], sentiment: &SentimentLexicon) -> Result<AnalysisReport> {
    let samples = collect_samples(model, examples, sentiment)?;
    report_from_samples(model.kind().to_string(), samples)
}

pub fn report_from_samples(model: String, samples: GroupSamples) -> Result<AnalysisReport> {
    let (s_contexts, n_contexts) = (samples.sentiment[0].len(), samples.neutral[0].len());
    if s_contexts == 0 || n_contexts == 0 {
        return Err(Error::InvalidArgument(format!(
            "analysis needs both sentiment and neutral contexts (got {s_contexts} S, {n_contexts} N)"
        )));
    }
    let groups = AnalysisGroup::ALL
        .iter()
        .enumerate()
        .map(|(i, &group)| {
            let (s, n) = (&samples.sentiment[i], &samples.neutral[i]);
            Ok(GroupStats { group, d: ks_statistic(s, n)?, delta: delta_mean(s, n)?, mean_s: mean(s), mean_n: mean(n) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisReport { model, s_contexts, n_contexts, groups, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn term(group: TermGroup, surface: &str, pos: PosTag) -> Term {
        Term { group, surface: surface.into(), position: 0, pos, synonym_of: None }
    }

    fn lexicon() -> SentimentLexicon {
        SentimentLexicon::new([("good", "pos"), ("bad", "neg")])
    }

    fn sample_terms() -> Vec<Term> {
        use crate::text::lexicon::Polarity;
        vec![
            term(TermGroup::EntityMaskSubject, "$E_subj$", PosTag::Unknown),
            term(TermGroup::Frame { polarity: Polarity::Pos, negated: false }, "support", PosTag::Verb),
            term(TermGroup::Word, "good", PosTag::Noun),
            term(TermGroup::Word, "in", PosTag::Prep),
            term(TermGroup::Word, "city", PosTag::Noun),
            term(TermGroup::Word, "go", PosTag::Verb),
            term(TermGroup::Word, "quickly", PosTag::Adv),
            term(TermGroup::EntityMaskObject, "$E_obj$", PosTag::Unknown),
        ]
    }

    #[test]
    fn groups_follow_precedence() {
        let lex = lexicon();
        let got: Vec<_> = sample_terms().iter().map(|t| classify_term(t, &lex)).collect();
        use AnalysisGroup::*;
        assert_eq!(got, vec![None, Some(Frames), Some(Sentiment), Some(Prep), Some(Nouns), Some(Verbs), None, None]);
    }

    #[test]
    fn group_weights_match_loop_and_partition_unity() {
        let lex = lexicon();
        let terms = sample_terms();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..terms.len()).map(|_| rng.random::<f64>()).collect();
            let z: f64 = raw.iter().sum();
            let alpha: Vec<f64> = raw.iter().map(|x| x / z).collect();
            let mut total = 0.0;
            for g in AnalysisGroup::ALL {
                let mut oracle = 0.0;
                for i in 0..terms.len() {
                    if classify_term(&terms[i], &lex) == Some(g) {
                        oracle += alpha[i];
                    }
                }
                let w = context_group_weight(&alpha, &terms, g, &lex);
                assert!((w - oracle).abs() < 1e-15);
                total += w;
            }
            let residual: f64 = (0..terms.len()).filter(|&i| classify_term(&terms[i], &lex).is_none()).map(|i| alpha[i]).sum();
            assert!((total + residual - 1.0).abs() < 1e-6);
        }
        let uniform = vec![0.25; 4];
        let nouns = vec![term(TermGroup::Word, "city", PosTag::Noun); 4];
        assert!((context_group_weight(&uniform, &nouns, AnalysisGroup::Nouns, &lex) - 1.0).abs() < 1e-6);
        assert_eq!(context_group_weight(&uniform, &nouns, AnalysisGroup::Frames, &lex), 0.0);
    }

    #[test]
    fn ecdf_is_strict() {
        let f = ecdf(&[0.5]).unwrap();
        assert_eq!(f.eval(0.4), 0.0);
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(0.6), 1.0);
        let g = ecdf(&[0.2, 0.2, 0.7]).unwrap();
        assert!((g.eval(0.5) - 2.0 / 3.0).abs() < 1e-15);
        assert!(ecdf(&[]).is_err());
    }

    fn grid_sup(s: &[f64], n: &[f64]) -> f64 {
        let (fs, fn_) = (ecdf(s).unwrap(), ecdf(n).unwrap());
        (0..=10_000).map(|i| i as f64 * 1e-4).map(|x| (fs.eval(x) - fn_.eval(x)).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn ks_hand_cases() {
        assert_eq!(ks_statistic(&[0.1, 0.2], &[0.3]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[0.1, 0.4, 0.4], &[0.4, 0.1, 0.4]).unwrap(), 0.0);
        assert!(ks_statistic(&[], &[0.3]).is_err());
        assert!(ks_statistic(&[0.3], &[]).is_err());
    }

    #[test]
    fn ks_matches_grid_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            // Values on the 1e-3 lattice so every gap between CDF breakpoints
            // contains grid points.
            let k = rng.random_range(1..8);
            let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.random_range(0..=1000) as f64 / 1000.0).collect() };
            let s = draw(k);
            let n = draw(3);
            let d = ks_statistic(&s, &n).unwrap();
            assert!((d - grid_sup(&s, &n)).abs() < 1e-9);
            assert_eq!(d, ks_statistic(&n, &s).unwrap());
            assert!((0.0..=1.0).contains(&d));
        }
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_mean(&[0.2, 0.2], &[0.2]).unwrap(), 0.0);
        assert!((delta_mean(&[0.4], &[0.1]).unwrap() - 0.3).abs() < 1e-15);
        assert!(delta_mean(&[], &[0.1]).is_err());
    }

    fn trapezoid(t: &[(f64, f64)]) -> f64 {
        t.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
    }

    #[test]
    fn kde_properties() {
        let single = kde_table(&[0.2], 0.05, (0.0, 0.4), 41).unwrap();
        let peak = single.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).unwrap().0;
        assert_eq!(peak, 20);
        for i in 0..20 {
            assert!((single[20 - i].1 - single[20 + i].1).abs() < 1e-12);
        }
        let sample = [0.1, 0.15, 0.3, 0.32, 0.5];
        let wide = kde_table(&sample, 0.05, (-1.0, 2.0), 3001).unwrap();
        assert!((trapezoid(&wide) - 1.0).abs() < 1e-3);
        let max = |t: &[(f64, f64)]| t.iter().map(|p| p.1).fold(0.0, f64::max);
        let smoother = kde_table(&sample, 0.1, (-1.0, 2.0), 3001).unwrap();
        assert!(max(&smoother) < max(&wide));
        assert!(kde_table(&sample, 0.0, (0.0, 1.0), 10).is_err());
    }

    #[test]
    fn silverman_falls_back_on_constant_samples() {
        assert_eq!(silverman_bandwidth(&[0.3, 0.3, 0.3]), FALLBACK_BANDWIDTH);
        assert!(silverman_bandwidth(&[0.1, 0.2, 0.4]) > 0.0);
    }

    #[test]
    fn identical_sets_give_zero_statistics() {
        let s = vec![vec![0.1, 0.3, 0.2]; 5];
        let report = report_from_samples("m".into(), GroupSamples { sentiment: s.clone(), neutral: s }).unwrap();
        for g in &report.groups {
            assert_eq!(g.d, 0.0);
            assert_eq!(g.delta, 0.0);
        }
        let text = report.to_string();
        assert!(text.contains("model\tF\tN\tP\tS\tV"), "{text}");
    }
}
