//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero when any of them fails.
//!
//! `cargo test -p attitude-core --test acceptance -- 2 5` runs a subset.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use attitude_core::analysis::{self, AnalysisGroup};
use attitude_core::annotate::synthetic::{DocSpec, VocabSpec, World};
use attitude_core::annotate::{annotate_corpus, AnnotationMode, NewsDoc, PairList};
use attitude_core::autodiff::Graph;
use attitude_core::config::RunConfig;
use attitude_core::corpus::Document;
use attitude_core::dataset::{Example, Featurizer};
use attitude_core::encoders::layers::piecewise_max_pool;
use attitude_core::encoders::{check_gradients, Combine, EncoderConfig, EncoderKind, Model};
use attitude_core::evaluation::{macro_f1, predict_examples, PairPrediction};
use attitude_core::label::{Label, Scale};
use attitude_core::pipeline;
use attitude_core::tensor::Tensor;
use attitude_core::text::embedding::WordEmbedder;
use attitude_core::text::features::{Feature, InputEmbedding};
use attitude_core::text::lexicon::{FrameLexicon, PosTable};
use attitude_core::text::TextProcessor;
use attitude_core::training::{bag_cost, train, TrainConfig};

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

fn toy_config(kind: EncoderKind) -> EncoderConfig {
    // m = d_word + 6·d_feat = 7
    EncoderConfig {
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
    }
}

fn random_input(rng: &mut ChaCha8Rng, n: usize, d_word: usize, n_max: usize) -> InputEmbedding {
    let words = Tensor::matrix(n, d_word, (0..n * d_word).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
    let indices = std::array::from_fn(|f| (0..n).map(|_| rng.random_range(0..Feature::ALL[f].rows(n_max))).collect());
    let subj_pos = rng.random_range(0..n);
    let mut obj_pos = rng.random_range(0..n - 1);
    if obj_pos >= subj_pos {
        obj_pos += 1;
    }
    InputEmbedding { words, indices, subj_pos, obj_pos, n_max }
}

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut coords = 0;
    for kind in EncoderKind::ALL {
        let model = Model::new(toy_config(kind), 7).map_err(|e| e.to_string())?;
        let input = random_input(&mut rng, 6, 1, 6);
        let r = check_gradients(&model, &input, rng.random_range(0..3), 1e-4, 1e-6).map_err(|e| e.to_string())?;
        ensure(r.max_rel_error < 1e-5, || format!("{kind}: {r:?}"))?;
        worst = worst.max(r.max_rel_error);
        coords += r.coordinates;
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("6 kinds, {coords} coordinates, max relative error {worst:.2e}"))
}

fn pooling_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for case in 0..1000 {
        let n = rng.random_range(2..12);
        let t = rng.random_range(1..5);
        let data: Vec<f64> = (0..n * t).map(|_| rng.random_range(-5.0..5.0)).collect();
        let subj = rng.random_range(0..n);
        let obj = loop {
            let o = rng.random_range(0..n);
            if o != subj {
                break o;
            }
        };
        let mut g = Graph::new();
        let c = g.input(Tensor::matrix(n, t, data.clone()).unwrap());
        let p = piecewise_max_pool(&mut g, c, subj, obj).map_err(|e| e.to_string())?;

        let (a, b) = (subj.min(obj), subj.max(obj));
        let mut expected = vec![0.0; 3 * t];
        for (s, member) in [|i: usize, a: usize, _b: usize| i <= a, |i, a, b| a < i && i <= b, |i, _a, b| i > b]
            .into_iter()
            .enumerate()
        {
            for col in 0..t {
                let rows: Vec<f64> = (0..n).filter(|&i| member(i, a, b)).map(|i| data[i * t + col]).collect();
                if let Some(m) = rows.iter().copied().reduce(f64::max) {
                    expected[s * t + col] = m;
                }
            }
        }
        ensure(g.value(p).data() == expected.as_slice(), || format!("case {case}: {:?} vs {expected:?}", g.value(p).data()))?;
    }
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok("1000 random instances match exactly".into())
}

fn bag_cost_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for case in 0..1000 {
        let (l_batch, t_bag) = (rng.random_range(1..6), rng.random_range(1..6));
        let losses: Vec<f64> = (0..l_batch * t_bag).map(|_| rng.random_range(0.0..10.0)).collect();
        let got = bag_cost(&losses, t_bag).map_err(|e| e.to_string())?;
        let mut expected = Vec::new();
        for bag in 0..l_batch {
            let mut m = losses[bag * t_bag];
            for k in 1..t_bag {
                if losses[bag * t_bag + k] > m {
                    m = losses[bag * t_bag + k];
                }
            }
            expected.push(m);
        }
        ensure(got == expected, || format!("case {case}: {got:?} vs {expected:?}"))?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("1000 random loss vectors match exactly".into())
}

fn attention_normalization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let kinds = [EncoderKind::AttCnnE, EncoderKind::AttPcnnE, EncoderKind::AttBlstm];
    let models: Vec<Model> = kinds.iter().map(|&k| Model::new(toy_config(k), 9).unwrap()).collect();
    let mut zeroed = models.clone();
    for m in &mut zeroed {
        let ids: Vec<_> = m.params().ids().collect();
        for id in ids {
            m.params_mut().get_mut(id).data_mut().fill(0.0);
        }
    }
    let mut worst_sum = 0.0f64;
    let mut worst_uniform = 0.0f64;
    for case in 0..1000 {
        let k = case % kinds.len();
        let n = rng.random_range(2..=6);
        let input = random_input(&mut rng, n, 1, 6);
        let (_, trace) = models[k].predict(&input).map_err(|e| e.to_string())?;
        ensure(!trace.is_empty(), || format!("{} produced no attention", kinds[k]))?;
        for a in &trace.alphas {
            ensure(a.len() == n && a.iter().all(|&v| v >= 0.0), || format!("case {case}: {a:?}"))?;
            worst_sum = worst_sum.max((a.iter().sum::<f64>() - 1.0).abs());
        }
        let (_, trace) = zeroed[k].predict(&input).map_err(|e| e.to_string())?;
        for a in &trace.alphas {
            for &v in a {
                worst_uniform = worst_uniform.max((v - 1.0 / n as f64).abs());
            }
        }
    }
    ensure(worst_sum <= 1e-6, || format!("sum deviates by {worst_sum:.2e}"))?;
    ensure(worst_uniform <= 1e-9, || format!("zero-parameter attention deviates from uniform by {worst_uniform:.2e}"))?;
    Ok(format!("1000 contexts, |Σα − 1| ≤ {worst_sum:.1e}, zero-parameter deviation {worst_uniform:.1e}"))
}

fn ks_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    const STEPS: u32 = 10_000;
    let lattice = |k: u32| f64::from(k) / f64::from(STEPS);
    let cdf = |sample: &[f64], x: f64| sample.iter().filter(|&&v| v <= x).count() as f64 / sample.len() as f64;
    let mut worst = 0.0f64;
    for case in 0..200 {
        // Clustered draws so the samples overlap and tie often.
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let len = rng.random_range(1..25);
            let centre = rng.random_range(0..STEPS);
            (0..len).map(|_| lattice((centre + rng.random_range(0..2000)) % (STEPS + 1))).collect()
        };
        let s = draw(&mut rng);
        let n = draw(&mut rng);
        let brute = (0..=STEPS).map(|k| (cdf(&s, lattice(k)) - cdf(&n, lattice(k))).abs()).fold(0.0, f64::max);
        let d = analysis::ks_statistic(&s, &n).map_err(|e| e.to_string())?;
        worst = worst.max((d - brute).abs());
        ensure((d - brute).abs() <= 1e-9, || format!("case {case}: D={d}, grid={brute}"))?;
        ensure(analysis::ks_statistic(&s, &s).map_err(|e| e.to_string())? == 0.0, || format!("case {case}: D(S,S) ≠ 0"))?;
    }
    let hand = analysis::ks_statistic(&[0.1, 0.2], &[0.3]).map_err(|e| e.to_string())?;
    ensure(hand == 1.0, || format!("hand case gives {hand}"))?;
    Ok(format!("200 pairs within {worst:.1e} of the grid sup; D(S,S)=0; hand case D=1"))
}

fn annotator_fixture() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/mccain");
    let frames = FrameLexicon::load(&dir.join("frames.tsv")).map_err(|e| e.to_string())?;
    let pairs = PairList::load(&dir.join("pairs.tsv")).map_err(|e| e.to_string())?;
    let processor = TextProcessor::new(frames, PosTable::default()).with_negation("not");
    let run = |file: &str, mode| -> Result<_, String> {
        let docs: Vec<NewsDoc> = attitude_core::annotate::load_news(&dir.join(file)).map_err(|e| e.to_string())?;
        annotate_corpus(&docs, &processor, &pairs, mode).map_err(|e| e.to_string())
    };

    let (out, _) = run("news.jsonl", AnnotationMode::BothFactors)?;
    ensure(out.len() == 1 && out[0].attitudes.len() == 1, || format!("expected one attitude, got {out:?}"))?;
    let a = &out[0].attitudes[0];
    ensure(
        (a.subject.as_str(), a.object.as_str(), a.label) == ("usa", "georgia", Label::Pos),
        || format!("got {} → {} {}", a.subject, a.object, a.label),
    )?;
    let original = attitude_core::annotate::load_news(&dir.join("news.jsonl")).map_err(|e| e.to_string())?;
    let kept: Vec<&String> = out[0].sentences.iter().skip(1).collect();
    let expected = [&original[0].sentences[4], &original[0].sentences[10]];
    ensure(kept == expected, || format!("retained sentences {kept:?}"))?;

    let (mixed, _) = run("news_mixed.jsonl", AnnotationMode::FrameOnly)?;
    let label = mixed.first().and_then(|d| d.attitudes.first()).map(|a| a.label);
    ensure(label == Some(Label::Neg), || format!("mixed variant gives {label:?}"))?;
    Ok("USA→Georgia pos with sentences #5 and #11; mixed variant neg".into())
}

struct Synthetic {
    world: World,
    featurizer_seed: u64,
}

impl Synthetic {
    fn new() -> Self {
        Self { world: World::new(1, &VocabSpec::default()), featurizer_seed: 7 }
    }

    fn docs(&self, seed: u64, size: usize, prefix: &str) -> Vec<Document> {
        self.world.generate(seed, size, &DocSpec::default(), prefix).iter().map(|g| g.to_document()).collect()
    }

    fn news(&self, seed: u64, size: usize) -> Vec<NewsDoc> {
        self.world.generate(seed, size, &DocSpec::default(), "ds").into_iter().map(|g| g.news).collect()
    }

    fn examples(&self, docs: &[Document]) -> Vec<Example> {
        let p = self.world.processor();
        let e = WordEmbedder::new(self.world.embeddings.clone(), self.featurizer_seed);
        Featurizer { processor: &p, embedder: &e, scale: Scale::Three }.examples(docs).unwrap()
    }

    fn fit(&self, kind: EncoderKind, train_set: &[Example], heldout: Option<&[Example]>, seed: u64) -> Result<(Model, attitude_core::training::TrainOutcome), String> {
        let cfg = EncoderConfig { kind, filters: 32, lstm_hidden: 32, d_word: 32, classes: 3, ..EncoderConfig::default() };
        let mut model = Model::new(cfg, seed).map_err(|e| e.to_string())?;
        let outcome = train(&mut model, train_set, heldout, Scale::Three, &TrainConfig::default(), seed).map_err(|e| e.to_string())?;
        Ok((model, outcome))
    }
}

fn score(model: &Model, examples: &[Example]) -> f64 {
    let preds: Vec<PairPrediction> = predict_examples(model, examples, Scale::Three).unwrap();
    macro_f1(&preds)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn overfit_and_stop() -> Outcome {
    let syn = Synthetic::new();
    let train_set = syn.examples(&syn.docs(2, 200, "tr"));
    let test_set = syn.examples(&syn.docs(3, 100, "te"));
    let mut lines = Vec::new();
    for kind in EncoderKind::ALL {
        let start = Instant::now();
        let (model, out) = syn.fit(kind, &train_set, Some(&test_set), 11)?;
        let last = out.log.iter().rev().find(|r| r.split == "train").map_or(0.0, |r| r.f1);
        let heldout = score(&model, &test_set);
        ensure(out.stopped_early && last > 0.85 && out.epochs_run <= 150, || {
            format!("{kind}: train F1 {last:.3} after {} epochs, stopped early: {}", out.epochs_run, out.stopped_early)
        })?;
        ensure(heldout >= 0.90, || format!("{kind}: held-out F1 {heldout:.3}"))?;
        within(start.elapsed(), Duration::from_secs(600))?;
        lines.push(format!("{kind} {}ep/{heldout:.3}", out.epochs_run));
    }
    Ok(format!("{} train examples; {}", train_set.len(), lines.join(", ")))
}

/// SL and DS training sets for one seed: 20 labeled documents (one
/// sentiment attitude each) and roughly 500 DS-annotated attitudes.
fn low_resource(syn: &Synthetic, seed: u64) -> (Vec<Example>, Vec<Example>, Vec<Example>, usize) {
    let sl = syn.docs(100 + seed, 20, "sl");
    let test = syn.examples(&syn.docs(200 + seed, 100, "te"));
    let pairs = syn.world.pair_list(seed, 0.95, 0.05);
    let (ds, report) = annotate_corpus(&syn.news(300 + seed, 650), &syn.world.processor(), &pairs, AnnotationMode::BothFactors).unwrap();
    let mut mixed = sl.clone();
    mixed.extend(ds);
    (syn.examples(&sl), syn.examples(&mixed), test, report.attitudes_emitted)
}

const SEEDS: [u64; 3] = [1, 2, 3];

fn ds_direction() -> Outcome {
    let start = Instant::now();
    let syn = Synthetic::new();
    let sets: Vec<_> = SEEDS.iter().map(|&s| low_resource(&syn, s)).collect();
    let mut lines = Vec::new();
    for kind in [EncoderKind::Cnn, EncoderKind::BiLstm] {
        let (mut sl, mut ds) = (Vec::new(), Vec::new());
        for (&seed, (sl_set, ds_set, test, _)) in SEEDS.iter().zip(&sets) {
            sl.push(score(&syn.fit(kind, sl_set, None, seed)?.0, test));
            ds.push(score(&syn.fit(kind, ds_set, None, seed)?.0, test));
        }
        let (msl, mds) = (median(sl.clone()), median(ds.clone()));
        ensure(mds > msl, || format!("{kind}: median DS {mds:.3} ≤ SL {msl:.3} ({ds:?} vs {sl:?})"))?;
        lines.push(format!("{kind} DS {mds:.3} > SL {msl:.3}"));
    }
    within(start.elapsed(), Duration::from_secs(1200))?;
    let annotated: Vec<String> = sets.iter().map(|s| s.3.to_string()).collect();
    Ok(format!("{} (DS attitudes {})", lines.join("; "), annotated.join("/")))
}

fn attention_shift() -> Outcome {
    let syn = Synthetic::new();
    let sentiment = syn.world.sentiment_lexicon();
    let (mut sl, mut ds) = (Vec::new(), Vec::new());
    for &seed in &SEEDS {
        let (sl_set, ds_set, test, _) = low_resource(&syn, seed);
        for (set, out) in [(&sl_set, &mut sl), (&ds_set, &mut ds)] {
            let (model, _) = syn.fit(EncoderKind::AttBlstm, set, None, seed)?;
            let report = analysis::analyze(&model, &test, &sentiment).map_err(|e| e.to_string())?;
            out.push(report.group(AnalysisGroup::Frames).delta);
        }
    }
    let (msl, mds) = (median(sl.clone()), median(ds.clone()));
    ensure(mds > 0.0 && mds > msl, || format!("median Δ_frames DS {mds:.3}, SL {msl:.3} ({ds:?} vs {sl:?})"))?;
    Ok(format!("median Δ_frames DS {mds:.3} > SL {msl:.3}, DS > 0"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let files = pipeline::generate_synthetic(4, 40, &VocabSpec::default(), &DocSpec::default(), dir.path())
        .map_err(|e| e.to_string())?;
    let cfg = RunConfig::load(&files.config).map_err(|e| e.to_string())?;
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| pipeline::run_train(&cfg, &dir.path().join(name)))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let read = |p: &Path| std::fs::read(p).unwrap();
    ensure(read(&runs[0].checkpoint) == read(&runs[1].checkpoint), || "checkpoints differ".into())?;
    ensure(read(&runs[0].log) == read(&runs[1].log), || "training logs differ".into())?;
    Ok(format!("{} checkpoints and logs byte-identical", cfg.encoder.kind))
}

fn macro_f1_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(111);
    let labels = [Label::Pos, Label::Neg, Label::Neu];
    for case in 0..200 {
        let docs = rng.random_range(1..4);
        let preds: Vec<PairPrediction> = (0..rng.random_range(0..12))
            .map(|i| PairPrediction {
                doc_id: format!("d{}", rng.random_range(0..docs)),
                subject: format!("s{i}"),
                object: "o".into(),
                gold: *labels.choose(&mut rng).unwrap(),
                pred: *labels.choose(&mut rng).unwrap(),
            })
            .collect();

        // Confusion matrix per document, rows gold, columns predicted.
        let mut per_doc = std::collections::BTreeMap::<&str, [[usize; 3]; 3]>::new();
        let idx = |l: Label| labels.iter().position(|&x| x == l).unwrap();
        for p in &preds {
            per_doc.entry(&p.doc_id).or_default()[idx(p.gold)][idx(p.pred)] += 1;
        }
        let mut doc_scores = Vec::new();
        for m in per_doc.values() {
            let mut class_f1 = Vec::new();
            for (c, row) in m.iter().enumerate().take(2) {
                let tp = row[c] as f64;
                let pred_c: usize = (0..3).map(|g| m[g][c]).sum();
                let gold_c: usize = row.iter().sum();
                if pred_c + gold_c == 0 {
                    continue;
                }
                let p = if pred_c == 0 { 0.0 } else { tp / pred_c as f64 };
                let r = if gold_c == 0 { 0.0 } else { tp / gold_c as f64 };
                class_f1.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
            }
            if !class_f1.is_empty() {
                doc_scores.push(class_f1.iter().sum::<f64>() / class_f1.len() as f64);
            }
        }
        let expected = if doc_scores.is_empty() { 0.0 } else { doc_scores.iter().sum::<f64>() / doc_scores.len() as f64 };
        let got = macro_f1(&preds);
        ensure((got - expected).abs() <= 1e-12, || format!("case {case}: {got} vs {expected}"))?;
    }
    let p = |gold, pred| PairPrediction { doc_id: "a".into(), subject: "s".into(), object: "o".into(), gold, pred };
    let hand = macro_f1(&[p(Label::Pos, Label::Pos), p(Label::Pos, Label::Pos), p(Label::Neg, Label::Pos), p(Label::Neg, Label::Pos)]);
    ensure((hand - 1.0 / 3.0).abs() <= 1e-12, || format!("hand case gives {hand}"))?;
    Ok("200 random prediction sets match; hand case 1/3".into())
}

fn main() {
    let criteria: [(&str, Check); 11] = [
        ("gradient oracle", gradient_oracle),
        ("pooling oracle", pooling_oracle),
        ("bag-cost oracle", bag_cost_oracle),
        ("attention normalization", attention_normalization),
        ("KS oracle", ks_oracle),
        ("annotator fixture", annotator_fixture),
        ("overfit/stopping", overfit_and_stop),
        ("DS direction", ds_direction),
        ("attention shift", attention_shift),
        ("determinism", determinism),
        ("macro-F1 oracle", macro_f1_oracle),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL {n:>2} {name}: {why} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
