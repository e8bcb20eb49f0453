//! Acceptance checks, each returning a [`Check`] instead of panicking so a
//! runner can report every criterion before failing.

use std::time::{Duration, Instant};

use fcgprobe::attrib::shapley_estimate;
use fcgprobe::embed::{
    closeness_centrality, degree_centrality, harmonic_centrality, katz_centrality, markov_embedding, AbstractionMap,
    Embedder, KatzParams, Scheme,
};
use fcgprobe::experiment::{
    attack_batch, embed_all, evaluate_model, holdout_malware, train_target, SearchMode, TargetKind, TrainConfig,
    TrainedTarget,
};
use fcgprobe::genome::{Genome, GenomeConfig, Individual};
use fcgprobe::graph::{identify_critical_area, save_fcg, FunctionCallGraph, GraphFormat, NodeKind};
use fcgprobe::metrics::MetricsReport;
use fcgprobe::models::{
    extract_benign_constraints, sat_count, Activation, Constraint, DecisionTree, EnsembleMode, Interval, Label, Layer,
    MlpModel, TreeEnsemble, TreeNode,
};
use fcgprobe::perturb::{apply_op, IdAllocator};
use fcgprobe::search::{dominates, AttackConfig, AttackResult, FitnessScore};
use fcgprobe::synth::{generate_corpus, generate_graph, Corpus, SynthConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    closeness_oracle, degree_oracle, exact_shapley, harmonic_oracle, katz_oracle, markov_oracle, random_graph,
    random_op, sensitive_apis, Plain, SetGraph,
};

#[derive(Debug, Clone)]
pub struct Check {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}] {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

// ---------------------------------------------------------------------------
// 1. Embeddings against brute-force oracles

pub fn embedding_oracles(n_graphs: usize, seed: u64) -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let apis = sensitive_apis(16);
    let katz = KatzParams { alpha: 0.05, tol: 1e-13, max_iter: 10_000 };
    let entries: Vec<(String, usize)> = vec![
        ("app.".into(), 0),
        ("app.net.".into(), 1),
        ("lib.".into(), 2),
        ("sdk.".into(), 3),
        ("sdk.api1".into(), 4),
    ];
    let map = AbstractionMap::new(entries.clone()).unwrap();
    let (mut worst_exact, mut worst_katz) = (0.0f64, 0.0f64);
    for _ in 0..n_graphs {
        let p_edge = rng.gen_range(0.02..0.08);
        let g = random_graph(&mut rng, 50, p_edge);
        let plain = Plain::of(&g);
        let slots: Vec<Option<usize>> = apis.iter().map(|a| plain.find_api(a)).collect();
        let per_slot = |f: &dyn Fn(usize) -> f64| -> Vec<f64> { slots.iter().map(|s| s.map_or(0.0, f)).collect() };

        let pairs = [
            (degree_centrality(&g, &apis).unwrap().values, per_slot(&|v| degree_oracle(&plain, v))),
            (harmonic_centrality(&g, &apis).values, per_slot(&|v| harmonic_oracle(&plain, v))),
            (closeness_centrality(&g, &apis).unwrap().values, per_slot(&|v| closeness_oracle(&plain, v))),
            (markov_embedding(&g, &map, Scheme::MamaFamily).values, markov_oracle(&plain, &entries)),
        ];
        for (got, want) in &pairs {
            assert_eq!(got.len(), want.len());
            worst_exact = got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(worst_exact, f64::max);
        }
        let series = katz_oracle(&plain, katz.alpha, 50);
        let katz_want = per_slot(&|v| series[v]);
        let katz_got = katz_centrality(&g, &apis, katz).unwrap().values;
        worst_katz = katz_got.iter().zip(&katz_want).map(|(a, b)| (a - b).abs()).fold(worst_katz, f64::max);
    }
    let elapsed = start.elapsed();
    let passed = worst_exact <= 1e-12 && worst_katz <= 1e-9 && elapsed < Duration::from_secs(60);
    Check {
        id: 1,
        name: "embedding oracles",
        passed,
        detail: format!(
            "{n_graphs} graphs, max error degree/harmonic/closeness/markov {worst_exact:.1e} (tol 1e-12), katz {worst_katz:.1e} (tol 1e-9), {:.1}s (limit 60s)",
            secs(elapsed)
        ),
    }
}

// ---------------------------------------------------------------------------
// 2. Operators against the set-algebra model

pub fn operator_semantics(pairs: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut valid, mut mismatches, mut system_breaks, mut dirty_failures) = (0, 0, 0, 0);
    let mut g = random_graph(&mut rng, 30, 0.15);
    let mut next = 10_000u64;
    for i in 0..pairs {
        if i % 50 == 0 {
            let p = rng.gen_range(0.05..0.3);
            g = random_graph(&mut rng, 30, p);
        }
        let op = random_op(&mut rng, &g, &mut next);
        let before = SetGraph::of(&g);
        let before_bytes = save_fcg(&g, GraphFormat::JsonGraph);
        let before_graph = g.clone();
        let expected = before.apply(&op);
        match (apply_op(&mut g, &op), expected) {
            (Ok(()), Some(want)) => {
                valid += 1;
                if SetGraph::of(&g) != want || g.validate().is_err() {
                    mismatches += 1;
                }
                let kept = before.nodes.iter().filter(|(_, n)| n.0).all(|(&id, n)| {
                    g.node(id).is_some_and(|r| r.kind == NodeKind::System && r.label == n.1) && g.out_degree(id) == 0
                });
                if !kept {
                    system_breaks += 1;
                }
            }
            (Err(_), None) => {
                if save_fcg(&g, GraphFormat::JsonGraph) != before_bytes || g != before_graph {
                    dirty_failures += 1;
                }
            }
            _ => mismatches += 1,
        }
    }
    Check {
        id: 2,
        name: "operator semantics",
        passed: mismatches == 0 && system_breaks == 0 && dirty_failures == 0,
        detail: format!(
            "{pairs} pairs ({valid} valid): {mismatches} oracle mismatches, {system_breaks} system-node violations, {dirty_failures} failed ops that changed the graph"
        ),
    }
}

// ---------------------------------------------------------------------------
// 3. Variation keeps individuals replayable

fn small_base(rng: &mut ChaCha8Rng) -> FunctionCallGraph {
    let cfg = SynthConfig { min_nodes: 15, max_nodes: 40, ..SynthConfig::default() };
    let n = rng.gen_range(cfg.min_nodes..=cfg.max_nodes);
    let label = if rng.gen_bool(0.5) { Label::Malware } else { Label::Benign };
    generate_graph(&cfg, n, label, rng)
}

pub fn genome_closure(events: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let apis = fcgprobe::synth::sensitive_api_index();
    let (mut done, mut broken, mut misgrouped) = (0usize, 0usize, 0usize);
    while done < events {
        let base = small_base(&mut rng);
        let area = identify_critical_area(&base, &apis);
        if area.is_empty() {
            continue;
        }
        let cfg = GenomeConfig { dependency_aware: rng.gen_bool(0.75), ..GenomeConfig::default() };
        let genome = Genome::new(&base, &area, cfg);
        let mut alloc = IdAllocator::for_graph(&base);
        let mut pool: Vec<Individual> =
            (0..6).filter_map(|_| genome.init_individual(rng.gen_range(1..60), &mut alloc, &mut rng).ok()).collect();
        if pool.len() < 2 {
            continue;
        }
        for _ in 0..100 {
            let a = rng.gen_range(0..pool.len());
            let children: Vec<Individual> = if rng.gen_bool(0.5) {
                let b = rng.gen_range(0..pool.len());
                let ((c1, c2), _) = genome.crossover(&pool[a], &pool[b], &mut alloc, &mut rng);
                vec![c1, c2]
            } else {
                vec![genome.mutate(&pool[a], &mut alloc, &mut rng).individual]
            };
            done += 1;
            for c in children {
                if fcgprobe::perturb::apply_sequence(&base, &c.flat()).is_err() {
                    broken += 1;
                } else if genome.check(&c).is_err() {
                    misgrouped += 1;
                }
                let slot = rng.gen_range(0..pool.len());
                pool[slot] = c;
            }
        }
    }
    Check {
        id: 3,
        name: "genome validity closure",
        passed: broken == 0 && misgrouped == 0,
        detail: format!("{done} crossover/mutation events: {broken} children failed replay, {misgrouped} mis-grouped"),
    }
}

// ---------------------------------------------------------------------------
// Shared corpus for the comparative experiments

pub struct Study {
    pub corpus: Corpus,
    pub held: Vec<usize>,
    pub embedder: Embedder,
    pub train_data: Vec<Vec<f64>>,
    pub train_labels: Vec<Label>,
}

impl Study {
    /// 200 synthetic graphs with 20 malware graphs held out as attack seeds.
    pub fn new() -> Self {
        let corpus = generate_corpus(&SynthConfig::default()).unwrap();
        let (held, train) = holdout_malware(&corpus, 20);
        let embedder = Embedder::new(Scheme::Degree, corpus.apis.clone());
        let graphs: Vec<&FunctionCallGraph> = train.iter().map(|&i| &corpus.graphs[i].graph).collect();
        let train_labels = train.iter().map(|&i| corpus.graphs[i].label).collect();
        let train_data = embed_all(&embedder, &graphs).unwrap();
        Self { corpus, held, embedder, train_data, train_labels }
    }

    pub fn train(&self, kind: TargetKind) -> (TrainedTarget, f64) {
        let cfg = TrainConfig { kind, ..TrainConfig::default() };
        let target = train_target(&self.embedder, &self.train_data, &self.train_labels, &cfg).unwrap();
        let acc = evaluate_model(&target.model, &self.train_data, &self.train_labels).unwrap().accuracy();
        (target, acc)
    }

    pub fn samples(&self) -> Vec<(String, &FunctionCallGraph)> {
        self.held.iter().map(|&i| (self.corpus.graphs[i].name.clone(), &self.corpus.graphs[i].graph)).collect()
    }
}

/// Reports and GA results produced by one experiment.
pub struct Experiment {
    pub check: Check,
    pub reports: Vec<MetricsReport>,
    pub ga_results: Vec<AttackResult>,
}

impl Experiment {
    /// Concatenated metrics files, the unit compared for determinism.
    pub fn metrics_bytes(&self) -> Vec<u8> {
        self.reports.iter().flat_map(MetricsReport::to_json).collect()
    }
}

fn successes(outcomes: Vec<fcgprobe::experiment::SampleOutcome>) -> Vec<AttackResult> {
    outcomes.into_iter().filter_map(|o| o.result.ok()).collect()
}

// ---------------------------------------------------------------------------
// 4. Surviving genes with and without dependency-aware grouping

/// Population for the ASGG comparison; the ratio is a property of the
/// operators, not of the population size.
pub const ASGG_POPULATION: usize = 20;

pub fn asgg_effect(study: &Study) -> Experiment {
    let start = Instant::now();
    let (target, _) = study.train(TargetKind::Mlp);
    let samples = study.samples();
    let mut reports = Vec::new();
    let mut ga_results = Vec::new();
    for aware in [true, false] {
        let mut cfg =
            AttackConfig { population_size: ASGG_POPULATION, stop_on_success: false, ..AttackConfig::default() };
        cfg.genome.dependency_aware = aware;
        let name = if aware { "asgg-dependency-aware" } else { "asgg-ablation" };
        let (report, outcomes) = attack_batch(name, &samples, &target, &cfg, SearchMode::Genetic, false);
        reports.push(report);
        ga_results.extend(successes(outcomes));
    }
    let elapsed = start.elapsed();
    let (aware, ablated) = (reports[0].asgg, reports[1].asgg);
    let ratio = if ablated > 0.0 { aware / ablated } else { f64::INFINITY };
    let complete = reports.iter().all(|r| r.errored == 0 && r.rows.iter().all(|row| row.generations == 40));
    let passed = ratio >= 1.5 && complete && elapsed < Duration::from_secs(30 * 60);
    Experiment {
        check: Check {
            id: 4,
            name: "ASGG effect",
            passed,
            detail: format!(
                "{} seeds x 40 generations: ASGG {aware:.1} vs {ablated:.1} without grouping, ratio {ratio:.2} (need >= 1.5), {:.0}s (limit 1800s)",
                samples.len(),
                secs(elapsed)
            ),
        },
        reports,
        ga_results,
    }
}

// ---------------------------------------------------------------------------
// 5. Ensemble constraints

fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    let grid = |rng: &mut ChaCha8Rng| f64::from(rng.gen_range(-4i32..=4)) * 0.25;
    let (mut a, mut b) = (grid(rng), grid(rng));
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    Interval {
        lower: rng.gen_bool(0.8).then_some(a),
        lower_closed: rng.gen_bool(0.5),
        upper: rng.gen_bool(0.8).then_some(b),
        upper_closed: rng.gen_bool(0.5),
    }
}

/// Membership written from the bound definitions.
fn inside(iv: &Interval, v: f64) -> bool {
    let lo_ok = iv.lower.is_none_or(|l| if iv.lower_closed { l <= v } else { l < v });
    let hi_ok = iv.upper.is_none_or(|u| if iv.upper_closed { v <= u } else { v < u });
    lo_ok && hi_ok
}

/// Random tree whose every leaf is reachable: each split threshold lies
/// strictly inside the range its path still allows for that feature.
fn random_tree(rng: &mut ChaCha8Rng, n_features: usize, depth: usize) -> DecisionTree {
    fn grow(rng: &mut ChaCha8Rng, nodes: &mut Vec<TreeNode>, range: &mut [(i32, i32)], depth: usize) -> usize {
        let at = nodes.len();
        let feature = rng.gen_range(0..range.len());
        let (lo, hi) = range[feature];
        if depth == 0 || hi - lo < 2 || rng.gen_bool(0.25) {
            let label = if rng.gen_bool(0.5) { Label::Benign } else { Label::Malware };
            nodes.push(TreeNode::Leaf { label, weight: 1.0 });
            return at;
        }
        nodes.push(TreeNode::Leaf { label: Label::Malware, weight: 1.0 });
        let t = rng.gen_range(lo + 1..hi);
        range[feature] = (lo, t);
        let left = grow(rng, nodes, range, depth - 1);
        range[feature] = (t, hi);
        let right = grow(rng, nodes, range, depth - 1);
        range[feature] = (lo, hi);
        nodes[at] = TreeNode::Split { feature, threshold: f64::from(t) * 0.25, left, right };
        at
    }
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, &mut vec![(-5, 5); n_features], depth);
    DecisionTree { nodes }
}

/// A point inside every interval, with unconstrained features random.
fn witness(rng: &mut ChaCha8Rng, n_features: usize, cs: &[&Constraint]) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n_features).map(|_| f64::from(rng.gen_range(-5i32..=5)) * 0.25).collect();
    for c in cs {
        let iv = c.interval;
        x[c.feature] = match (iv.lower, iv.upper) {
            (Some(l), Some(u)) if l == u => l,
            (Some(l), Some(u)) => (l + u) / 2.0,
            (Some(l), None) => l + 1.0,
            (None, Some(u)) => u - 1.0,
            (None, None) => 0.0,
        };
    }
    x
}

pub fn ensemble_constraints(pairs: usize, trees: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count_errors = 0;
    for _ in 0..pairs {
        let dim = rng.gen_range(1..6);
        let cs: Vec<Constraint> = (0..rng.gen_range(0..12))
            .map(|i| Constraint {
                feature: rng.gen_range(0..dim),
                interval: random_interval(&mut rng),
                tree: i,
                leaf: 0,
            })
            .collect();
        let x: Vec<f64> = (0..dim).map(|_| f64::from(rng.gen_range(-5i32..=5)) * 0.25).collect();
        let want = cs.iter().filter(|c| inside(&c.interval, x[c.feature])).count();
        if sat_count(&cs, &x) != want {
            count_errors += 1;
        }
    }

    let (mut unsound, mut paths_checked) = (0, 0);
    for _ in 0..trees {
        let n_features = rng.gen_range(1..5);
        let depth = rng.gen_range(1..5);
        let tree = random_tree(&mut rng, n_features, depth);
        let ensemble = TreeEnsemble {
            mode: EnsembleMode::RandomForest,
            n_features,
            trees: vec![tree.clone()],
            tree_weights: vec![1.0],
        };
        let constraints = extract_benign_constraints(&ensemble, false);
        let benign_leaves: Vec<usize> = (0..tree.nodes.len())
            .filter(|&i| matches!(tree.nodes[i], TreeNode::Leaf { label: Label::Benign, .. }))
            .collect();
        for leaf in benign_leaves {
            let own: Vec<&Constraint> = constraints.iter().filter(|c| c.leaf == leaf).collect();
            let x = witness(&mut rng, n_features, &own);
            paths_checked += 1;
            if !tree.predict(&x).is_benign() || ensemble.predict(&x).unwrap() != Label::Benign {
                unsound += 1;
            }
        }
        for _ in 0..50 {
            let x: Vec<f64> = (0..n_features).map(|_| f64::from(rng.gen_range(-5i32..=5)) * 0.25).collect();
            let leaf = tree.leaf_index(&x);
            let own: Vec<&Constraint> = constraints.iter().filter(|c| c.leaf == leaf).collect();
            let is_benign_leaf = matches!(tree.nodes[leaf], TreeNode::Leaf { label: Label::Benign, .. });
            if is_benign_leaf && !own.iter().all(|c| c.satisfied_by(&x)) {
                unsound += 1;
            }
        }
    }
    Check {
        id: 5,
        name: "ensemble fitness correctness",
        passed: count_errors == 0 && unsound == 0,
        detail: format!(
            "{pairs} sat_count pairs: {count_errors} mismatches; {trees} trees, {paths_checked} benign paths: {unsound} soundness violations"
        ),
    }
}

// ---------------------------------------------------------------------------
// 6. Shapley estimator

pub fn random_mlp(rng: &mut ChaCha8Rng, inputs: usize) -> MlpModel {
    let hidden = rng.gen_range(2..8);
    let mut dense = |i: usize, o: usize, activation| Layer {
        inputs: i,
        outputs: o,
        weights: (0..i * o).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        bias: (0..o).map(|_| rng.gen_range(-0.5..0.5)).collect(),
        activation,
    };
    let layers = vec![dense(inputs, hidden, Activation::Relu), dense(hidden, 1, Activation::Sigmoid)];
    MlpModel::new(inputs, layers).unwrap()
}

pub fn shapley_accuracy(models: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_ratio, mut worst_efficiency, mut calls) = (0.0f64, 0.0f64, 0usize);
    for m in 0..models {
        let n = rng.gen_range(2..=10);
        let mlp = random_mlp(&mut rng, n);
        let f = |v: &[f64]| mlp.predict(v).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let baseline: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let exact = exact_shapley(&f, &baseline, &x);
        let scale = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for n_samples in [1, 2, 17, 2000] {
            let est = shapley_estimate(f, &baseline, &x, n_samples, seed ^ m as u64).unwrap();
            calls += 1;
            let gap = est.values.iter().sum::<f64>() - (f(&x) - f(&baseline));
            worst_efficiency = worst_efficiency.max(gap.abs());
            if n_samples == 2000 && scale > 0.0 {
                let mae = est.values.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>() / n as f64;
                worst_ratio = worst_ratio.max(mae / scale);
            }
        }
    }
    Check {
        id: 6,
        name: "Shapley estimator",
        passed: worst_ratio < 0.05 && worst_efficiency <= 1e-9,
        detail: format!(
            "{models} MLPs: worst MAE {:.2}% of max|phi| (need < 5%), worst efficiency gap {worst_efficiency:.1e} over {calls} calls (tol 1e-9)",
            100.0 * worst_ratio
        ),
    }
}

// ---------------------------------------------------------------------------
// 7. Elitist monotonicity

/// (segments, violations): within one attribution epoch, a later
/// generation's best may never be dominated by an earlier one's.
pub fn monotonicity(results: &[AttackResult]) -> (usize, usize) {
    let (mut segments, mut violations) = (0, 0);
    for r in results {
        let mut prev: Option<(usize, FitnessScore)> = None;
        for g in &r.log {
            let score = FitnessScore { f1: g.best_f1, f2: g.best_f2, ops: g.best_ops };
            match prev {
                Some((epoch, before)) if epoch == g.attribution_epoch => {
                    if dominates(&before, &score) {
                        violations += 1;
                    }
                }
                _ => segments += 1,
            }
            prev = Some((g.attribution_epoch, score));
        }
    }
    (segments, violations)
}

pub fn monotonicity_check(results: &[AttackResult]) -> Check {
    let (segments, violations) = monotonicity(results);
    Check {
        id: 7,
        name: "elitist monotonicity",
        passed: violations == 0 && segments > 0,
        detail: format!("{} runs, {segments} attribution segments, {violations} regressions", results.len()),
    }
}

// ---------------------------------------------------------------------------
// 8. GA against the random baseline

pub fn end_to_end(study: &Study) -> Experiment {
    let start = Instant::now();
    let samples = study.samples();
    let cfg = AttackConfig::default();
    let mut reports = Vec::new();
    let mut ga_results = Vec::new();
    let mut lines = Vec::new();
    let (mut strictly_better, mut wide_gaps, mut accurate) = (0, 0, 0);
    let kinds = [TargetKind::Mlp, TargetKind::Knn, TargetKind::RandomForest];
    for kind in kinds {
        let (target, acc) = study.train(kind);
        if acc >= 0.9 {
            accurate += 1;
        }
        let (ga, outcomes) =
            attack_batch(&format!("{kind}-genetic"), &samples, &target, &cfg, SearchMode::Genetic, false);
        ga_results.extend(successes(outcomes));
        let (random, _) = attack_batch(&format!("{kind}-random"), &samples, &target, &cfg, SearchMode::Random, false);
        let gap = ga.asr - random.asr;
        strictly_better += usize::from(gap > 0.0);
        wide_gaps += usize::from(gap >= 0.15);
        lines.push(format!("{kind} acc {acc:.3} ASR {:.2} vs {:.2}", ga.asr, random.asr));
        reports.push(ga);
        reports.push(random);
    }
    let elapsed = start.elapsed();
    let passed = accurate == kinds.len()
        && strictly_better == kinds.len()
        && wide_gaps >= 2
        && elapsed < Duration::from_secs(2 * 3600);
    Experiment {
        check: Check {
            id: 8,
            name: "end-to-end comparison",
            passed,
            detail: format!(
                "{}; {wide_gaps} targets with gap >= 0.15 (need 2), {:.0}s (limit 7200s)",
                lines.join(", "),
                secs(elapsed)
            ),
        },
        reports,
        ga_results,
    }
}

// ---------------------------------------------------------------------------
// 9. Reports recompute exactly

pub fn reports_recompute(reports: &[MetricsReport]) -> Check {
    let mut bad = Vec::new();
    for r in reports {
        let reread = MetricsReport::from_json(&r.to_json()).unwrap();
        let fresh = MetricsReport::from_rows(r.name.clone(), r.rows.clone());
        if r.verify().is_err() || reread.verify().is_err() || reread != *r || fresh != *r {
            bad.push(r.name.clone());
        }
    }
    Check {
        id: 9,
        name: "metrics arithmetic",
        passed: bad.is_empty() && !reports.is_empty(),
        detail: format!("{} reports, {} inconsistent {:?}", reports.len(), bad.len(), bad),
    }
}
