use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attrib::{shapley_estimate, AttributionVector, ShapleyConfig};
use crate::embed::Embedder;
use crate::genome::{Genome, GenomeConfig, Individual};
use crate::graph::{CriticalArea, FunctionCallGraph};
use crate::perturb::{translate_to_script, IdAllocator};

use super::fitness::{best_among, best_index, dominates, interpretation_fitness, FitnessScore, Target};
use super::SearchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackConfig {
    pub population_size: usize,
    pub generations: usize,
    pub initial_ops: usize,
    pub elitism: usize,
    pub mutation_probability: f64,
    /// Stop at the first verified benign verdict; otherwise run every
    /// generation and only record it.
    pub stop_on_success: bool,
    /// Iterations of the random baseline.
    pub baseline_iterations: usize,
    pub seed: u64,
    pub shapley: ShapleyConfig,
    pub genome: GenomeConfig,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            generations: 40,
            initial_ops: 300,
            elitism: 2,
            mutation_probability: 1.0,
            stop_on_success: true,
            baseline_iterations: 100,
            seed: 0,
            shapley: ShapleyConfig::default(),
            genome: GenomeConfig::default(),
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::Config(m.to_owned()));
        if self.population_size < 2 {
            return bad("population_size must be at least 2");
        }
        if self.generations == 0 {
            return bad("generations must be at least 1");
        }
        if self.elitism == 0 || self.elitism >= self.population_size {
            return bad("elitism must be in [1, population_size)");
        }
        if !(0.0..=1.0).contains(&self.mutation_probability) || !(0.0..=1.0).contains(&self.genome.keep_probability) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.shapley.n_samples == 0 {
            return bad("shapley.n_samples must be at least 1");
        }
        if self.genome.max_ops < self.initial_ops {
            return bad("genome.max_ops must be at least initial_ops");
        }
        let p = &self.genome.params;
        if p.k_min == 0 || p.k_min > p.k_max || p.long_m_min == 0 || p.long_m_min > p.long_m_max {
            return bad("operator size ranges must be non-empty and start at 1 or more");
        }
        if p.long_k_min == 0 || p.long_k_min > p.long_k_max {
            return bad("operator size ranges must be non-empty and start at 1 or more");
        }
        Ok(())
    }
}

/// Everything an attack reads but never changes.
#[derive(Debug, Clone, Copy)]
pub struct AttackContext<'a> {
    pub base: &'a FunctionCallGraph,
    pub area: &'a CriticalArea,
    pub embedder: &'a Embedder,
    pub target: Target<'a>,
    /// Reference point for attributions.
    pub attribution_baseline: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationLog {
    pub generation: usize,
    pub best_f1: f64,
    pub best_f2: Option<f64>,
    pub best_ops: usize,
    /// Total ops across the population (N_g).
    pub surviving_genes: usize,
    /// Increments whenever attributions are recomputed; f2 values are only
    /// comparable within one epoch.
    pub attribution_epoch: usize,
    pub wall_ms: f64,
}

/// Node and edge counts before and after the reported individual.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SizeDelta {
    pub original_nodes: usize,
    pub original_edges: usize,
    pub final_nodes: usize,
    pub final_edges: usize,
}

impl SizeDelta {
    /// Net added nodes plus edges over original nodes plus edges, never
    /// negative.
    pub fn perturbation_rate(&self) -> f64 {
        let before = (self.original_nodes + self.original_edges) as f64;
        let after = (self.final_nodes + self.final_edges) as f64;
        if before == 0.0 {
            return 0.0;
        }
        ((after - before) / before).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDelta {
    pub l1: f64,
    pub max_abs: f64,
    pub changed: usize,
}

impl EmbeddingDelta {
    fn between(a: &[f64], b: &[f64]) -> Self {
        let mut d = Self::default();
        for (x, y) in a.iter().zip(b) {
            let v = (y - x).abs();
            d.l1 += v;
            d.max_abs = d.max_abs.max(v);
            d.changed += usize::from(v != 0.0);
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub outcome: Outcome,
    pub reason: Option<String>,
    pub generations: usize,
    pub success_generation: Option<usize>,
    pub best: Individual,
    pub best_fitness: Option<FitnessScore>,
    pub script: String,
    pub log: Vec<GenerationLog>,
    pub size: SizeDelta,
    pub embedding_delta: EmbeddingDelta,
    pub apply_calls: u64,
    pub apply_budget: u64,
}

impl AttackResult {
    /// Mean surviving genes per logged generation.
    pub fn asgg(&self) -> f64 {
        if self.log.is_empty() {
            return 0.0;
        }
        self.log.iter().map(|r| r.surviving_genes as f64).sum::<f64>() / self.log.len() as f64
    }
}

struct Member {
    ind: Individual,
    /// Replayed graph awaiting evaluation, when variation already built it.
    graph: Option<FunctionCallGraph>,
    eval: Option<Evaluated>,
}

#[derive(Debug, Clone)]
struct Evaluated {
    embedding: Option<Vec<f64>>,
    f1: f64,
    benign: bool,
}

/// Scores `ind`, replaying it unless its graph is supplied.
fn evaluate(ctx: &AttackContext<'_>, ind: &Individual, graph: Option<FunctionCallGraph>) -> Evaluated {
    let failed = Evaluated { embedding: None, f1: f64::MIN, benign: false };
    let g = match graph.map_or_else(|| ind.replay(ctx.base), Ok) {
        Ok(g) => g,
        Err(e) => {
            log::warn!("individual failed to replay: {e}");
            return failed;
        }
    };
    let x = match ctx.embedder.embed(&g) {
        Ok(v) => v.values,
        Err(e) => {
            log::warn!("embedding failed: {e}");
            return failed;
        }
    };
    match (ctx.target.f1(&x), ctx.target.predict(&x)) {
        (Ok(f1), Ok(label)) => Evaluated { f1, benign: label.is_benign(), embedding: Some(x) },
        (Err(e), _) | (_, Err(e)) => {
            log::warn!("model evaluation failed: {e}");
            failed
        }
    }
}

/// Attribution of the attributed model's benign probability at one point.
struct Attribution {
    phi: Option<AttributionVector>,
    point: Vec<f64>,
    epoch: usize,
}

impl Attribution {
    fn compute(ctx: &AttackContext<'_>, cfg: &ShapleyConfig, seed: u64, at: &[f64], epoch: usize) -> Self {
        let phi = ctx.target.attribution_model().map(|m| {
            let f = |x: &[f64]| m.predict(x).expect("dimension checked at attack start");
            shapley_estimate(f, ctx.attribution_baseline, at, cfg.n_samples, seed.wrapping_add(epoch as u64))
                .expect("dimension checked at attack start")
        });
        Self { phi, point: at.to_vec(), epoch }
    }
}

fn full_score(
    ctx: &AttackContext<'_>,
    attr: &Attribution,
    base_emb: &[f64],
    ev: &Evaluated,
    ops: usize,
) -> FitnessScore {
    let Some(x) = &ev.embedding else { return FitnessScore::worst(ops) };
    let f2 = match ctx.target {
        Target::Ensemble { .. } => None,
        _ => Some(attr.phi.as_ref().map_or(0.0, |p| interpretation_fitness(p, base_emb, x))),
    };
    FitnessScore { f1: ev.f1, f2, ops }
}

/// Replays, embeds and predicts from scratch.
fn verify(ctx: &AttackContext<'_>, ind: &Individual) -> bool {
    ind.replay(ctx.base)
        .ok()
        .and_then(|g| ctx.embedder.embed(&g).ok())
        .and_then(|x| ctx.target.predict(&x.values).ok())
        .is_some_and(|l| l.is_benign())
}

struct Prepared {
    base_emb: Vec<f64>,
    early: Option<AttackResult>,
}

#[allow(clippy::too_many_arguments)]
fn finish(
    ctx: &AttackContext<'_>,
    outcome: Outcome,
    reason: Option<String>,
    best: Individual,
    best_fitness: Option<FitnessScore>,
    log: Vec<GenerationLog>,
    base_emb: &[f64],
    calls: (u64, u64),
) -> AttackResult {
    let final_graph = best.replay(ctx.base).unwrap_or_else(|_| ctx.base.clone());
    let final_emb = ctx.embedder.embed(&final_graph).map(|v| v.values).unwrap_or_else(|_| base_emb.to_vec());
    let size = SizeDelta {
        original_nodes: ctx.base.node_count(),
        original_edges: ctx.base.edge_count(),
        final_nodes: final_graph.node_count(),
        final_edges: final_graph.edge_count(),
    };
    let success_generation = (outcome == Outcome::Success).then(|| log.last().map_or(0, |r| r.generation));
    AttackResult {
        outcome,
        reason,
        generations: log.len(),
        success_generation,
        script: translate_to_script(&best.flat()),
        best,
        best_fitness,
        log,
        size,
        embedding_delta: EmbeddingDelta::between(base_emb, &final_emb),
        apply_calls: calls.0,
        apply_budget: calls.1,
    }
}

/// Shared checks before any search: configuration, dimensions, an already
/// benign sample, and areas or constraint sets that make search pointless.
fn prepare(cfg: &AttackConfig, ctx: &AttackContext<'_>) -> Result<Prepared, SearchError> {
    cfg.validate()?;
    let base_emb = ctx.embedder.embed(ctx.base)?.values;
    if let Some(m) = ctx.target.attribution_model() {
        if m.input_dim != base_emb.len() || ctx.attribution_baseline.len() != base_emb.len() {
            return Err(SearchError::Config(format!(
                "embedding has {} features but the attribution model takes {} and the baseline has {}",
                base_emb.len(),
                m.input_dim,
                ctx.attribution_baseline.len()
            )));
        }
    }
    ctx.target.f1(&base_emb)?;
    let stop = |outcome, reason: Option<&str>| {
        let row = GenerationLog {
            generation: 0,
            best_f1: ctx.target.f1(&base_emb).unwrap_or(f64::MIN),
            best_f2: ctx.target.attribution_model().map(|_| 0.0),
            best_ops: 0,
            surviving_genes: 0,
            attribution_epoch: 0,
            wall_ms: 0.0,
        };
        let best_fitness = FitnessScore { f1: row.best_f1, f2: row.best_f2, ops: 0 };
        Some(finish(
            ctx,
            outcome,
            reason.map(str::to_owned),
            Individual::empty(),
            Some(best_fitness),
            vec![row],
            &base_emb,
            (0, 0),
        ))
    };
    let early = if ctx.target.predict(&base_emb)?.is_benign() {
        stop(Outcome::Success, Some("sample is already classified benign"))
    } else if ctx.area.is_empty() {
        stop(Outcome::Exhausted, Some("critical area is empty"))
    } else if matches!(ctx.target, Target::Ensemble { constraints, .. } if constraints.is_empty()) {
        stop(Outcome::Exhausted, Some("ensemble has no benign-path constraints"))
    } else {
        None
    };
    Ok(Prepared { base_emb, early })
}

fn tournament<R: Rng + ?Sized>(scores: &[FitnessScore], rng: &mut R) -> usize {
    let a = rng.gen_range(0..scores.len());
    let b = rng.gen_range(0..scores.len());
    if dominates(&scores[b], &scores[a]) {
        b
    } else {
        a
    }
}

/// Indices of the `k` best by repeated extraction of undominated elements.
fn elites(scores: &[FitnessScore], k: usize) -> Vec<usize> {
    let mut left: Vec<usize> = (0..scores.len()).collect();
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let Some(b) = best_among(scores, &left) else { break };
        out.push(b);
        left.retain(|&i| i != b);
    }
    out
}

/// Dependency-aware genetic search for a perturbation that makes the target
/// call the sample benign.
pub fn run_attack(cfg: &AttackConfig, ctx: &AttackContext<'_>) -> Result<AttackResult, SearchError> {
    let prepared = prepare(cfg, ctx)?;
    if let Some(r) = prepared.early {
        return Ok(r);
    }
    let base_emb = prepared.base_emb;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut alloc = IdAllocator::for_graph(ctx.base);
    let genome = Genome::new(ctx.base, ctx.area, cfg.genome.clone());
    let budget = (cfg.population_size * cfg.generations * cfg.genome.max_ops * cfg.genome.repair_passes) as u64;
    let mut eval_calls = 0u64;

    let mut pop: Vec<Member> = Vec::with_capacity(cfg.population_size);
    for _ in 0..cfg.population_size {
        match genome.init_keep_graph(cfg.initial_ops, &mut alloc, &mut rng) {
            Ok((ind, graph)) => pop.push(Member { ind, graph, eval: None }),
            Err(e) => {
                let reason = format!("cannot initialize population: {e}");
                return Ok(finish(
                    ctx,
                    Outcome::Exhausted,
                    Some(reason),
                    Individual::empty(),
                    None,
                    Vec::new(),
                    &base_emb,
                    (genome.applied(), budget),
                ));
            }
        }
    }

    let mut attr = Attribution::compute(ctx, &cfg.shapley, cfg.seed, &base_emb, 0);
    let mut log = Vec::new();
    let mut success: Option<(Individual, FitnessScore)> = None;
    let mut best_overall: (Individual, FitnessScore) = (Individual::empty(), FitnessScore::worst(0));

    for generation in 0..cfg.generations {
        eval_calls +=
            pop.iter().filter(|m| m.eval.is_none() && m.graph.is_none()).map(|m| m.ind.len() as u64).sum::<u64>();
        pop.par_iter_mut().filter(|m| m.eval.is_none()).for_each(|m| {
            m.eval = Some(evaluate(ctx, &m.ind, m.graph.take()));
        });
        let evals: Vec<&Evaluated> = pop.iter().map(|m| m.eval.as_ref().expect("evaluated above")).collect();
        let rescore = |attr: &Attribution| -> Vec<FitnessScore> {
            pop.iter().zip(&evals).map(|(m, ev)| full_score(ctx, attr, &base_emb, ev, m.ind.len())).collect()
        };
        let mut scores = rescore(&attr);
        let surviving_genes: usize = pop.iter().map(|m| m.ind.len()).sum();

        let benign: Vec<usize> = (0..pop.len()).filter(|&i| evals[i].benign).collect();
        let mut stop = false;
        if success.is_none() {
            if let Some(b) = best_among(&scores, &benign) {
                eval_calls += pop[b].ind.len() as u64;
                if verify(ctx, &pop[b].ind) {
                    success = Some((pop[b].ind.clone(), scores[b]));
                    stop = cfg.stop_on_success;
                } else {
                    log::warn!("benign verdict did not survive re-verification; continuing");
                }
            }
        }

        let mut best = best_index(&scores).expect("population is non-empty");
        let best_point = evals[best].embedding.as_deref();
        if !stop && attr.phi.is_some() {
            if let Some(point) = best_point.filter(|p| *p != attr.point.as_slice()) {
                attr = Attribution::compute(ctx, &cfg.shapley, cfg.seed, point, attr.epoch + 1);
                scores = rescore(&attr);
                best = best_index(&scores).expect("population is non-empty");
            }
        }
        if best_overall.1.f1 == f64::MIN || !dominates(&best_overall.1, &scores[best]) {
            best_overall = (pop[best].ind.clone(), scores[best]);
        }
        log.push(GenerationLog {
            generation,
            best_f1: scores[best].f1,
            best_f2: scores[best].f2,
            best_ops: scores[best].ops,
            surviving_genes,
            attribution_epoch: attr.epoch,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if stop || generation + 1 == cfg.generations {
            break;
        }

        let mut next: Vec<Member> = elites(&scores, cfg.elitism)
            .into_iter()
            .map(|i| Member { ind: pop[i].ind.clone(), graph: None, eval: pop[i].eval.clone() })
            .collect();
        while next.len() < cfg.population_size {
            let a = tournament(&scores, &mut rng);
            let b = tournament(&scores, &mut rng);
            let children = genome.breed(&pop[a].ind, &pop[b].ind, cfg.mutation_probability, &mut alloc, &mut rng);
            for (ind, graph) in children {
                if next.len() < cfg.population_size {
                    next.push(Member { ind, graph, eval: None });
                }
            }
        }
        pop = next;
    }

    let calls = (genome.applied() + eval_calls, budget);
    Ok(match success {
        Some((ind, fit)) => finish(ctx, Outcome::Success, None, ind, Some(fit), log, &base_emb, calls),
        None => finish(ctx, Outcome::Exhausted, None, best_overall.0, Some(best_overall.1), log, &base_emb, calls),
    })
}

/// Fresh random individuals each iteration with no selection.
pub fn run_random_baseline(cfg: &AttackConfig, ctx: &AttackContext<'_>) -> Result<AttackResult, SearchError> {
    let prepared = prepare(cfg, ctx)?;
    if let Some(r) = prepared.early {
        return Ok(r);
    }
    let base_emb = prepared.base_emb;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut alloc = IdAllocator::for_graph(ctx.base);
    let genome = Genome::new(ctx.base, ctx.area, cfg.genome.clone());
    let budget = (cfg.baseline_iterations * cfg.genome.max_ops * cfg.genome.repair_passes) as u64;
    let attr = Attribution::compute(ctx, &cfg.shapley, cfg.seed, &base_emb, 0);
    let mut eval_calls = 0u64;
    let mut log = Vec::new();
    let mut best: Option<(Individual, FitnessScore)> = None;
    let mut success = None;
    for iteration in 0..cfg.baseline_iterations {
        let ind = match genome.init_individual(cfg.initial_ops, &mut alloc, &mut rng) {
            Ok(ind) => ind,
            Err(e) => {
                let reason = format!("cannot draw a random individual: {e}");
                return Ok(finish(
                    ctx,
                    Outcome::Exhausted,
                    Some(reason),
                    Individual::empty(),
                    None,
                    log,
                    &base_emb,
                    (genome.applied(), budget),
                ));
            }
        };
        let ev = evaluate(ctx, &ind, None);
        eval_calls += ind.len() as u64;
        let s = full_score(ctx, &attr, &base_emb, &ev, ind.len());
        if best.as_ref().is_none_or(|(_, b)| dominates(&s, b)) {
            best = Some((ind.clone(), s));
        }
        let (_, b) = best.as_ref().expect("set above");
        log.push(GenerationLog {
            generation: iteration,
            best_f1: b.f1,
            best_f2: b.f2,
            best_ops: b.ops,
            surviving_genes: ind.len(),
            attribution_epoch: 0,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if ev.benign {
            eval_calls += ind.len() as u64;
            if verify(ctx, &ind) {
                success = Some((ind, s));
                if cfg.stop_on_success {
                    break;
                }
            }
        }
    }
    let calls = (genome.applied() + eval_calls, budget);
    Ok(match (success, best) {
        (Some((ind, fit)), _) => finish(ctx, Outcome::Success, None, ind, Some(fit), log, &base_emb, calls),
        (None, Some((ind, fit))) => finish(ctx, Outcome::Exhausted, None, ind, Some(fit), log, &base_emb, calls),
        (None, None) => finish(
            ctx,
            Outcome::Exhausted,
            Some("no iterations".into()),
            Individual::empty(),
            None,
            log,
            &base_emb,
            calls,
        ),
    })
}
