//! Command bodies. Each returns a [`Failure`] carrying its exit status.

use std::fs;
use std::path::{Path, PathBuf};

use fcgprobe::embed::{AbstractionMap, Embedder};
use fcgprobe::experiment::{
    attack_batch, embed_all, evaluate_model, holdout_malware, train_target, ExperimentError, TrainedTarget,
};
use fcgprobe::graph::SensitiveApiIndex;
use fcgprobe::metrics::MetricsReport;
use fcgprobe::models::ModelError;
use fcgprobe::synth::{generate_corpus, read_corpus, write_corpus, Corpus, SynthError};
use serde::Serialize;

pub use fcgprobe::experiment::SearchMode as Mode;

use crate::config::RunConfig;
use crate::Failure;

pub const MODEL_FILE: &str = "model.json";
pub const METRICS_FILE: &str = "metrics.json";

pub fn result_file(seed: u64) -> String {
    format!("result_{seed}.json")
}

pub fn synth(cfg: &RunConfig) -> Result<(), Failure> {
    let out = cfg.out_dir()?;
    let corpus = generate_corpus(&cfg.synth).map_err(synth_failure)?;
    write_corpus(out, &corpus).map_err(synth_failure)?;
    let malware = corpus.graphs.iter().filter(|g| !g.label.is_benign()).count();
    println!("wrote {} graphs ({malware} malware) to {}", corpus.graphs.len(), out.display());
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<(), Failure> {
    let out = cfg.out_dir()?;
    cfg.check_optional_paths()?;
    let corpus = load_corpus(cfg)?;
    let apis = match &cfg.paths.sensitive_apis {
        Some(p) => {
            SensitiveApiIndex::parse(&read_text(p)?).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?
        }
        None => corpus.apis.clone(),
    };
    let mut embedder = Embedder::new(cfg.embed.scheme, apis);
    if let Some(p) = &cfg.paths.abstraction {
        let map = AbstractionMap::parse(&read_text(p)?).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
        embedder = embedder.with_abstraction(map);
    }

    let (_, train_idx) = holdout_malware(&corpus, cfg.batch.holdout);
    let graphs: Vec<_> = train_idx.iter().map(|&i| &corpus.graphs[i].graph).collect();
    let labels: Vec<_> = train_idx.iter().map(|&i| corpus.graphs[i].label).collect();
    let data = embed_all(&embedder, &graphs).map_err(Failure::data)?;
    let target = train_target(&embedder, &data, &labels, &cfg.model).map_err(experiment_failure)?;
    let confusion = evaluate_model(&target.model, &data, &labels).map_err(model_failure)?;

    write(&out.join(MODEL_FILE), &target.to_json(cfg.model.eliminate_conflicts))?;
    println!("model\tscheme\tsamples\taccuracy\tprecision\trecall\tf1");
    println!(
        "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
        cfg.model.kind,
        cfg.embed.scheme.name(),
        labels.len(),
        confusion.accuracy(),
        confusion.precision(),
        confusion.recall(),
        confusion.f1()
    );
    Ok(())
}

#[derive(Serialize)]
struct SampleFile<'a, T: Serialize> {
    sample: &'a str,
    seed: u64,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

#[derive(Serialize)]
struct ResultBody<'a> {
    result: &'a fcgprobe::search::AttackResult,
}

pub fn attack(cfg: &RunConfig, mode: Mode) -> Result<(), Failure> {
    let out = cfg.out_dir()?;
    let model_path = cfg.model_file()?;
    cfg.attack.validate().map_err(Failure::config)?;
    let corpus = load_corpus(cfg)?;
    let target = TrainedTarget::from_json(&read_bytes(model_path)?)
        .map_err(|e| Failure::data(format!("{}: {e}", model_path.display())))?;

    let (held, _) = holdout_malware(&corpus, cfg.batch.holdout);
    if held.is_empty() {
        return Err(Failure::data("the corpus has no malware graphs to attack"));
    }
    let samples: Vec<_> = held.iter().map(|&i| (corpus.graphs[i].name.clone(), &corpus.graphs[i].graph)).collect();
    let name = match mode {
        Mode::Genetic => "genetic",
        Mode::Random => "random",
    };
    let (report, outcomes) = attack_batch(name, &samples, &target, &cfg.attack, mode, cfg.batch.parallel);

    fs::create_dir_all(out).map_err(|e| Failure::data(format!("cannot create {}: {e}", out.display())))?;
    for o in &outcomes {
        let doc = match &o.result {
            Ok(r) => to_json(&SampleFile { sample: &o.name, seed: o.seed, body: ResultBody { result: r } }),
            Err(e) => to_json(&SampleFile { sample: &o.name, seed: o.seed, body: ErrorBody { error: e.to_string() } }),
        };
        write(&out.join(result_file(o.seed)), &doc)?;
    }
    write(&out.join(METRICS_FILE), &report.to_json())?;
    print!("{}", report.render());
    if report.errored > 0 {
        return Err(Failure {
            code: Failure::PARTIAL,
            message: format!("{} of {} samples failed", report.errored, report.rows.len()),
        });
    }
    Ok(())
}

pub fn report(cfg: &RunConfig, files: &[PathBuf]) -> Result<(), Failure> {
    let files = if files.is_empty() { vec![cfg.out_dir()?.join(METRICS_FILE)] } else { files.to_vec() };
    for path in &files {
        if !path.exists() {
            return Err(Failure::config(format!("metrics file {} does not exist", path.display())));
        }
        let report = MetricsReport::from_json(&read_bytes(path)?)
            .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        report.verify().map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
        print!("{}", report.render());
    }
    Ok(())
}

fn load_corpus(cfg: &RunConfig) -> Result<Corpus, Failure> {
    read_corpus(cfg.corpus_dir()?).map_err(synth_failure)
}

fn synth_failure(e: SynthError) -> Failure {
    match e {
        SynthError::Config(_) => Failure::config(e),
        _ => Failure::data(e),
    }
}

fn experiment_failure(e: ExperimentError) -> Failure {
    match e {
        ExperimentError::Model(m) => model_failure(m),
        other => Failure::data(other),
    }
}

fn model_failure(e: ModelError) -> Failure {
    match e {
        // Training only reports `Invalid` for bad hyperparameters.
        ModelError::Invalid(_) => Failure::config(e),
        _ => Failure::data(e),
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("result serializes");
    out.push(b'\n');
    out
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}
