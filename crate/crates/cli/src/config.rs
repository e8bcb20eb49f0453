//! Run configuration: a TOML document with one table per stage.
//!
//! Every table is optional and falls back to library defaults. Command-line
//! flags are applied on top of the file, so a flag always wins.

use std::path::{Path, PathBuf};

use fcgprobe::embed::Scheme;
use fcgprobe::experiment::TrainConfig;
use fcgprobe::search::AttackConfig;
use fcgprobe::synth::SynthConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub synth: SynthConfig,
    pub embed: EmbedSection,
    pub model: TrainConfig,
    pub attack: AttackConfig,
    pub batch: BatchSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Corpus directory as written by `synth`.
    pub corpus: Option<PathBuf>,
    /// Model file for `attack` and `baseline`.
    pub model: Option<PathBuf>,
    /// Overrides the corpus' own `sensitive_apis.txt` when training.
    pub sensitive_apis: Option<PathBuf>,
    /// Prefix-to-state map, required by the Markov schemes.
    pub abstraction: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    pub scheme: Scheme,
}

impl Default for EmbedSection {
    fn default() -> Self {
        Self { scheme: Scheme::Degree }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchSection {
    /// Malware graphs held out of training; they are the attack seeds.
    pub holdout: usize,
    /// Attack seeds concurrently. Results do not depend on it.
    pub parallel: bool,
}

impl Default for BatchSection {
    fn default() -> Self {
        Self { holdout: 20, parallel: false }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    pub fn out_dir(&self) -> Result<&Path, Failure> {
        self.paths.out.as_deref().ok_or_else(|| Failure::config("an output directory is required (--out)"))
    }

    pub fn corpus_dir(&self) -> Result<&Path, Failure> {
        existing(self.paths.corpus.as_deref(), "corpus directory (--corpus)")
    }

    pub fn model_file(&self) -> Result<&Path, Failure> {
        existing(self.paths.model.as_deref(), "model file (--model)")
    }

    /// Optional paths must exist when given.
    pub fn check_optional_paths(&self) -> Result<(), Failure> {
        for (p, what) in
            [(&self.paths.sensitive_apis, "sensitive API list"), (&self.paths.abstraction, "abstraction map")]
        {
            if let Some(p) = p {
                existing(Some(p), what)?;
            }
        }
        Ok(())
    }
}

fn existing<'a>(path: Option<&'a Path>, what: &str) -> Result<&'a Path, Failure> {
    match path {
        None => Err(Failure::config(format!("a {what} is required"))),
        Some(p) if !p.exists() => Err(Failure::config(format!("{what} {} does not exist", p.display()))),
        Some(p) => Ok(p),
    }
}
