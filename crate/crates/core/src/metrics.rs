//! Attack success rate, perturbation rate and average surviving genes.
//!
//! A report stores per-sample rows and the aggregates derived from them.
//! [`MetricsReport::verify`] recomputes the aggregates and demands bit
//! equality, which holds because both paths run the same summation in the
//! same order. Wall-clock time never enters a report, so reports of seeded
//! runs are byte-identical.

use serde::{Deserialize, Serialize};

use crate::search::{AttackResult, Outcome};

/// Perturbation rates above this are shown as `>10`.
pub const PR_DISPLAY_CAP: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOutcome {
    Success,
    Exhausted,
    /// The run itself failed; excluded from every aggregate.
    Error,
}

impl From<Outcome> for RowOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Success => RowOutcome::Success,
            Outcome::Exhausted => RowOutcome::Exhausted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRow {
    pub sample: String,
    pub seed: u64,
    pub outcome: RowOutcome,
    /// Net added nodes plus edges over original nodes plus edges.
    pub delta: f64,
    pub generations: usize,
    /// N_g for each logged generation.
    pub surviving_genes: Vec<usize>,
    pub error: Option<String>,
}

impl SampleRow {
    pub fn from_result(sample: impl Into<String>, seed: u64, r: &AttackResult) -> Self {
        Self {
            sample: sample.into(),
            seed,
            outcome: r.outcome.into(),
            delta: r.size.perturbation_rate(),
            generations: r.generations,
            surviving_genes: r.log.iter().map(|g| g.surviving_genes).collect(),
            error: None,
        }
    }

    pub fn failed(sample: impl Into<String>, seed: u64, error: impl ToString) -> Self {
        Self {
            sample: sample.into(),
            seed,
            outcome: RowOutcome::Error,
            delta: 0.0,
            generations: 0,
            surviving_genes: Vec::new(),
            error: Some(error.to_string()),
        }
    }

    /// (1/G)·Σ N_g for this sample; 0 with no generations.
    pub fn asgg(&self) -> f64 {
        mean(self.surviving_genes.iter().map(|&n| n as f64))
    }

    pub fn delta_display(&self) -> String {
        format_rate(self.delta)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Four decimals, or `>10` beyond the display cap.
pub fn format_rate(v: f64) -> String {
    if v > PR_DISPLAY_CAP {
        format!(">{PR_DISPLAY_CAP}")
    } else {
        format!("{v:.4}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub name: String,
    /// Samples that ran to completion (N_m).
    pub attempted: usize,
    /// Successful samples (N_a).
    pub succeeded: usize,
    pub errored: usize,
    pub asr: f64,
    pub pr: f64,
    pub asgg: f64,
    pub rows: Vec<SampleRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mismatch(pub &'static str);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "stored `{}` differs from the value recomputed from rows", self.0)
    }
}

impl std::error::Error for Mismatch {}

impl MetricsReport {
    /// ASR = N_a/N_m, PR = mean δ over successes, ASGG = mean per-sample
    /// ASGG over completed samples. Empty denominators give 0.
    pub fn from_rows(name: impl Into<String>, rows: Vec<SampleRow>) -> Self {
        let done = || rows.iter().filter(|r| r.outcome != RowOutcome::Error);
        let wins = || rows.iter().filter(|r| r.outcome == RowOutcome::Success);
        let attempted = done().count();
        let succeeded = wins().count();
        let asr = if attempted == 0 { 0.0 } else { succeeded as f64 / attempted as f64 };
        let pr = mean(wins().map(|r| r.delta));
        let asgg = mean(done().map(SampleRow::asgg));
        let errored = rows.len() - attempted;
        Self { name: name.into(), attempted, succeeded, errored, asr, pr, asgg, rows }
    }

    pub fn verify(&self) -> Result<(), Mismatch> {
        let again = Self::from_rows(self.name.clone(), self.rows.clone());
        let checks = [
            ("attempted", self.attempted == again.attempted),
            ("succeeded", self.succeeded == again.succeeded),
            ("errored", self.errored == again.errored),
            ("asr", self.asr.to_bits() == again.asr.to_bits()),
            ("pr", self.pr.to_bits() == again.pr.to_bits()),
            ("asgg", self.asgg.to_bits() == again.asgg.to_bits()),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((field, _)) => Err(Mismatch(field)),
            None => Ok(()),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(bytes)
    }

    /// Human-readable summary, one line per sample.
    pub fn render(&self) -> String {
        let mut s = format!(
            "{}: ASR {:.4} ({}/{}), PR {}, ASGG {:.2}, errors {}\n",
            self.name,
            self.asr,
            self.succeeded,
            self.attempted,
            format_rate(self.pr),
            self.asgg,
            self.errored
        );
        for r in &self.rows {
            let outcome = match r.outcome {
                RowOutcome::Success => "success",
                RowOutcome::Exhausted => "exhausted",
                RowOutcome::Error => "error",
            };
            s.push_str(&format!(
                "  {}\tseed={}\t{}\tdelta={}\tgenerations={}\tasgg={:.2}\n",
                r.sample,
                r.seed,
                outcome,
                r.delta_display(),
                r.generations,
                r.asgg()
            ));
        }
        s
    }
}
