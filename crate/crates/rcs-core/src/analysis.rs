//! Post-processing: merge job results, score linear XEB, summarize
//! telemetry, fit the shots-vs-runtime scaling model and derive runtime
//! extrapolations and speedup ratios.
//!
//! Linear XEB over a merged sample is `F = 2^n * <p_ideal(x)> - 1`, the mean
//! taken over sampled bitstrings with multiplicity. An ideal sampler on a
//! chaotic circuit concentrates near `2^n * sum_x p(x)^2 - 1`; a uniform
//! sampler's expectation is exactly 0. The reported standard error is
//! `2^n * stddev(p) / sqrt(shots)` with the per-shot sample variance of the
//! probabilities.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Bitstring;
use crate::sampler::{read_result_file, SamplerError, Timings};
use crate::snapshot::SnapshotDigest;

/// XEB score reported for a production-engine run of the 53-qubit, 14-cycle
/// EFGH Sycamore circuit. A documentation fixture only: it depends on a
/// proprietary engine and hardware-scale state, and is not reproducible by
/// this desk-scale artifact.
pub const REFERENCE_XEB_53Q_14CYCLE: f64 = 0.549;

/// Default speedup baselines, in seconds.
///
/// `google-classical-estimate` is the published 10,000-year classical
/// estimate for the 53-qubit supremacy circuit (10,000 * 365 * 86,400 s);
/// `prior-cpu-only` is the ~2.5-day single-node CPU simulation it is
/// compared against.
pub fn default_baselines() -> Vec<SpeedupBaseline> {
    vec![
        SpeedupBaseline { name: "google-classical-estimate".into(), baseline_s: 3.1536e11 },
        SpeedupBaseline { name: "prior-cpu-only".into(), baseline_s: 2.16e5 },
    ]
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no result files to aggregate")]
    NoInput,
    #[error("duplicate job id {0} across result files")]
    DuplicateJob(u64),
    #[error("snapshot digest mismatch across result files: jobs sampled different states")]
    DigestMismatch,
    #[error("result files disagree on qubit count ({a} vs {b})")]
    QubitMismatch { a: usize, b: usize },
    #[error("p_ideal for bitstring {bitstring} differs across jobs by {delta:e} (> 1e-12)")]
    InconsistentPIdeal { bitstring: String, delta: f64 },
    #[error("no ideal probability recorded for bitstring {0}")]
    MissingPIdeal(String),
    #[error("merged sample has zero shots")]
    EmptySample,
    #[error("scaling fit needs at least 2 distinct shot counts")]
    DegenerateFit,
    #[error("job count must be at least 1")]
    ZeroJobs,
    #[error("total time must be positive, got {0}")]
    NonPositiveTotal(f64),
    #[error("reference table {path}, line {line}: {message}")]
    BadReferenceTable { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Result(#[from] SamplerError),
}

/// Union of all job results of a run.
#[derive(Debug, Clone, Serialize)]
pub struct MergedSample {
    pub n_qubits: usize,
    pub total_shots: u64,
    #[serde(skip)]
    pub counts: BTreeMap<u64, u64>,
    #[serde(skip)]
    pub p_ideal: BTreeMap<u64, f64>,
    pub job_ids: Vec<u64>,
    /// Set when the contributing set differs from the expected set.
    pub partial: bool,
    pub snapshot_digest: SnapshotDigest,
    /// Lenient-mode notes about skipped inputs.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct AggregateOptions {
    /// Skip malformed files with a warning instead of failing.
    pub lenient: bool,
    /// Job ids the run was supposed to produce; enables the partial flag.
    pub expected_jobs: Option<Vec<u64>>,
}

/// Merges result files: counts add up, ideal probabilities must agree to
/// 1e-12, and all files must reference the same snapshot digest.
pub fn aggregate(
    paths: &[PathBuf],
    options: &AggregateOptions,
) -> Result<MergedSample, AnalysisError> {
    let mut merged: Option<MergedSample> = None;
    let mut warnings = Vec::new();

    let mut sorted: Vec<&PathBuf> = paths.iter().collect();
    sorted.sort();
    for path in sorted {
        let job = match read_result_file(path) {
            Ok(job) => job,
            Err(e) if options.lenient => {
                warnings.push(format!("skipped {}: {e}", path.display()));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        match &mut merged {
            None => {
                merged = Some(MergedSample {
                    n_qubits: job.n_qubits,
                    total_shots: job.shots,
                    counts: job.counts,
                    p_ideal: job.p_ideal,
                    job_ids: vec![job.job_id],
                    partial: false,
                    snapshot_digest: job.snapshot_digest,
                    warnings: Vec::new(),
                });
            }
            Some(acc) => {
                if acc.job_ids.contains(&job.job_id) {
                    return Err(AnalysisError::DuplicateJob(job.job_id));
                }
                if job.n_qubits != acc.n_qubits {
                    return Err(AnalysisError::QubitMismatch {
                        a: acc.n_qubits,
                        b: job.n_qubits,
                    });
                }
                if job.snapshot_digest != acc.snapshot_digest {
                    return Err(AnalysisError::DigestMismatch);
                }
                for (value, p) in job.p_ideal {
                    match acc.p_ideal.get(&value) {
                        Some(&existing) if (existing - p).abs() > 1e-12 => {
                            return Err(AnalysisError::InconsistentPIdeal {
                                bitstring: bitstring_text(acc.n_qubits, value),
                                delta: (existing - p).abs(),
                            });
                        }
                        Some(_) => {}
                        None => {
                            acc.p_ideal.insert(value, p);
                        }
                    }
                }
                for (value, count) in job.counts {
                    *acc.counts.entry(value).or_insert(0) += count;
                }
                acc.total_shots += job.shots;
                acc.job_ids.push(job.job_id);
            }
        }
    }

    let mut merged = merged.ok_or(AnalysisError::NoInput)?;
    merged.job_ids.sort_unstable();
    if let Some(expected) = &options.expected_jobs {
        let mut expected = expected.clone();
        expected.sort_unstable();
        merged.partial = merged.job_ids != expected;
    }
    merged.warnings = warnings;
    Ok(merged)
}

fn bitstring_text(n_bits: usize, value: u64) -> String {
    Bitstring::new(n_bits, value)
        .map(|b| b.to_string())
        .unwrap_or_else(|_| value.to_string())
}

/// Linear XEB score with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XebReport {
    pub n_qubits: usize,
    pub total_shots: u64,
    pub xeb: f64,
    pub std_error: f64,
}

/// Scores a merged sample against the worker-recorded ideal probabilities.
pub fn xeb_score(merged: &MergedSample) -> Result<XebReport, AnalysisError> {
    xeb_from_lookup(merged, |value| merged.p_ideal.get(&value).copied())
}

/// Scores a merged sample against an external probability table (e.g. built
/// from published reference amplitudes via [`load_reference_table`]).
pub fn xeb_score_with_table(
    merged: &MergedSample,
    table: &BTreeMap<u64, f64>,
) -> Result<XebReport, AnalysisError> {
    xeb_from_lookup(merged, |value| table.get(&value).copied())
}

fn xeb_from_lookup(
    merged: &MergedSample,
    lookup: impl Fn(u64) -> Option<f64>,
) -> Result<XebReport, AnalysisError> {
    if merged.total_shots == 0 {
        return Err(AnalysisError::EmptySample);
    }
    let shots = merged.total_shots as f64;
    let dim = (1u64 << merged.n_qubits) as f64;

    let mut sum_p = 0.0f64;
    for (&value, &count) in &merged.counts {
        let p = lookup(value).ok_or_else(|| {
            AnalysisError::MissingPIdeal(bitstring_text(merged.n_qubits, value))
        })?;
        sum_p += count as f64 * p;
    }
    let mean_p = sum_p / shots;

    let mut sum_sq = 0.0f64;
    for (&value, &count) in &merged.counts {
        let p = lookup(value).expect("checked above");
        sum_sq += count as f64 * (p - mean_p).powi(2);
    }
    let variance = if merged.total_shots > 1 {
        sum_sq / (shots - 1.0)
    } else {
        0.0
    };
    Ok(XebReport {
        n_qubits: merged.n_qubits,
        total_shots: merged.total_shots,
        xeb: dim * mean_p - 1.0,
        std_error: dim * variance.sqrt() / shots.sqrt(),
    })
}

/// Reads a reference amplitude table: one `bitstring re im` triple per line
/// (whitespace-separated, `#` comments). Returns the bit width and the
/// probability |re + i*im|^2 per bitstring value.
pub fn load_reference_table(
    path: &Path,
) -> Result<(usize, BTreeMap<u64, f64>), AnalysisError> {
    let bad = |line: usize, message: String| AnalysisError::BadReferenceTable {
        path: path.to_path_buf(),
        line,
        message,
    };
    let text = std::fs::read_to_string(path).map_err(SamplerError::Io)?;
    let mut table = BTreeMap::new();
    let mut width: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(line_no, format!("expected `bitstring re im`, got {} fields", fields.len())));
        }
        let bits: Bitstring = fields[0].parse().map_err(|e: String| bad(line_no, e))?;
        match width {
            None => width = Some(bits.n_bits()),
            Some(w) if w != bits.n_bits() => {
                return Err(bad(line_no, format!("bitstring width {} != {}", bits.n_bits(), w)));
            }
            Some(_) => {}
        }
        let re: f64 = fields[1].parse().map_err(|_| bad(line_no, format!("bad real part `{}`", fields[1])))?;
        let im: f64 = fields[2].parse().map_err(|_| bad(line_no, format!("bad imaginary part `{}`", fields[2])))?;
        table.insert(bits.value(), re * re + im * im);
    }
    let width = width.ok_or_else(|| bad(1, "table is empty".into()))?;
    Ok((width, table))
}

/// min/max/avg of one telemetry phase, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseStats {
    pub min_s: f64,
    pub max_s: f64,
    pub avg_s: f64,
}

impl PhaseStats {
    fn over(values: impl Iterator<Item = f64>) -> Option<PhaseStats> {
        let mut n = 0usize;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for v in values {
            n += 1;
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        (n > 0).then(|| PhaseStats { min_s: min, max_s: max, avg_s: sum / n as f64 })
    }
}

/// Per-phase job telemetry in the shape of the experiment's timing table:
/// state calculation (one value replicated), queue wait and sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub n_jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_calc: Option<PhaseStats>,
    pub queue: PhaseStats,
    pub sampling: PhaseStats,
}

/// Summarizes per-job timings. `state_calc_s` is the single stage-1 duration
/// replicated across min/max/avg, when known.
pub fn timing_summary(
    timings: &[Timings],
    state_calc_s: Option<f64>,
) -> Result<TimingSummary, AnalysisError> {
    if timings.is_empty() {
        return Err(AnalysisError::NoInput);
    }
    Ok(TimingSummary {
        n_jobs: timings.len(),
        state_calc: state_calc_s
            .map(|s| PhaseStats { min_s: s, max_s: s, avg_s: s }),
        queue: PhaseStats::over(timings.iter().map(|t| t.queue_s)).unwrap(),
        sampling: PhaseStats::over(timings.iter().map(|t| t.sample_s)).unwrap(),
    })
}

/// Least-squares line `seconds = rate * shots + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingModel {
    /// Seconds per shot.
    pub rate: f64,
    /// Fixed per-job seconds (state rebuild and other overhead).
    pub intercept: f64,
    /// RMS of fit residuals, seconds.
    pub residual_rms: f64,
}

impl ScalingModel {
    /// Predicted per-job sampling seconds at a shot count.
    pub fn predict(&self, shots_per_job: f64) -> f64 {
        self.rate * shots_per_job + self.intercept
    }

    /// Model through the origin pinned to one observed `(shots, seconds)`
    /// row, for using a measured configuration directly.
    pub fn from_single_observation(shots_per_job: f64, seconds: f64) -> ScalingModel {
        ScalingModel { rate: seconds / shots_per_job, intercept: 0.0, residual_rms: 0.0 }
    }
}

/// Ordinary least squares over `(shots_per_job, seconds)` points.
///
/// Requires at least two distinct shot counts.
pub fn fit_scaling(points: &[(f64, f64)]) -> Result<ScalingModel, AnalysisError> {
    let distinct = {
        let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.len()
    };
    if points.len() < 2 || distinct < 2 {
        return Err(AnalysisError::DegenerateFit);
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let rate = sxy / sxx;
    let intercept = mean_y - rate * mean_x;
    let ss_res = points
        .iter()
        .map(|&(x, y)| (y - (rate * x + intercept)).powi(2))
        .sum::<f64>();
    Ok(ScalingModel { rate, intercept, residual_rms: (ss_res / n).sqrt() })
}

/// Runtime extrapolation for a `(total_shots, n_jobs)` configuration.
///
/// Queue waits are deliberately excluded (`excludes_queue`); they are an
/// environmental quantity, reported separately by [`timing_summary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeEstimate {
    pub state_calc_s: f64,
    pub shots_per_job: f64,
    pub sampling_s: f64,
    pub total_s: f64,
    /// Always true: queue waits are not part of the extrapolation.
    pub excludes_queue: bool,
}

/// `state_calc_s` + the model applied to `total_shots / n_jobs` shots.
pub fn estimate_runtime(
    model: &ScalingModel,
    state_calc_s: f64,
    total_shots: u64,
    n_jobs: u64,
) -> Result<RuntimeEstimate, AnalysisError> {
    if n_jobs == 0 {
        return Err(AnalysisError::ZeroJobs);
    }
    let shots_per_job = total_shots as f64 / n_jobs as f64;
    let sampling_s = model.predict(shots_per_job);
    Ok(RuntimeEstimate {
        state_calc_s,
        shots_per_job,
        sampling_s,
        total_s: state_calc_s + sampling_s,
        excludes_queue: true,
    })
}

/// A named wall-clock baseline to compare runs against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupBaseline {
    pub name: String,
    pub baseline_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupEntry {
    pub name: String,
    pub baseline_s: f64,
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub total_s: f64,
    pub entries: Vec<SpeedupEntry>,
}

/// Ratios `baseline / total` against each configured baseline.
pub fn speedup_report(
    total_s: f64,
    baselines: &[SpeedupBaseline],
) -> Result<SpeedupReport, AnalysisError> {
    if total_s <= 0.0 {
        return Err(AnalysisError::NonPositiveTotal(total_s));
    }
    Ok(SpeedupReport {
        total_s,
        entries: baselines
            .iter()
            .map(|b| SpeedupEntry {
                name: b.name.clone(),
                baseline_s: b.baseline_s,
                speedup: b.baseline_s / total_s,
            })
            .collect(),
    })
}
