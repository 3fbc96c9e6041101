//! One independent sampling job: rebuild the state from a snapshot, draw a
//! seeded shard of measurement shots, record ideal probabilities and phase
//! timings, and write `result_<job_id>.jsonl`.
//!
//! Result file format (schema version 1): line 1 is a JSON header
//! `{schema_version, job_id, seed, n_qubits, shots, snapshot_digest,
//! timings{queue_s,load_s,sample_s,total_s}}`; each following line is one
//! record `{bitstring, count, p_ideal}`, sorted by bitstring value.
//! Bitstrings are big-endian 0/1 text with qubit 0 rightmost.
//!
//! Workers are process-isolated by design: they share nothing but the
//! read-only snapshot, and never overwrite an existing output file.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{Bitstring, StateVector};
use crate::rng::{mix_seed, next_f64, stream_from_seed};
use crate::snapshot::{load_snapshot, snapshot_info, SnapshotDigest, SnapshotError};

pub const RESULT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("job count must be at least 1")]
    ZeroJobs,
    #[error("refusing to sample: state norm^2 is {norm_sqr}, outside 1 +/- 1e-6")]
    BadNorm { norm_sqr: f64 },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("result I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("output file {0} already exists; jobs never overwrite results")]
    OutputExists(PathBuf),
    #[error("malformed result file {path} (line {line}): {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
}

/// Configuration of one sampling job (one shard of the total shot budget).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub snapshot_path: PathBuf,
    /// This job's shard of the total shot budget.
    pub shots: u64,
    /// Run-level base seed; the job stream is derived via
    /// [`mix_seed`]`(base_seed, job_id)`.
    pub base_seed: u64,
    pub job_id: u64,
    pub output_dir: PathBuf,
    /// Scheduler-observed queue wait, recorded verbatim; 0 in local mode.
    #[serde(default)]
    pub queue_s: f64,
}

/// Wall-clock phases of one job, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub queue_s: f64,
    pub load_s: f64,
    pub sample_s: f64,
    pub total_s: f64,
}

/// Everything one job produced.
#[derive(Debug, Clone, PartialEq)]
pub struct JobResult {
    pub job_id: u64,
    pub seed_used: u64,
    pub n_qubits: usize,
    pub shots: u64,
    /// Occurrences per sampled bitstring value.
    pub counts: BTreeMap<u64, u64>,
    /// Ideal probability for every sampled bitstring value.
    pub p_ideal: BTreeMap<u64, f64>,
    pub timings: Timings,
    pub snapshot_digest: SnapshotDigest,
}

#[derive(Serialize, Deserialize)]
struct ResultHeader {
    schema_version: u32,
    job_id: u64,
    seed: u64,
    n_qubits: usize,
    shots: u64,
    snapshot_digest: SnapshotDigest,
    timings: Timings,
}

#[derive(Serialize, Deserialize)]
struct ResultRecord {
    bitstring: String,
    count: u64,
    p_ideal: f64,
}

/// Splits a total shot budget across `n_jobs` jobs: every job gets
/// `total / n_jobs`, and the first `total % n_jobs` jobs get one extra.
pub fn shard_shots(total: u64, n_jobs: u64) -> Result<Vec<u64>, SamplerError> {
    if n_jobs == 0 {
        return Err(SamplerError::ZeroJobs);
    }
    let base = total / n_jobs;
    let extra = total % n_jobs;
    Ok((0..n_jobs).map(|i| base + u64::from(i < extra)).collect())
}

/// Draws `shots` independent samples from p(x) = |amps[x]|^2.
///
/// The cumulative distribution is built once (O(2^n)); each shot is one
/// inverse-CDF binary search. Deterministic in `(state, shots, seed)`.
pub fn sample_bitstrings(
    state: &StateVector,
    shots: u64,
    seed: u64,
) -> Result<BTreeMap<u64, u64>, SamplerError> {
    if shots == 0 {
        return Err(SamplerError::ZeroShots);
    }
    let norm_sqr = state.norm_sqr();
    if (norm_sqr - 1.0).abs() > 1e-6 {
        return Err(SamplerError::BadNorm { norm_sqr });
    }

    let mut cdf = Vec::with_capacity(state.amps().len());
    let mut acc = 0.0f64;
    for a in state.amps() {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;

    let mut rng = stream_from_seed(seed);
    let mut counts = BTreeMap::new();
    let last = cdf.len() - 1;
    for _ in 0..shots {
        let u = next_f64(&mut rng) * total;
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        *counts.entry(idx as u64).or_insert(0u64) += 1;
    }
    Ok(counts)
}

/// Returns the canonical result file name for a job id.
pub fn result_file_name(job_id: u64) -> String {
    format!("result_{job_id}.jsonl")
}

/// Runs one sampling job end to end and writes its result file.
///
/// Phases: load the snapshot (`load_s`), derive the job seed, sample and
/// attach ideal probabilities (`sample_s`), write the output. The output
/// path is `output_dir/result_<job_id>.jsonl`; an existing file is an error.
pub fn run_worker(config: &SamplerConfig) -> Result<JobResult, SamplerError> {
    let t_total = Instant::now();

    let t_load = Instant::now();
    let info = snapshot_info(&config.snapshot_path)?;
    let state = load_snapshot(&config.snapshot_path)?;
    let load_s = t_load.elapsed().as_secs_f64();

    let seed_used = mix_seed(config.base_seed, config.job_id);

    let t_sample = Instant::now();
    let counts = sample_bitstrings(&state, config.shots, seed_used)?;
    let mut p_ideal = BTreeMap::new();
    for &value in counts.keys() {
        p_ideal.insert(value, state.amps()[value as usize].norm_sqr());
    }
    let sample_s = t_sample.elapsed().as_secs_f64();

    let result = JobResult {
        job_id: config.job_id,
        seed_used,
        n_qubits: state.n_qubits(),
        shots: config.shots,
        counts,
        p_ideal,
        timings: Timings {
            queue_s: config.queue_s,
            load_s,
            sample_s,
            total_s: t_total.elapsed().as_secs_f64(),
        },
        snapshot_digest: info.digest,
    };
    write_result_file(&result, &config.output_dir)?;
    Ok(result)
}

/// Writes `result_<job_id>.jsonl` into `dir`. Fails if the file exists.
pub fn write_result_file(result: &JobResult, dir: &Path) -> Result<PathBuf, SamplerError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(result_file_name(result.job_id));
    let file = OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(&path)
        .map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                SamplerError::OutputExists(path.clone())
            } else {
                SamplerError::Io(e)
            }
        })?;
    let mut writer = BufWriter::new(file);

    let header = ResultHeader {
        schema_version: RESULT_SCHEMA_VERSION,
        job_id: result.job_id,
        seed: result.seed_used,
        n_qubits: result.n_qubits,
        shots: result.shots,
        snapshot_digest: result.snapshot_digest,
        timings: result.timings,
    };
    serde_json::to_writer(&mut writer, &header).map_err(io_from_json)?;
    writer.write_all(b"\n")?;
    for (&value, &count) in &result.counts {
        let record = ResultRecord {
            bitstring: Bitstring::new(result.n_qubits, value)
                .expect("sampled value fits state width")
                .to_string(),
            count,
            p_ideal: result.p_ideal[&value],
        };
        serde_json::to_writer(&mut writer, &record).map_err(io_from_json)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(path)
}

fn io_from_json(e: serde_json::Error) -> SamplerError {
    SamplerError::Io(std::io::Error::new(std::io::ErrorKind::Other, e))
}

/// Parses a result file back into a [`JobResult`].
pub fn read_result_file(path: &Path) -> Result<JobResult, SamplerError> {
    let malformed = |line: usize, message: String| SamplerError::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();

    let header_line = lines
        .next()
        .ok_or_else(|| malformed(1, "empty file".into()))??;
    let header: ResultHeader = serde_json::from_str(&header_line)
        .map_err(|e| malformed(1, e.to_string()))?;
    if header.schema_version != RESULT_SCHEMA_VERSION {
        return Err(malformed(
            1,
            format!("unsupported schema version {}", header.schema_version),
        ));
    }

    let mut counts = BTreeMap::new();
    let mut p_ideal = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ResultRecord =
            serde_json::from_str(&line).map_err(|e| malformed(line_no, e.to_string()))?;
        let bits: Bitstring = record
            .bitstring
            .parse()
            .map_err(|e: String| malformed(line_no, e))?;
        if bits.n_bits() != header.n_qubits {
            return Err(malformed(
                line_no,
                format!(
                    "bitstring width {} does not match header n_qubits {}",
                    bits.n_bits(),
                    header.n_qubits
                ),
            ));
        }
        if !(0.0..=1.0).contains(&record.p_ideal) {
            return Err(malformed(
                line_no,
                format!("p_ideal {} outside [0, 1]", record.p_ideal),
            ));
        }
        if counts.insert(bits.value(), record.count).is_some() {
            return Err(malformed(
                line_no,
                format!("duplicate bitstring {}", record.bitstring),
            ));
        }
        p_ideal.insert(bits.value(), record.p_ideal);
    }
    let total: u64 = counts.values().sum();
    if total != header.shots {
        return Err(malformed(
            1,
            format!("record counts sum to {total}, header says {} shots", header.shots),
        ));
    }
    Ok(JobResult {
        job_id: header.job_id,
        seed_used: header.seed,
        n_qubits: header.n_qubits,
        shots: header.shots,
        counts,
        p_ideal,
        timings: header.timings,
        snapshot_digest: header.snapshot_digest,
    })
}
