//! Pipeline driver: local end-to-end runs, SLURM script emission, stage
//! timing reports and the result-directory analysis entry point.
//!
//! A local run executes the stages strictly in order — workers are only
//! spawned after the snapshot's atomic rename has completed — and survives
//! worker failures: failed shards are recorded in the manifest and
//! aggregation proceeds over the shards that did finish, labeled partial.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use rcs_core::analysis::{
    aggregate, default_baselines, estimate_runtime, fit_scaling, load_reference_table,
    speedup_report, timing_summary, xeb_score, xeb_score_with_table, AggregateOptions,
    AnalysisError, PhaseStats, RuntimeEstimate, ScalingModel, SpeedupReport, TimingSummary,
    XebReport,
};
use rcs_core::circuit::generate::{generate_rcs_circuit, PatternSpec};
use rcs_core::circuit::qasm::{parse_qasm, QasmError};
use rcs_core::circuit::{Circuit, CircuitError};
use rcs_core::engine::{build_state_with_cap, EngineError, DEFAULT_MAX_QUBITS};
use rcs_core::sampler::{result_file_name, shard_shots, SamplerError, Timings};
use rcs_core::snapshot::{save_snapshot, SnapshotDigest, SnapshotError};

pub const SNAPSHOT_FILE: &str = "state.rcss";
pub const STATE_BUILD_FILE: &str = "state_build.json";
pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const RESULTS_DIR: &str = "results";
pub const ANALYSIS_DIR: &str = "analysis";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("QASM parse failed: {0}")]
    Qasm(#[from] QasmError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("pipeline I/O failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to spawn worker {job_id}: {source}")]
    WorkerSpawn { job_id: u64, source: std::io::Error },
    #[error("all {0} sampling shards failed; see worker logs in the work dir")]
    AllShardsFailed(u64),
    #[error("cannot determine worker executable: {0}")]
    WorkerExe(String),
    #[error("report serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// Where the circuit comes from: a QASM file or the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitSource {
    Qasm { path: PathBuf },
    Generated { rows: usize, cols: usize, cycles: usize, pattern: String, seed: u64 },
}

impl CircuitSource {
    pub fn load(&self) -> Result<Circuit, PipelineError> {
        match self {
            CircuitSource::Qasm { path } => {
                let text = std::fs::read_to_string(path)?;
                Ok(parse_qasm(&text)?)
            }
            CircuitSource::Generated { rows, cols, cycles, pattern, seed } => {
                let pattern = PatternSpec::new(pattern, *rows, *cols)?;
                Ok(generate_rcs_circuit(&pattern, *cycles, *seed)?)
            }
        }
    }

    /// CLI arguments reproducing this source, for emitted scripts.
    fn cli_args(&self) -> String {
        match self {
            CircuitSource::Qasm { path } => format!("--qasm \"{}\"", path.display()),
            CircuitSource::Generated { rows, cols, cycles, pattern, seed } => format!(
                "--rows {rows} --cols {cols} --cycles {cycles} --pattern {pattern} --circuit-seed {seed}"
            ),
        }
    }
}

/// Per-task resources requested in emitted batch scripts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceSpec {
    pub cpus: u32,
    pub mem: String,
}

impl Default for ResourceSpec {
    fn default() -> Self {
        // the reference deployment provisions 8 cores / 16 GB per job
        ResourceSpec { cpus: 8, mem: "16G".into() }
    }
}

/// Full pipeline configuration. `total_shots >= n_jobs >= 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub circuit: CircuitSource,
    pub total_shots: u64,
    pub n_jobs: u64,
    pub base_seed: u64,
    pub work_dir: PathBuf,
    /// Bound on concurrently running local workers; defaults to the host
    /// CPU count.
    #[serde(default)]
    pub max_procs: Option<usize>,
    #[serde(default)]
    pub resources: ResourceSpec,
    /// Engine qubit cap override.
    #[serde(default)]
    pub max_qubits: Option<usize>,
    /// Worker binary for local fan-out; defaults to the current executable.
    #[serde(skip)]
    pub worker_exe: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.n_jobs == 0 {
            return Err(PipelineError::InvalidConfig("n_jobs must be >= 1".into()));
        }
        if self.total_shots < self.n_jobs {
            return Err(PipelineError::InvalidConfig(format!(
                "total_shots ({}) must be >= n_jobs ({})",
                self.total_shots, self.n_jobs
            )));
        }
        Ok(())
    }

    fn worker_exe(&self) -> Result<PathBuf, PipelineError> {
        match &self.worker_exe {
            Some(path) => Ok(path.clone()),
            None => std::env::current_exe()
                .map_err(|e| PipelineError::WorkerExe(e.to_string())),
        }
    }
}

/// Wall-clock span of one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSpan {
    pub start_unix_s: f64,
    pub end_unix_s: f64,
    pub duration_s: f64,
}

impl StageSpan {
    fn measure<T>(f: impl FnOnce() -> T) -> (StageSpan, T) {
        let start_unix_s = unix_now();
        let t0 = Instant::now();
        let value = f();
        let duration_s = t0.elapsed().as_secs_f64();
        (
            StageSpan { start_unix_s, end_unix_s: start_unix_s + duration_s, duration_s },
            value,
        )
    }
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stages {
    pub state_calc: StageSpan,
    pub persist: StageSpan,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<StageSpan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<StageSpan>,
}

/// Outcome of one sampling shard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardStatus {
    pub job_id: u64,
    pub shots: u64,
    pub result_file: PathBuf,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Everything a run leaves behind, written to `run_manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: PipelineConfig,
    pub n_qubits: usize,
    pub snapshot_path: PathBuf,
    pub snapshot_digest: SnapshotDigest,
    /// Exactly `n_jobs` entries, present or not.
    pub expected_result_files: Vec<PathBuf>,
    pub stages: Stages,
    pub shards: Vec<ShardStatus>,
    pub failed_shards: Vec<u64>,
    pub partial: bool,
    pub total_s: f64,
    /// How queue timings were (not) observed for this run.
    pub queue_provenance: String,
}

/// Writes `value` as pretty JSON to `path`.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Stage-1 report written by `build-state` next to the snapshot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateBuildReport {
    pub n_qubits: usize,
    pub snapshot_path: PathBuf,
    pub snapshot_digest: SnapshotDigest,
    pub build_s: f64,
    pub save_s: f64,
}

/// Runs stages 1+2: construct the state and persist the snapshot.
pub fn build_and_persist(
    circuit: &Circuit,
    snapshot_path: &Path,
    max_qubits: Option<usize>,
) -> Result<(StateBuildReport, StageSpan, StageSpan), PipelineError> {
    let cap = max_qubits.unwrap_or(DEFAULT_MAX_QUBITS);
    let (state_span, state) = StageSpan::measure(|| build_state_with_cap(circuit, cap));
    let state = state?;
    let (persist_span, digest) = StageSpan::measure(|| save_snapshot(&state, snapshot_path));
    let digest = digest?;
    let report = StateBuildReport {
        n_qubits: state.n_qubits(),
        snapshot_path: snapshot_path.to_path_buf(),
        snapshot_digest: digest,
        build_s: state_span.duration_s,
        save_s: persist_span.duration_s,
    };
    Ok((report, state_span, persist_span))
}

/// Runs the full pipeline locally with process fan-out.
///
/// Worker processes are the same binary invoked as `sample` subcommands; at
/// most `max_procs` run at once. Returns the manifest; worker failures leave
/// `partial` set rather than failing the run, unless every shard failed.
pub fn run_local(config: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    config.validate()?;
    let t_pipeline = Instant::now();
    std::fs::create_dir_all(&config.work_dir)?;

    // stage 1: construct the state; stage 2: persist it
    let circuit = config.circuit.load()?;
    let snapshot_path = config.work_dir.join(SNAPSHOT_FILE);
    let (report, state_span, persist_span) =
        build_and_persist(&circuit, &snapshot_path, config.max_qubits)?;
    write_json(&config.work_dir.join(STATE_BUILD_FILE), &report)?;

    // stage 3: fan out one process per shard, bounded by the pool limit
    let results_dir = config.work_dir.join(RESULTS_DIR);
    std::fs::create_dir_all(&results_dir)?;
    let logs_dir = config.work_dir.join("logs");
    std::fs::create_dir_all(&logs_dir)?;
    let shards = shard_shots(config.total_shots, config.n_jobs)?;
    let worker_exe = config.worker_exe()?;
    let limit = config
        .max_procs
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        })
        .max(1);

    let (sampling_span, shard_statuses) = StageSpan::measure(|| {
        run_shards(config, &worker_exe, &snapshot_path, &results_dir, &logs_dir, &shards, limit)
    });
    let shard_statuses = shard_statuses?;

    let failed_shards: Vec<u64> = shard_statuses
        .iter()
        .filter(|s| !s.ok)
        .map(|s| s.job_id)
        .collect();
    let expected_result_files: Vec<PathBuf> = (0..config.n_jobs)
        .map(|job_id| results_dir.join(result_file_name(job_id)))
        .collect();

    let mut manifest = RunManifest {
        config: config.clone(),
        n_qubits: report.n_qubits,
        snapshot_path,
        snapshot_digest: report.snapshot_digest,
        expected_result_files: expected_result_files.clone(),
        stages: Stages {
            state_calc: state_span,
            persist: persist_span,
            sampling: Some(sampling_span),
            aggregation: None,
        },
        shards: shard_statuses,
        failed_shards: failed_shards.clone(),
        partial: !failed_shards.is_empty(),
        total_s: t_pipeline.elapsed().as_secs_f64(),
        queue_provenance: "local run: no scheduler, queue waits unobserved (workers record 0)"
            .into(),
    };

    if failed_shards.len() as u64 == config.n_jobs {
        manifest.total_s = t_pipeline.elapsed().as_secs_f64();
        write_json(&config.work_dir.join(MANIFEST_FILE), &manifest)?;
        return Err(PipelineError::AllShardsFailed(config.n_jobs));
    }

    // stage 4: aggregate exactly the files of the shards that succeeded
    let analyze = AnalyzeOptions {
        out_dir: config.work_dir.join(ANALYSIS_DIR),
        expected_jobs: Some(config.n_jobs),
        state_calc_s: Some(state_span.duration_s),
        lenient: false,
        reference: None,
        total_s: None, // speedup written below with the final wall time
    };
    let ok_files: Vec<PathBuf> = manifest
        .shards
        .iter()
        .filter(|s| s.ok)
        .map(|s| s.result_file.clone())
        .collect();
    let (aggregation_span, summary) =
        StageSpan::measure(|| analyze_result_files(&ok_files, &analyze));
    let summary = summary?;
    manifest.stages.aggregation = Some(aggregation_span);
    manifest.partial = manifest.partial || summary.partial;

    manifest.total_s = t_pipeline.elapsed().as_secs_f64();
    let speedup = speedup_report(manifest.total_s, &default_baselines())?;
    write_json(&config.work_dir.join(ANALYSIS_DIR).join("speedup_report.json"), &speedup)?;
    write_json(&config.work_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn run_shards(
    config: &PipelineConfig,
    worker_exe: &Path,
    snapshot_path: &Path,
    results_dir: &Path,
    logs_dir: &Path,
    shards: &[u64],
    limit: usize,
) -> Result<Vec<ShardStatus>, PipelineError> {
    let mut pending: VecDeque<(u64, u64)> = shards
        .iter()
        .enumerate()
        .map(|(job_id, &shots)| (job_id as u64, shots))
        .collect();
    let mut active: Vec<(u64, u64, std::process::Child)> = Vec::new();
    let mut statuses: Vec<ShardStatus> = Vec::new();

    while !pending.is_empty() || !active.is_empty() {
        while active.len() < limit {
            let Some((job_id, shots)) = pending.pop_front() else { break };
            let stderr = std::fs::File::create(logs_dir.join(format!("worker_{job_id}.log")))?;
            let child = Command::new(worker_exe)
                .arg("sample")
                .arg("--snapshot")
                .arg(snapshot_path)
                .arg("--shots")
                .arg(shots.to_string())
                .arg("--seed")
                .arg(config.base_seed.to_string())
                .arg("--job-id")
                .arg(job_id.to_string())
                .arg("--out-dir")
                .arg(results_dir)
                .env_remove("SLURM_JOB_ID")
                .env_remove("SLURM_ARRAY_TASK_ID")
                .stdin(Stdio::null())
                .stdout(Stdio::null())
                .stderr(stderr)
                .spawn()
                .map_err(|source| PipelineError::WorkerSpawn { job_id, source })?;
            active.push((job_id, shots, child));
        }

        let mut progressed = false;
        let mut i = 0;
        while i < active.len() {
            match active[i].2.try_wait()? {
                Some(status) => {
                    let (job_id, shots, _) = active.swap_remove(i);
                    let result_file = results_dir.join(result_file_name(job_id));
                    let ok = status.success() && result_file.exists();
                    statuses.push(ShardStatus {
                        job_id,
                        shots,
                        result_file,
                        ok,
                        detail: (!ok).then(|| format!("worker exited with {status}")),
                    });
                    progressed = true;
                }
                None => i += 1,
            }
        }
        if !progressed && !active.is_empty() {
            std::thread::sleep(std::time::Duration::from_millis(5));
        }
    }
    statuses.sort_by_key(|s| s.job_id);
    Ok(statuses)
}

/// Options for analyzing a set of `result_*.jsonl` files.
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub out_dir: PathBuf,
    /// When set, jobs 0..n are expected and the partial flag tracks gaps.
    pub expected_jobs: Option<u64>,
    /// Stage-1 duration for the timing summary, when known.
    pub state_calc_s: Option<f64>,
    pub lenient: bool,
    /// Optional reference amplitude table for cross-validation scoring.
    pub reference: Option<PathBuf>,
    /// Total run wall time; enables the speedup report.
    pub total_s: Option<f64>,
}

/// What the analysis stage produced and wrote.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeSummary {
    pub n_qubits: usize,
    pub total_shots: u64,
    pub job_ids: Vec<u64>,
    pub partial: bool,
    pub xeb: XebReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xeb_reference: Option<XebReport>,
    pub timing: TimingSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<RuntimeEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speedup: Option<SpeedupReport>,
    pub warnings: Vec<String>,
    pub written: Vec<PathBuf>,
}

/// Lists `result_*.jsonl` files in a directory, sorted by job id.
pub fn list_result_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut found: Vec<(u64, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        if let Some(id) = name
            .strip_prefix("result_")
            .and_then(|rest| rest.strip_suffix(".jsonl"))
            .and_then(|id| id.parse::<u64>().ok())
        {
            found.push((id, path));
        }
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

/// Stage 4 over a directory: analyzes every `result_*.jsonl` found in it.
pub fn analyze_results(
    results_dir: &Path,
    options: &AnalyzeOptions,
) -> Result<AnalyzeSummary, PipelineError> {
    let paths = list_result_files(results_dir)?;
    analyze_result_files(&paths, options)
}

/// Stage 4: merge result files, score XEB, summarize telemetry, fit the
/// scaling model when shot counts vary, and write the report files.
pub fn analyze_result_files(
    paths: &[PathBuf],
    options: &AnalyzeOptions,
) -> Result<AnalyzeSummary, PipelineError> {
    let aggregate_options = AggregateOptions {
        lenient: options.lenient,
        expected_jobs: options.expected_jobs.map(|n| (0..n).collect()),
    };
    let merged = aggregate(&paths, &aggregate_options)?;
    let xeb = xeb_score(&merged)?;

    let mut written = Vec::new();
    let out = &options.out_dir;
    write_json(&out.join("xeb_report.json"), &xeb)?;
    written.push(out.join("xeb_report.json"));

    // reference-table scoring, when a table is supplied
    let xeb_reference = match &options.reference {
        Some(path) => {
            let (_, table) = load_reference_table(path)?;
            let report = xeb_score_with_table(&merged, &table)?;
            write_json(&out.join("xeb_reference_report.json"), &report)?;
            written.push(out.join("xeb_reference_report.json"));
            Some(report)
        }
        None => None,
    };

    // per-job timings and scaling points come from the merged jobs only
    let mut timings: Vec<Timings> = Vec::new();
    let mut points: Vec<(f64, f64)> = Vec::new();
    for path in paths {
        let Ok(job) = rcs_core::sampler::read_result_file(path) else { continue };
        if merged.job_ids.binary_search(&job.job_id).is_ok() {
            timings.push(job.timings);
            points.push((job.shots as f64, job.timings.sample_s));
        }
    }
    let timing = timing_summary(&timings, options.state_calc_s)?;
    write_json(&out.join("timing_summary.json"), &timing)?;
    written.push(out.join("timing_summary.json"));

    let scaling = fit_scaling(&points).ok();
    let mut estimate = None;
    if let Some(model) = &scaling {
        #[derive(Serialize)]
        struct ScalingDoc<'a> {
            model: &'a ScalingModel,
            points: &'a [(f64, f64)],
            #[serde(skip_serializing_if = "Option::is_none")]
            estimate: Option<&'a RuntimeEstimate>,
        }
        // extrapolate the observed configuration when stage-1 time is known
        if let (Some(state_calc_s), Some(n)) = (options.state_calc_s, options.expected_jobs) {
            estimate = estimate_runtime(model, state_calc_s, merged.total_shots, n).ok();
        }
        write_json(
            &out.join("scaling_model.json"),
            &ScalingDoc { model, points: &points, estimate: estimate.as_ref() },
        )?;
        written.push(out.join("scaling_model.json"));
    }

    let speedup = match options.total_s {
        Some(total_s) => {
            let report = speedup_report(total_s, &default_baselines())?;
            write_json(&out.join("speedup_report.json"), &report)?;
            written.push(out.join("speedup_report.json"));
            Some(report)
        }
        None => None,
    };

    Ok(AnalyzeSummary {
        n_qubits: merged.n_qubits,
        total_shots: merged.total_shots,
        job_ids: merged.job_ids.clone(),
        partial: merged.partial,
        xeb,
        xeb_reference,
        timing,
        scaling,
        estimate,
        speedup,
        warnings: merged.warnings.clone(),
        written,
    })
}

/// Per-stage wall times of a run, from its manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTimings {
    pub state_calc_s: f64,
    pub persist_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregation_s: Option<f64>,
    pub total_s: f64,
    /// Absent when the run had no scheduler queue data (e.g. local mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queue: Option<PhaseStats>,
}

/// Extracts per-stage durations from a manifest. Queue statistics are only
/// present when a scheduler supplied them; they are never zero-filled.
pub fn stage_timings(manifest: &RunManifest) -> StageTimings {
    StageTimings {
        state_calc_s: manifest.stages.state_calc.duration_s,
        persist_s: manifest.stages.persist.duration_s,
        sampling_s: manifest.stages.sampling.map(|s| s.duration_s),
        aggregation_s: manifest.stages.aggregation.map(|s| s.duration_s),
        total_s: manifest.total_s,
        queue: None,
    }
}

/// Emits the SLURM scripts implementing the pipeline and returns their
/// paths. Re-emitting with the same config produces identical files.
///
/// Scripts: `01_state.sbatch` (stages 1+2), `02_sample.sbatch` (array of
/// `n_jobs` tasks, each running one `sample` shard keyed by its array
/// index), `03_aggregate.sbatch` (stage 4) and `submit.sh`, which chains
/// them with `--dependency=afterok:<id>`.
pub fn emit_slurm(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    config.validate()?;
    std::fs::create_dir_all(&config.work_dir)?;
    let work = config.work_dir.display();
    let cpus = config.resources.cpus;
    let mem = &config.resources.mem;
    let n_jobs = config.n_jobs;
    let circuit_args = config.circuit.cli_args();

    let state = format!(
        "#!/bin/bash\n\
         #SBATCH --job-name=rcs-state\n\
         #SBATCH --output={work}/logs/state_%j.out\n\
         #SBATCH --cpus-per-task={cpus}\n\
         #SBATCH --mem={mem}\n\
         set -euo pipefail\n\
         mkdir -p \"{work}/logs\"\n\
         rcs build-state {circuit_args} --out \"{work}/state.rcss\"\n"
    );

    let sample = format!(
        "#!/bin/bash\n\
         #SBATCH --job-name=rcs-sample\n\
         #SBATCH --output={work}/logs/sample_%A_%a.out\n\
         #SBATCH --array=0-{last}\n\
         #SBATCH --cpus-per-task={cpus}\n\
         #SBATCH --mem={mem}\n\
         set -euo pipefail\n\
         rcs sample --snapshot \"{work}/state.rcss\" \\\n\
         \x20   --total-shots {shots} --jobs {n_jobs} --seed {seed} \\\n\
         \x20   --job-id \"${{SLURM_ARRAY_TASK_ID}}\" --out-dir \"{work}/results\"\n",
        last = n_jobs - 1,
        shots = config.total_shots,
        seed = config.base_seed,
    );

    let aggregate = format!(
        "#!/bin/bash\n\
         #SBATCH --job-name=rcs-aggregate\n\
         #SBATCH --output={work}/logs/aggregate_%j.out\n\
         #SBATCH --cpus-per-task=1\n\
         #SBATCH --mem=4G\n\
         set -euo pipefail\n\
         rcs analyze --results \"{work}/results\" --out \"{work}/analysis\" \\\n\
         \x20   --expected-jobs {n_jobs} --state-build \"{work}/state_build.json\"\n"
    );

    let submit = format!(
        "#!/bin/bash\n\
         # submit the three pipeline stages chained by afterok dependencies\n\
         set -euo pipefail\n\
         cd \"$(dirname \"$0\")\"\n\
         state_id=$(sbatch --parsable 01_state.sbatch)\n\
         echo \"state construction job: ${{state_id}}\"\n\
         sample_id=$(sbatch --parsable --dependency=afterok:${{state_id}} 02_sample.sbatch)\n\
         echo \"sampling array job:     ${{sample_id}}\"\n\
         agg_id=$(sbatch --parsable --dependency=afterok:${{sample_id}} 03_aggregate.sbatch)\n\
         echo \"aggregation job:        ${{agg_id}}\"\n"
    );

    let files = [
        ("01_state.sbatch", state),
        ("02_sample.sbatch", sample),
        ("03_aggregate.sbatch", aggregate),
        ("submit.sh", submit),
    ];
    let mut paths = Vec::new();
    for (name, contents) in files {
        let path = config.work_dir.join(name);
        std::fs::write(&path, contents)?;
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755))?;
        }
        paths.push(path);
    }
    Ok(paths)
}
