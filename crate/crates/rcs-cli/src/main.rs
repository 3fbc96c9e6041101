//! `rcs` — desk-scale random circuit sampling pipeline.
//!
//! Subcommands mirror the pipeline stages: `generate` circuits, `build-state`
//! (stages 1+2), `sample` (one stage-3 worker), `run-local` (all four stages
//! with process fan-out), `emit-slurm` (batch scripts for a cluster) and
//! `analyze` (stage 4 over a result directory).

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rcs_cli::orchestrator::{
    analyze_results, build_and_persist, emit_slurm, run_local, stage_timings, AnalyzeOptions,
    CircuitSource, PipelineConfig, ResourceSpec, ANALYSIS_DIR, RESULTS_DIR, SNAPSHOT_FILE,
    STATE_BUILD_FILE,
};
use rcs_core::circuit::circuit_stats;
use rcs_core::circuit::qasm::emit_qasm;
use rcs_core::sampler::{run_worker, shard_shots, SamplerConfig};

#[derive(Parser)]
#[command(name = "rcs", version, about = "Desk-scale random circuit sampling pipeline")]
struct Cli {
    /// Base directory for pipeline files (snapshot, results, reports).
    #[arg(long, global = true, default_value = ".")]
    work_dir: PathBuf,
    /// Print the primary result as JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

/// Circuit input: a QASM file or generator parameters.
#[derive(Args, Debug)]
struct CircuitArgs {
    /// QASM file to load.
    #[arg(long, conflicts_with_all = ["rows", "cols", "cycles", "pattern", "circuit_seed"])]
    qasm: Option<PathBuf>,
    /// Grid rows for a generated circuit.
    #[arg(long, requires = "cols", requires = "cycles")]
    rows: Option<usize>,
    /// Grid columns for a generated circuit.
    #[arg(long, requires = "rows")]
    cols: Option<usize>,
    /// Cycles (1q layer + coupler layer) for a generated circuit.
    #[arg(long, requires = "rows")]
    cycles: Option<usize>,
    /// Coupler pattern letters (A..H), e.g. EFGH or ABCDCDAB.
    #[arg(long, default_value = "EFGH")]
    pattern: String,
    /// Seed for circuit generation.
    #[arg(long, default_value_t = 0)]
    circuit_seed: u64,
}

impl CircuitArgs {
    fn to_source(&self) -> Result<CircuitSource> {
        if let Some(path) = &self.qasm {
            return Ok(CircuitSource::Qasm { path: path.clone() });
        }
        match (self.rows, self.cols, self.cycles) {
            (Some(rows), Some(cols), Some(cycles)) => Ok(CircuitSource::Generated {
                rows,
                cols,
                cycles,
                pattern: self.pattern.clone(),
                seed: self.circuit_seed,
            }),
            _ => bail!("provide either --qasm FILE or --rows/--cols/--cycles"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random circuit and write it as QASM.
    Generate {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        cycles: usize,
        /// Coupler pattern letters (A..H).
        #[arg(long, default_value = "EFGH")]
        pattern: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Construct the quantum state and persist the snapshot (stages 1+2).
    BuildState {
        #[command(flatten)]
        circuit: CircuitArgs,
        /// Snapshot path; defaults to <work-dir>/state.rcss.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Engine qubit cap override.
        #[arg(long)]
        max_qubits: Option<usize>,
    },
    /// Run one sampling worker against a snapshot (stage 3).
    Sample {
        #[arg(long)]
        snapshot: PathBuf,
        /// Shots for this job; or derive the shard via --total-shots/--jobs.
        #[arg(long, conflicts_with_all = ["total_shots", "jobs"])]
        shots: Option<u64>,
        /// Total shot budget split across --jobs shards.
        #[arg(long, requires = "jobs")]
        total_shots: Option<u64>,
        /// Number of shards the budget is split into.
        #[arg(long, requires = "total_shots")]
        jobs: Option<u64>,
        /// Run-level base seed; the worker stream is derived from it and the
        /// job id.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Job id; falls back to $SLURM_ARRAY_TASK_ID, then $SLURM_JOB_ID.
        #[arg(long)]
        job_id: Option<u64>,
        /// Result directory; defaults to <work-dir>/results.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Scheduler-observed queue wait to record verbatim.
        #[arg(long, default_value_t = 0.0)]
        queue_s: f64,
    },
    /// Run the full pipeline locally with process fan-out.
    RunLocal {
        #[command(flatten)]
        circuit: CircuitArgs,
        /// Total shot budget S.
        #[arg(long)]
        shots: u64,
        /// Number of sampling jobs N (shards of S).
        #[arg(long)]
        jobs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Concurrent worker process limit; defaults to the CPU count.
        #[arg(long)]
        max_procs: Option<usize>,
        /// Engine qubit cap override.
        #[arg(long)]
        max_qubits: Option<usize>,
    },
    /// Emit SLURM batch scripts implementing the pipeline.
    EmitSlurm {
        #[command(flatten)]
        circuit: CircuitArgs,
        #[arg(long)]
        shots: u64,
        #[arg(long)]
        jobs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CPUs requested per task.
        #[arg(long, default_value_t = 8)]
        cpus: u32,
        /// Memory requested per task (SLURM syntax, e.g. 16G).
        #[arg(long, default_value = "16G")]
        mem: String,
    },
    /// Aggregate result files and write analysis reports (stage 4).
    Analyze {
        /// Directory of result_<job>.jsonl files; defaults to
        /// <work-dir>/results.
        #[arg(long)]
        results: Option<PathBuf>,
        /// Report directory; defaults to <work-dir>/analysis.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Expect jobs 0..N and flag the merge partial on gaps.
        #[arg(long)]
        expected_jobs: Option<u64>,
        /// Stage-1 wall time in seconds, for the timing summary.
        #[arg(long, conflicts_with = "state_build")]
        state_calc_s: Option<f64>,
        /// state_build.json written by build-state, as the stage-1 time
        /// source.
        #[arg(long)]
        state_build: Option<PathBuf>,
        /// Reference amplitude table (bitstring re im per line) for
        /// cross-validation scoring.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Skip malformed result files with a warning.
        #[arg(long)]
        lenient: bool,
        /// Total run wall time in seconds; enables the speedup report.
        #[arg(long)]
        total_s: Option<f64>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate { rows, cols, cycles, pattern, seed, out } => {
            let pattern = rcs_core::circuit::generate::PatternSpec::new(&pattern, rows, cols)?;
            let circuit =
                rcs_core::circuit::generate::generate_rcs_circuit(&pattern, cycles, seed)?;
            let text = emit_qasm(&circuit)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &text)
                        .with_context(|| format!("writing {}", path.display()))?;
                    if cli.json {
                        print_json(&circuit_stats(&circuit))?;
                    } else {
                        eprintln!("wrote {}", path.display());
                    }
                }
                None => print!("{text}"),
            }
            Ok(0)
        }

        Command::BuildState { circuit, out, max_qubits } => {
            let source = circuit.to_source()?;
            let parsed = source.load()?;
            let snapshot_path = out.unwrap_or_else(|| cli.work_dir.join(SNAPSHOT_FILE));
            let (report, ..) = build_and_persist(&parsed, &snapshot_path, max_qubits)?;
            let report_path = snapshot_path
                .parent()
                .map(|p| p.join(STATE_BUILD_FILE))
                .unwrap_or_else(|| PathBuf::from(STATE_BUILD_FILE));
            rcs_cli::orchestrator::write_json(&report_path, &report)?;
            if cli.json {
                print_json(&report)?;
            } else {
                eprintln!(
                    "built {}-qubit state in {:.3}s, snapshot {} ({})",
                    report.n_qubits,
                    report.build_s,
                    snapshot_path.display(),
                    report.snapshot_digest
                );
            }
            Ok(0)
        }

        Command::Sample {
            snapshot,
            shots,
            total_shots,
            jobs,
            seed,
            job_id,
            out_dir,
            queue_s,
        } => {
            let job_id = match job_id.or_else(env_job_id) {
                Some(id) => id,
                None => bail!("no job id: pass --job-id or set SLURM_ARRAY_TASK_ID/SLURM_JOB_ID"),
            };
            let shots = match (shots, total_shots, jobs) {
                (Some(s), _, _) => s,
                (None, Some(total), Some(jobs)) => {
                    let shards = shard_shots(total, jobs)?;
                    *shards.get(job_id as usize).with_context(|| {
                        format!("job id {job_id} outside the 0..{jobs} shard range")
                    })?
                }
                _ => bail!("pass --shots or both --total-shots and --jobs"),
            };
            let config = SamplerConfig {
                snapshot_path: snapshot,
                shots,
                base_seed: seed,
                job_id,
                output_dir: out_dir.unwrap_or_else(|| cli.work_dir.join(RESULTS_DIR)),
                queue_s,
            };
            let result = run_worker(&config)?;
            if cli.json {
                #[derive(serde::Serialize)]
                struct SampleSummary {
                    job_id: u64,
                    seed_used: u64,
                    n_qubits: usize,
                    shots: u64,
                    distinct_bitstrings: usize,
                    timings: rcs_core::sampler::Timings,
                }
                print_json(&SampleSummary {
                    job_id: result.job_id,
                    seed_used: result.seed_used,
                    n_qubits: result.n_qubits,
                    shots: result.shots,
                    distinct_bitstrings: result.counts.len(),
                    timings: result.timings,
                })?;
            } else {
                eprintln!(
                    "job {}: {} shots over {} bitstrings in {:.3}s",
                    result.job_id,
                    result.shots,
                    result.counts.len(),
                    result.timings.total_s
                );
            }
            Ok(0)
        }

        Command::RunLocal { circuit, shots, jobs, seed, max_procs, max_qubits } => {
            let config = PipelineConfig {
                circuit: circuit.to_source()?,
                total_shots: shots,
                n_jobs: jobs,
                base_seed: seed,
                work_dir: cli.work_dir.clone(),
                max_procs,
                resources: ResourceSpec::default(),
                max_qubits,
                worker_exe: None,
            };
            let manifest = run_local(&config)?;
            if cli.json {
                print_json(&manifest)?;
            } else {
                let timings = stage_timings(&manifest);
                eprintln!(
                    "pipeline finished in {:.3}s (state {:.3}s, persist {:.3}s, sampling {:.3}s)",
                    timings.total_s,
                    timings.state_calc_s,
                    timings.persist_s,
                    timings.sampling_s.unwrap_or(0.0),
                );
                eprintln!("manifest: {}", cli.work_dir.join("run_manifest.json").display());
            }
            if manifest.partial {
                eprintln!(
                    "warning: partial run; failed shards: {:?}",
                    manifest.failed_shards
                );
                return Ok(1);
            }
            Ok(0)
        }

        Command::EmitSlurm { circuit, shots, jobs, seed, cpus, mem } => {
            let config = PipelineConfig {
                circuit: circuit.to_source()?,
                total_shots: shots,
                n_jobs: jobs,
                base_seed: seed,
                work_dir: cli.work_dir.clone(),
                max_procs: None,
                resources: ResourceSpec { cpus, mem },
                max_qubits: None,
                worker_exe: None,
            };
            let paths = emit_slurm(&config)?;
            if cli.json {
                print_json(&paths)?;
            } else {
                for path in &paths {
                    eprintln!("wrote {}", path.display());
                }
                eprintln!("submit with: {}/submit.sh", cli.work_dir.display());
            }
            Ok(0)
        }

        Command::Analyze {
            results,
            out,
            expected_jobs,
            state_calc_s,
            state_build,
            reference,
            lenient,
            total_s,
        } => {
            let state_calc_s = match (state_calc_s, state_build) {
                (Some(s), _) => Some(s),
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let report: rcs_cli::orchestrator::StateBuildReport =
                        serde_json::from_str(&text)?;
                    Some(report.build_s)
                }
                (None, None) => None,
            };
            let results_dir = results.unwrap_or_else(|| cli.work_dir.join(RESULTS_DIR));
            let options = AnalyzeOptions {
                out_dir: out.unwrap_or_else(|| cli.work_dir.join(ANALYSIS_DIR)),
                expected_jobs,
                state_calc_s,
                lenient,
                reference,
                total_s,
            };
            let summary = analyze_results(&results_dir, &options)?;
            if cli.json {
                print_json(&summary)?;
            } else {
                eprintln!(
                    "merged {} jobs, {} shots: XEB = {:.6} +/- {:.6}{}",
                    summary.job_ids.len(),
                    summary.total_shots,
                    summary.xeb.xeb,
                    summary.xeb.std_error,
                    if summary.partial { " (partial)" } else { "" }
                );
                for warning in &summary.warnings {
                    eprintln!("warning: {warning}");
                }
                for path in &summary.written {
                    eprintln!("wrote {}", path.display());
                }
            }
            Ok(0)
        }
    }
}

/// Scheduler-provided job id: the array task index when running as an array
/// task, otherwise the raw job id.
fn env_job_id() -> Option<u64> {
    for var in ["SLURM_ARRAY_TASK_ID", "SLURM_JOB_ID"] {
        if let Ok(value) = std::env::var(var) {
            if let Ok(id) = value.parse() {
                return Some(id);
            }
        }
    }
    None
}
