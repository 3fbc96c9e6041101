//! End-to-end pipeline tests: local fan-out bookkeeping, determinism,
//! fault injection, dependency ordering, SLURM emission and the CLI
//! surface itself.

use std::path::{Path, PathBuf};
use std::process::Command;

use rcs_cli::orchestrator::{
    analyze_results, emit_slurm, run_local, stage_timings, AnalyzeOptions, CircuitSource,
    PipelineConfig, PipelineError, ResourceSpec, RunManifest,
};
use rcs_core::rng::mix_seed;
use rcs_core::sampler::{read_result_file, result_file_name, run_worker, SamplerConfig};

fn rcs_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_rcs"))
}

fn config(work_dir: &Path, shots: u64, jobs: u64) -> PipelineConfig {
    PipelineConfig {
        circuit: CircuitSource::Generated {
            rows: 2,
            cols: 3,
            cycles: 8,
            pattern: "EFGH".into(),
            seed: 11,
        },
        total_shots: shots,
        n_jobs: jobs,
        base_seed: 20_026,
        work_dir: work_dir.to_path_buf(),
        max_procs: Some(4),
        resources: ResourceSpec::default(),
        max_qubits: None,
        worker_exe: Some(rcs_bin()),
    }
}

#[test]
fn run_local_bookkeeping_holds() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), 10_000, 4);
    // 12-qubit circuit, 10^4 shots over 4 jobs
    cfg.circuit = CircuitSource::Generated {
        rows: 3,
        cols: 4,
        cycles: 10,
        pattern: "EFGH".into(),
        seed: 11,
    };
    let manifest = run_local(&cfg).unwrap();
    assert_eq!(manifest.n_qubits, 12);

    assert_eq!(manifest.expected_result_files.len(), 4);
    assert!(manifest.failed_shards.is_empty());
    assert!(!manifest.partial);

    let mut total = 0u64;
    for file in &manifest.expected_result_files {
        assert!(file.exists(), "{} missing", file.display());
        total += read_result_file(file).unwrap().shots;
    }
    assert_eq!(total, 10_000);

    let xeb_path = dir.path().join("analysis/xeb_report.json");
    assert!(xeb_path.exists());
    let xeb: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&xeb_path).unwrap()).unwrap();
    assert_eq!(xeb["total_shots"], 10_000);
    assert!(dir.path().join("run_manifest.json").exists());
    assert!(dir.path().join("analysis/timing_summary.json").exists());
}

#[test]
fn run_local_stages_are_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = run_local(&config(dir.path(), 4_000, 2)).unwrap();
    let stages = &manifest.stages;
    assert!(stages.state_calc.end_unix_s <= stages.persist.start_unix_s + 1e-6);
    let sampling = stages.sampling.unwrap();
    // no worker starts before the snapshot's atomic rename completed
    assert!(
        stages.persist.end_unix_s <= sampling.start_unix_s + 1e-6,
        "sampling began before the snapshot was persisted"
    );
    let aggregation = stages.aggregation.unwrap();
    assert!(sampling.end_unix_s <= aggregation.start_unix_s + 1e-6);

    let timings = stage_timings(&manifest);
    assert!(timings.queue.is_none());
    let sum = timings.state_calc_s
        + timings.persist_s
        + timings.sampling_s.unwrap()
        + timings.aggregation_s.unwrap();
    assert!((sum - timings.total_s).abs() <= 1.0, "stage spans vs total");
}

#[test]
fn run_local_shards_match_sequential_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 6_000, 3);
    let manifest = run_local(&cfg).unwrap();

    // replay each shard in-process with the same derived config
    let replay_dir = tempfile::tempdir().unwrap();
    let shards = rcs_core::sampler::shard_shots(cfg.total_shots, cfg.n_jobs).unwrap();
    for (job_id, &shots) in shards.iter().enumerate() {
        let replay = run_worker(&SamplerConfig {
            snapshot_path: manifest.snapshot_path.clone(),
            shots,
            base_seed: cfg.base_seed,
            job_id: job_id as u64,
            output_dir: replay_dir.path().join(job_id.to_string()),
            queue_s: 0.0,
        })
        .unwrap();
        let from_process =
            read_result_file(&manifest.expected_result_files[job_id]).unwrap();
        assert_eq!(from_process.counts, replay.counts, "shard {job_id} diverged");
        assert_eq!(from_process.p_ideal, replay.p_ideal);
        assert_eq!(from_process.seed_used, mix_seed(cfg.base_seed, job_id as u64));
    }
}

#[test]
fn rerun_with_same_config_gives_identical_reports() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_local(&config(dir_a.path(), 3_000, 1)).unwrap();
    run_local(&config(dir_b.path(), 3_000, 1)).unwrap();
    let xeb_a = std::fs::read_to_string(dir_a.path().join("analysis/xeb_report.json")).unwrap();
    let xeb_b = std::fs::read_to_string(dir_b.path().join("analysis/xeb_report.json")).unwrap();
    assert_eq!(xeb_a, xeb_b);
}

#[test]
fn killed_shard_leaves_partial_but_valid_run() {
    let dir = tempfile::tempdir().unwrap();
    // job 1's output path is occupied: that worker dies on the collision
    // rule while the others proceed
    let results = dir.path().join("results");
    std::fs::create_dir_all(&results).unwrap();
    std::fs::write(results.join(result_file_name(1)), "occupied\n").unwrap();

    let manifest = run_local(&config(dir.path(), 8_000, 4)).unwrap();
    assert_eq!(manifest.failed_shards, vec![1]);
    assert!(manifest.partial);
    let ok_shards: Vec<u64> = manifest
        .shards
        .iter()
        .filter(|s| s.ok)
        .map(|s| s.job_id)
        .collect();
    assert_eq!(ok_shards, vec![0, 2, 3]);

    // aggregation still produced a report over the surviving shards
    let xeb: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("analysis/xeb_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(xeb["total_shots"], 6_000);
    // worker 1's complaint lands in its log
    let log = std::fs::read_to_string(dir.path().join("logs/worker_1.log")).unwrap();
    assert!(log.contains("already exists"), "log: {log}");
}

#[test]
fn all_shards_failing_aborts_aggregation() {
    let dir = tempfile::tempdir().unwrap();
    let results = dir.path().join("results");
    std::fs::create_dir_all(&results).unwrap();
    for job_id in 0..2 {
        std::fs::write(results.join(result_file_name(job_id)), "occupied\n").unwrap();
    }
    let err = run_local(&config(dir.path(), 2_000, 2)).unwrap_err();
    assert!(matches!(err, PipelineError::AllShardsFailed(2)));
    // the manifest still records what happened
    let manifest: RunManifest = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("run_manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest.failed_shards, vec![0, 1]);
    assert!(!dir.path().join("analysis/xeb_report.json").exists());
}

#[test]
fn workers_in_isolated_dirs_are_independent() {
    // two workers with distinct temp output dirs share only the snapshot;
    // their results depend solely on (snapshot, shots, base_seed, job_id)
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 2_000, 2);
    let manifest = run_local(&cfg).unwrap();

    let solo = tempfile::tempdir().unwrap();
    let replay = run_worker(&SamplerConfig {
        snapshot_path: manifest.snapshot_path.clone(),
        shots: 1_000,
        base_seed: cfg.base_seed,
        job_id: 1,
        output_dir: solo.path().to_path_buf(),
        queue_s: 0.0,
    })
    .unwrap();
    let in_run = read_result_file(&manifest.expected_result_files[1]).unwrap();
    assert_eq!(replay.counts, in_run.counts);
}

#[test]
fn analyze_with_reference_table_matches_recorded_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 4_000, 2);
    let manifest = run_local(&cfg).unwrap();

    // derive the reference table from the persisted state itself
    let state = rcs_core::snapshot::load_snapshot(&manifest.snapshot_path).unwrap();
    let mut table = String::new();
    for (i, amp) in state.amps().iter().enumerate() {
        table.push_str(&format!(
            "{:0width$b} {} {}\n",
            i,
            amp.re,
            amp.im,
            width = state.n_qubits()
        ));
    }
    let table_path = dir.path().join("reference.txt");
    std::fs::write(&table_path, table).unwrap();

    let out_dir = dir.path().join("analysis_ref");
    let summary = analyze_results(
        &dir.path().join("results"),
        &AnalyzeOptions {
            out_dir: out_dir.clone(),
            expected_jobs: Some(2),
            state_calc_s: None,
            lenient: false,
            reference: Some(table_path),
            total_s: Some(4536.0),
        },
    )
    .unwrap();
    let reference = summary.xeb_reference.unwrap();
    assert!((reference.xeb - summary.xeb.xeb).abs() <= 1e-12);
    assert!(out_dir.join("xeb_reference_report.json").exists());
    assert!(out_dir.join("speedup_report.json").exists());
    let speedup = summary.speedup.unwrap();
    assert!((speedup.entries[0].speedup - 6.95e7).abs() / 6.95e7 <= 0.005);
}

#[test]
fn slurm_scripts_pass_shell_syntax_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(&dir.path().join("w"), 2_500_000, 100);
    cfg.circuit = CircuitSource::Qasm { path: PathBuf::from("/data/circuit.qasm") };
    let paths = emit_slurm(&cfg).unwrap();
    assert_eq!(paths.len(), 4);
    for path in &paths {
        let status = Command::new("bash")
            .arg("-n")
            .arg(path)
            .status()
            .expect("bash available");
        assert!(status.success(), "bash -n rejected {}", path.display());
    }
}

#[test]
fn cli_sample_reads_job_id_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let snapshot = dir.path().join("state.rcss");
    let state = rcs_testkit::random_state(4, 3);
    rcs_core::snapshot::save_snapshot(&state, &snapshot).unwrap();

    let status = Command::new(rcs_bin())
        .args(["sample", "--snapshot"])
        .arg(&snapshot)
        .args(["--total-shots", "100", "--jobs", "4", "--seed", "5", "--out-dir"])
        .arg(dir.path().join("results"))
        .env("SLURM_ARRAY_TASK_ID", "2")
        .env("SLURM_JOB_ID", "987654") // array index must win
        .status()
        .unwrap();
    assert!(status.success());
    assert!(dir.path().join("results").join(result_file_name(2)).exists());

    // with no flag and no environment, the worker must refuse
    let status = Command::new(rcs_bin())
        .args(["sample", "--snapshot"])
        .arg(&snapshot)
        .args(["--shots", "10", "--out-dir"])
        .arg(dir.path().join("results2"))
        .env_remove("SLURM_ARRAY_TASK_ID")
        .env_remove("SLURM_JOB_ID")
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn cli_generate_then_build_state_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let qasm = dir.path().join("circ.qasm");
    let status = Command::new(rcs_bin())
        .args(["generate", "--rows", "2", "--cols", "2", "--cycles", "5", "--pattern", "ABCD",
               "--seed", "7", "--out"])
        .arg(&qasm)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(qasm.exists());

    let snapshot = dir.path().join("state.rcss");
    let output = Command::new(rcs_bin())
        .args(["build-state", "--json", "--qasm"])
        .arg(&qasm)
        .arg("--out")
        .arg(&snapshot)
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["n_qubits"], 4);
    let info = rcs_core::snapshot::snapshot_info(&snapshot).unwrap();
    assert_eq!(info.digest.to_hex(), report["snapshot_digest"].as_str().unwrap());
    assert!(dir.path().join("state_build.json").exists());
}

#[test]
fn cli_run_local_then_analyze_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(rcs_bin())
        .args([
            "run-local", "--rows", "2", "--cols", "2", "--cycles", "6", "--shots", "2000",
            "--jobs", "2", "--seed", "3", "--work-dir",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());

    let output = Command::new(rcs_bin())
        .args(["analyze", "--expected-jobs", "2", "--json", "--work-dir"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(output.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(summary["total_shots"], 2000);
    assert_eq!(summary["partial"], false);
}
