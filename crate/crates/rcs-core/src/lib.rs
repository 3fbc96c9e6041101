//! Desk-scale random circuit sampling (RCS) pipeline core.
//!
//! The pipeline mirrors the production shape of hybrid RCS experiments while
//! staying exact and fully verifiable on a workstation:
//!
//! 1. **State construction** — [`engine::build_state`] evolves the all-zeros
//!    state through a [`circuit::Circuit`] by exact statevector simulation.
//! 2. **Persistence** — [`snapshot`] writes the state to a shared file system
//!    in a versioned, digest-checked binary format.
//! 3. **Distributed sampling** — [`sampler::run_worker`] is one independent
//!    job: it rebuilds the state from the snapshot, draws its shard of seeded
//!    measurement shots and writes a `result_<job_id>.jsonl` file.
//! 4. **Post-processing** — [`analysis`] merges job results, scores linear
//!    cross-entropy benchmarking (XEB), summarizes telemetry and fits the
//!    shots-vs-runtime scaling model.
//!
//! Orchestration (local process fan-out, SLURM script emission, CLI) lives in
//! the `rcs-cli` crate.

pub mod analysis;
pub mod circuit;
pub mod engine;
pub mod rng;
pub mod sampler;
pub mod snapshot;
