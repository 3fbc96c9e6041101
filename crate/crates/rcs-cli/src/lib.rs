//! Orchestration for the four-stage sampling pipeline: build the state,
//! persist it, fan out sampling workers, aggregate. Locally this is process
//! fan-out under a bounded pool; for clusters it emits SLURM batch scripts
//! chained with `afterok` dependencies.

pub mod orchestrator;
