//! Benchmark objectives (Branin-Hoo, seeded synthetic noise) and a harness
//! that runs seeded optimizer comparisons end to end, emitting per-seed and
//! aggregate best-result data.

pub mod objectives;
pub mod runner;
pub mod selfcheck;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl BenchError {
    /// Process exit code for this failure class: 2 for configuration
    /// problems, 3 for failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Runtime(_) => 3,
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Runtime(e.to_string())
    }
}

impl From<hypertune_core::assistants::AssistantError> for BenchError {
    fn from(e: hypertune_core::assistants::AssistantError) -> Self {
        BenchError::Runtime(e.to_string())
    }
}
