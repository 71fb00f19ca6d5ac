//! Multi-robot LLM planning workbench: environments, prompt construction,
//! chat backends, coordination protocols, plan verification and a benchmark
//! harness.
pub mod dialogue;
pub mod env;
pub mod environments;
pub mod facts;
pub mod gateway;
pub mod harness;
pub mod prompt;
pub mod util;
pub mod verifier;
