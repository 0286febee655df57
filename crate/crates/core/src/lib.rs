//! Unit test generation with an LLM at class, method, combined and hybrid
//! granularity, with compile/run repair, suite sanitizing and metrics.

pub mod config;
pub mod lang;
pub mod llm;
pub mod metrics;
pub mod orchestrator;
pub mod prompts;
pub mod runner;
pub mod sanitizer;
pub mod source_model;
pub mod toolchain;
