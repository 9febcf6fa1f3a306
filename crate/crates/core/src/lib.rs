//! Generate, review, validate and compare block-structured BPMN process models.

pub mod cli;
pub mod diff;
pub mod dsl;
pub mod eval;
pub mod interop;
pub mod lint;
pub mod model;
pub mod orchestrator;
pub mod synth;
pub mod validator;
