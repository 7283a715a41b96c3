//! Benchmark toolkit for refactoring detection.
//!
//! The crate covers the full loop of a detection experiment:
//!
//! * [`catalog`] enumerates the refactoring kinds under study and renders
//!   their definitions for prompts.
//! * [`syntax`] implements the mini object-oriented language the corpus is
//!   written in: parsing, canonical printing, and whole-program resolution.
//! * [`generate`] builds ground-truth corpora by synthesizing valid programs
//!   and applying one known transformation per case.
//! * [`diffing`] renders unified diffs between program versions and assigns
//!   the diff-size buckets used in reports.
//! * [`detect`] is the deterministic structural detector.
//! * [`llm`] holds the prompt builders, response parser, and chat-model
//!   backends (HTTP and offline mock) plus the parallel runner.
//! * [`evaluate`] scores predictions against ground truth and writes reports.
//! * [`persist`] stores corpora and run results on disk and checks their
//!   integrity on load.

pub mod catalog;
pub mod detect;
pub mod diffing;
pub mod evaluate;
pub mod generate;
pub mod llm;
pub mod persist;
pub mod syntax;
