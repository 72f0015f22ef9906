//! Verification-condition generation for a small C-like language whose
//! memory model is synthesized from the results of a pluggable pointer
//! analysis.
//!
//! The pipeline: parse and lay out a program ([`ast`], [`parser`]), run a
//! forward abstract interpreter computing per-statement points-to facts
//! ([`points_to`]), refine the per-variable memory partition ([`partition`]),
//! then compile statements into multi-sorted first-order formulas ([`logic`])
//! through a memory-model environment derived from the chosen partition
//! ([`mme`], [`vcgen`]). A reference interpreter ([`machine`]) serves as the
//! ground-truth oracle for the differential and translation-validation
//! harnesses ([`fuzz`]).

pub mod ast;
pub mod bench;
pub mod fuzz;
pub mod logic;
pub mod machine;
pub mod mme;
pub mod offsets;
pub mod parser;
pub mod partition;
pub mod points_to;
pub mod prng;
pub mod vcgen;
