//! Turn a corpus of legal texts into a synthetic question-answer instruct
//! dataset, and evaluate chat endpoints on legal questions.
//!
//! The stages are independent modules: [`corpus`] loading, [`cleanse`]
//! normalization, [`segment`] article splitting, [`synth`] generation
//! through a chat-completions endpoint, [`dataset`] assembly and export,
//! and [`evalkit`] evaluation.

pub mod cleanse;
pub mod corpus;
pub mod dataset;
pub mod evalkit;
pub mod numerals;
pub mod segment;
pub mod synth;
