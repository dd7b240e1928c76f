//! Rewrites the equations of a LaTeX document into value-equivalent forms
//! that look far more complicated, and checks numerically that every
//! rewrite kept its value.
//!
//! The stages are [`scanner`] (prose and math segments), [`ast`] (parse and
//! emit math), [`passes`] (the rewrite catalog), [`oracle`] (numeric
//! equivalence), [`metric`] (complexity score) and [`pipeline`] (commands).

pub mod ast;
pub mod error;
pub mod metric;
pub mod oracle;
pub mod passes;
pub mod pipeline;
pub mod rng;
pub mod scanner;

pub use error::PipelineError;
