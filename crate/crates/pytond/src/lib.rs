//! pytond: a source-to-SQL compiler for dataframe and tensor pipelines.
//!
//! Decorated functions written against a Pandas/NumPy-style API subset are
//! discovered, normalized, translated into TondIR (a Datalog-like IR),
//! optimized by rewriting, and lowered to a chain of SQL CTEs that runs on
//! a relational engine. An in-memory reference interpreter defines the
//! ground-truth semantics used for differential testing.

pub mod catalog;
pub mod frontend;
pub mod optimizer;
pub mod oracle;
pub mod sql;
pub mod testkit;
pub mod tondir;
