//! Contestable multi-agent care planning.
//!
//! A case goes through four stages: [`pipeline`] assesses it, recruits a
//! team of role agents and runs their debate into an argument graph;
//! [`semantics`] scores arguments and options; [`contestation`] lets human
//! reviewers edit the graph under a hash-chained audit log; [`plangen`]
//! turns the approved scores into a tiered, scheduled care plan.

pub mod argcore;
pub mod canonical;
pub mod clock;
pub mod contestation;
pub mod dot;
pub mod pipeline;
pub mod plangen;
pub mod semantics;
pub mod text;
