//! The chapters of `book/` as doc comments, so `cargo test --doc` runs every
//! listing in the guide. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/argument-graphs.md")]
pub mod argument_graphs {}
#[doc = include_str!("../../../book/src/semantics.md")]
pub mod semantics {}
#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
#[doc = include_str!("../../../book/src/contestation.md")]
pub mod contestation {}
#[doc = include_str!("../../../book/src/care-plans.md")]
pub mod care_plans {}
#[doc = include_str!("../../../book/src/service-and-cli.md")]
pub mod service_and_cli {}
