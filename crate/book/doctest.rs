// mdbook cannot compile listings against a workspace crate, so each chapter
// is pulled in as the docs of an empty module and `cargo test --doc` runs
// its code blocks. One module per chapter keeps failures traceable.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/model.md")]
pub mod model {}
#[doc = include_str!("src/synthesis.md")]
pub mod synthesis {}
#[doc = include_str!("src/estimation.md")]
pub mod estimation {}
#[doc = include_str!("src/matching.md")]
pub mod matching {}
#[doc = include_str!("src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("src/configuration.md")]
pub mod configuration {}
#[doc = include_str!("src/data.md")]
pub mod data {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
#[doc = include_str!("../README.md")]
pub mod readme {}
