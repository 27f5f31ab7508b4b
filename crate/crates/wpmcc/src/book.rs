// The guide's code fences run as doc-tests so the book can never drift from
// the library. mdbook itself cannot execute snippets against crate
// dependencies; including each chapter as a hidden module's documentation
// makes `cargo test` do it instead.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/getting-started.md")]
mod getting_started {}

#[doc = include_str!("../../../book/src/cci-model.md")]
mod cci_model {}

#[doc = include_str!("../../../book/src/channel.md")]
mod channel {}

#[doc = include_str!("../../../book/src/local-computing.md")]
mod local_computing {}

#[doc = include_str!("../../../book/src/offloading.md")]
mod offloading {}

#[doc = include_str!("../../../book/src/mode-selection.md")]
mod mode_selection {}

#[doc = include_str!("../../../book/src/data-allocation.md")]
mod data_allocation {}

#[doc = include_str!("../../../book/src/simulation.md")]
mod simulation {}

#[doc = include_str!("../../../book/src/numerics.md")]
mod numerics_appendix {}
