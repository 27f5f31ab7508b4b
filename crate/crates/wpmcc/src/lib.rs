//! Policies and Monte-Carlo simulation for wirelessly powered mobile cloud
//! computing.
//!
//! A base station either beams power to a single-antenna device or relays
//! its offloaded computation to the cloud. Given the distribution of CPU
//! cycles per input bit and the channel state, this crate computes the
//! schedules that maximize the probability of finishing a task by its
//! deadline without ever outspending the harvested energy:
//!
//! - [`local`] — energy-minimal CPU-cycle frequency schedules under the
//!   harvesting and deadline constraints;
//! - [`offload`] — the optimal split of the deadline between power transfer
//!   and data transmission;
//! - [`mode`] — choosing between the two by realized energy savings;
//! - [`alloc`] — dividing a task across several fading blocks when future
//!   gains are known, with greedy, water-filling-style and dynamic-program
//!   allocators;
//! - [`sim`] — reproducible Monte-Carlo estimation of the computing
//!   probability over Rician fading ([`channel`]) and random per-bit cycle
//!   counts ([`cci`]);
//! - [`numerics`] — the Lambert W function and root finders everything else
//!   leans on.
//!
//! The companion guide under `book/` walks through the model and each
//! policy with runnable examples; its snippets compile and run as part of
//! this crate's test suite.

pub mod alloc;
pub mod cci;
pub mod channel;
pub mod local;
pub mod mode;
pub mod numerics;
pub mod offload;
pub mod sim;

mod book;

pub use cci::{CciModel, ExecutionProbabilities, ScalingFactors};
pub use channel::{sample_block_gains, sample_gain, BlockGains, RicianParams};
pub use local::{LocalConfig, LocalPolicy, LocalRegime};
pub use mode::{Mode, ModeDecision};
pub use offload::{OffloadConfig, OffloadPolicy, OffloadRegime};
pub use sim::{ExperimentConfig, Policy, Simulation, SweepRow};
