//! Random walks on finitely generated groups induced on finite-index subgroups.
//!
//! A subgroup `Γ ≤ G` is described by the right action of the generators on
//! its cosets. From a step measure `μ` on `G` the crate builds the projected
//! coset chain, the hitting measure `θ` on `Γ`, exact boundary quantities for
//! simple random walk on free groups, and entropy brackets, and checks the
//! identities relating the `μ`-walk on `G` to the `θ`-walk on `Γ`:
//! `E[τ] = [G:Γ]` and `h_θ = [G:Γ]·h_μ`.

pub mod boundary;
pub mod chain;
pub mod config;
pub mod coset;
pub mod entropy;
pub mod error;
pub mod group;
pub mod hitting;
pub mod logvalue;
pub mod measure;
pub mod rational;
pub mod report;
pub mod sampling;

pub use chain::{CosetChain, TailCertificate};
pub use coset::CosetAction;
pub use error::{Error, Result};
pub use group::{GroupElement, GroupModel};
pub use logvalue::LogValue;
pub use measure::{convolve, FinMeasure};
pub use rational::Rational;
