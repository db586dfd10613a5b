//! Efficient differentially-private SGD.
//!
//! The crate implements a micro-batch variant of DP-SGD in which a batch is
//! split across `N` worker lanes. Each lane clips its micro-batch gradient
//! after per-layer scaling and adds its own share of Gaussian noise whose
//! strength decays with the epoch. Around that pipeline sit:
//!
//! * [`grad`]: the [`GradientSet`] container and exact linear algebra,
//! * [`engine`]: partitioning, scaling, clipping, noise and the
//!   [`edp_step`](engine::edp_step) itself, plus per-example DP-SGD,
//! * [`accountant`]: zCDP composition and `(ε, δ)` conversion,
//! * [`models`]: toy classifiers with manual backprop and blob data,
//! * [`mia`]: shadow-model membership inference and rank AUC,
//! * [`experiment`]: config-driven training, attack and benchmark runs.
//!
//! The guide under `book/` walks through each piece; its code listings are
//! compiled and run as doctests of this crate.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accountant;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod grad;
pub mod mia;
pub mod models;
pub mod optim;
pub mod rng;

pub use error::{Error, Result};
pub use grad::{l2_norm, linear_combine, GradientSet};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/gradients.md")]
    mod gradients {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/determinism.md")]
    mod determinism {}
    #[doc = include_str!("../../../book/src/accounting.md")]
    mod accounting {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/membership-inference.md")]
    mod membership_inference {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/schemas.md")]
    mod schemas {}
}
