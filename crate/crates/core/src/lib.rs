//! Batch toolkit for propagating stochastic elastic-fiber degradation through
//! a fiber-dispersed hyperelastic extension test and quantifying the
//! uncertainty of the resulting stress fields with a Stein-variational
//! ensemble of convolutional encoder-decoder surrogates.

pub mod constitutive;
pub mod fe;
pub mod field;
pub mod gauss;
pub mod grf;
pub mod rng;
pub mod stats;
