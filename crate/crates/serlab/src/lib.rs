//! Symbol error rate analysis for M-QAM OFDM links under Gaussian-mixture
//! impulsive noise, with per-sample nonlinear suppression.
//!
//! The crate provides four layers:
//!
//! - noise models ([`gmm`], [`sas`]): Bernoulli-Gaussian, Middleton Class-A
//!   and alpha-stable impulsive noise as zero-mean Gaussian mixtures;
//! - suppressors ([`suppressor`]): blanking, clipping, Bayesian attenuation
//!   and genie-aided gains, with their Bussgang decompositions and output
//!   SNR;
//! - analysis ([`distortion`], [`fitter`], [`ser`], [`pipeline`]):
//!   distortion-noise densities at a threshold suppressor output, their
//!   Gaussian-mixture summaries, and closed-form SER predictors for flat,
//!   Rayleigh and Rician block-fading channels;
//! - simulation ([`sim`]): a Monte Carlo OFDM link used to validate every
//!   analytical prediction.

pub mod distortion;
pub mod fitter;
pub mod gmm;
pub mod numerics;
pub mod pipeline;
pub mod sas;
pub mod ser;
pub mod sim;
pub mod suppressor;

pub use gmm::{GmmError, GmmSpec, NoiseSample};
