//! Gaussian-state simulation of spatially multimode quantum-correlated twin
//! beams from a traveling-wave phase-insensitive amplifier.
//!
//! The model: a phenomenological probe–conjugate pair-creation kernel on a
//! discretized far field ([`gain`]), singular-value decomposed into
//! independently squeezed mode pairs, drives a Gaussian state of first and
//! second moments ([`state`]) from which every photon-number statistic
//! (means, variances, Mandel Q, dB vs the standard quantum limit) follows in
//! closed form. Detector masks ([`detection`]) act as pixel-wise loss.
//! The scripted measurements live in [`experiments`]; a brute-force
//! truncated Fock oracle ([`oracle`]) validates the Gaussian machinery on
//! every small scenario it can reach.

pub mod config;
pub mod detection;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod gain;
pub mod linalg;
pub mod oracle;
pub mod runner;
pub mod state;
pub mod transverse;
