//! Core pipeline for indoor localisation from massive-MIMO channel state
//! information (CSI).
//!
//! The crate covers the full numeric path from raw channel matrices to a
//! tracked position estimate:
//!
//! * [`csi`] — synthetic channel generation and polar feature extraction,
//! * [`table`] — fingerprint tables, grids, antenna subsetting and splits,
//! * [`pca`] — deterministic principal-component scores for feature layout,
//! * [`image`] — fingerprint-to-image encoding (layout fit, render, blur),
//! * [`nn`] — the hybrid CNN + MLP position regressor, trained from scratch,
//! * [`kalman`] — a constant-velocity Kalman filter over (x, y) measurements,
//! * [`sim`] — simulated robot routes, CSI association, noise injection and
//!   experiment evaluation.
//!
//! Everything here is `no_std` + `alloc`: file formats, configuration and the
//! command-line front end live in the companion `csiloc` crate. All
//! randomness is drawn from explicitly seeded generators so that every
//! pipeline stage is reproducible bit-for-bit.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod csi;
pub mod geom;
pub mod image;
pub mod kalman;
pub mod nn;
pub mod pca;
pub mod rng;
pub mod sim;
pub mod table;

pub use geom::{Bounds, PointMm};
