//! Exact enumeration of regular triangulations of integer point
//! configurations, their GKZ vectors, and massive GKZ vectors.
//!
//! Everything is computed over exact arithmetic: lattice volumes and GKZ
//! entries are integers, massive GKZ entries are rationals, and regularity
//! is decided by an exact rational linear program with a reusable height
//! certificate. The crate exposes the geometry ([`config`]), triangulations
//! and flips ([`triang`]), symmetry handling ([`symmetry`]), massive face
//! accounting ([`massive`]), the regularity decision ([`regularity`]),
//! exhaustive and budgeted enumeration ([`enumerate`]), and GKZ class
//! post-processing ([`classes`]).

pub mod classes;
pub mod config;
pub mod enumerate;
pub mod io;
pub mod massive;
pub mod regularity;
pub mod symmetry;
pub mod triang;

mod linalg;
mod lp;
