//! Principal angles between planes in R⁴, verification of helix surfaces
//! against a fixed plane, and construction of helix graphs with prescribed
//! angles.

pub mod catalog;
pub mod cli;
pub mod construct;
pub mod expr;
pub mod grassmann;
pub mod io;
pub mod jet;
pub mod surface;
