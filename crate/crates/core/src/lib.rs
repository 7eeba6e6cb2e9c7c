//! Twin experiments for nudging the subcritical surface quasi-geostrophic
//! equation with delayed, time-averaged observations.

pub mod assimilation;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod observers;
pub mod runner;
pub mod spectral;
