//! Robustness evaluation of graph representation learning under structure
//! perturbation attacks.

pub mod autodiff;
pub mod graph;
pub mod seed;
pub mod encoders;
pub mod params;
pub mod augment;
pub mod contrastive;
pub mod probe;
pub mod attacks;
pub mod metrics;
pub mod data_io;
pub mod runner;
