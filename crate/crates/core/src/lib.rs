//! Discrete-time JASTAP spiking networks and an evolutionary trainer that
//! learns network parameters together with an input feature mask.
//!
//! The crate is organised bottom-up:
//!
//! * [`neuron`] simulates networks of JASTAP neurons,
//! * [`codec`] turns feature vectors into repetitive inter-spike-interval
//!   trains and reads the first output spike back as a class decision,
//! * [`noise`] draws Gamma-shaped perturbations for those intervals,
//! * [`genome`] maps Gray-coded chromosomes onto a fixed network skeleton,
//! * [`fitness`] scores one network on a labelled pattern set,
//! * [`evolution`] runs the elitist generational loop,
//! * [`dataset`] and [`runner`] load data and drive whole experiments.

pub mod codec;
pub mod dataset;
pub mod error;
pub mod evolution;
pub mod fitness;
pub mod genome;
pub mod neuron;
pub mod noise;
pub mod rng;
pub mod runner;
pub mod train;

pub use error::{Error, Result};

