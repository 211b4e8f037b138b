//! Simulation and analysis of planar Brownian motion with oblique
//! electrostatic repulsion from the sides of the quadrant.

pub mod csv;
pub mod deterministic;
pub mod harness;
pub mod integrator;
pub mod model;
pub mod regime;
pub mod rng;
pub mod stationary;
pub mod stats;
