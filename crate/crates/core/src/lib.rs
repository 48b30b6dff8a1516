pub mod detection;
pub mod harness;
pub mod mdp;
pub mod model;
pub mod numerics;
pub mod policies;
pub mod simulator;
