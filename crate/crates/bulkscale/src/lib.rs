//! Numerical laboratory for orthogonal polynomial ensembles with a Fermi-type
//! deformation at a bulk point.

pub mod asymptotics;
pub mod equilibrium;
pub mod modelrhp;
pub mod numerics;
pub mod orthopoly;
