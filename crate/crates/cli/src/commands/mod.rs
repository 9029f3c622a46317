pub mod conjugate;
pub mod dynamics;
pub mod equilibrium;
pub mod gradcheck;
