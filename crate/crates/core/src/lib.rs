pub mod error;
pub mod fock;
pub mod linalg;
pub mod meanfield;
pub mod counting;
pub mod density;
pub mod estimates;
pub mod scaling3d;
pub mod semiclassical;
pub mod experiments;
pub mod cli;
