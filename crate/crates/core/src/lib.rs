pub mod error;
pub mod kernels;
pub mod model;
pub mod conventional;
pub mod proposed;
pub mod curve;
pub mod solver;
