//! Problem description: lattice, beam, potential and slicing.

pub mod beam;
pub mod lattice;
pub mod potential;
pub mod slicing;

pub use beam::{build_gamma, project_incident, BeamGeometry, GammaMatrix};
pub use lattice::{Lattice, ReciprocalRodSet, Rod, Vec2};
pub use potential::{
    eval_potential, GaussianLayer, PotentialEvaluator, PotentialField, PotentialModel, TabulatedPotential,
};
pub use slicing::{PotentialSamples, PotentialTable, SlicingPlan};
