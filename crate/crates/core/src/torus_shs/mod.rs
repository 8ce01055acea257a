//! Cylindrically symmetric stable Hamiltonian structures on the solid torus,
//! transverse surgery gluing and stabilizer homotopies.

mod forms;
mod radial;
mod shs;

pub use forms::{
    verify_shs_axioms, verify_shs_axioms_with, AxiomReport, AxiomTolerances, FormPair, FormValue,
    GridSpec, OneForm, TwoForm,
};
pub use radial::{AxisParity, RadialFn};
pub use shs::{
    assemble_torus_shs, build_radial_profiles, glue_surgery, interpolate_stabilizers,
    scale_omega_by_radial, write_profile_csv, GlueReport, InterpolationStep, TorusSHS,
    PROFILE_CSV_HEADER,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TorusError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("exterior lambda differs from the interior by {0} on the overlap")]
    LambdaMismatch(f64),
    #[error("Reeb slopes disagree on the overlap")]
    SlopeMismatch {
        radii: Vec<f64>,
        exterior: Vec<f64>,
        interior: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, TorusError>;
