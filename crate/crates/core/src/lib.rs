//! Numerical and combinatorial checks for blown-up pseudo-Anosov flows,
//! solid-torus stable Hamiltonian structures, surgery slopes and the
//! rational SFT gluing algebra.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blowup;
pub mod cli;
pub mod ham2d;
pub mod jet;
pub mod sftq;
pub mod slopes;
pub mod smooth;
pub mod torus_shs;
