//! ANOVA-based emulators of expensive deterministic models.
//!
//! Two families of global emulators are provided:
//!
//! * [`db_anova`]: emulators built from exact cross-partial derivatives sampled at
//!   a set of base points, together with derivative-based Sobol' indices, their
//!   upper bounds, truncation-order recommendations and screening rules.
//! * [`df_emulator`]: derivative-free emulators that only need `N * L` runs of the
//!   model at randomly perturbed base points. Interaction terms of every order are
//!   aggregated through elementary symmetric polynomials ([`esp`]) with weights
//!   obtained from generalized Vandermonde systems ([`coefficients`]).
//!
//! [`distributions`] holds input marginals and design samplers, [`testbed`] the
//! analytic benchmark functions and replication studies, and [`heat_pde`] a 1-D heat
//! diffusion model whose quantity of interest has an exact adjoint gradient.

pub mod coefficients;
pub mod db_anova;
pub mod df_emulator;
pub mod distributions;
pub mod error;
pub mod esp;
pub mod heat_pde;
mod linalg;
pub mod sobol;
mod sobol_table;
pub mod subset;
pub mod testbed;

pub use error::{Error, Result};
pub use subset::Subset;
