//! Exact fixed-point and periodic-orbit indices for holomorphic germs with
//! finite-order Jordan linear part.

pub mod error;
pub mod exactnum;
pub mod germlang;
pub mod jordan;
pub mod localmult;
pub mod multipoly;
pub mod orbits;
pub mod par;
pub mod resonance;
pub mod universality;

pub use error::{Error, Result};
