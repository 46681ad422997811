#![no_std]
#![allow(clippy::needless_range_loop)]
extern crate alloc;

pub mod error;
pub mod groundfield;
pub mod lattice;
pub mod qfield;

pub use error::{Error, Result};
pub use qfield::Scalar;
pub mod linalg;
pub mod tube;
pub mod ihallcore;
pub mod linebundles;
pub mod generators;

pub use ihallcore::{CohClass, Engine, HallElt};
pub mod verifier;
