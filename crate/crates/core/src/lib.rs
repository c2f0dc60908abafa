//! Balance laws on partial jet bundles.
//!
//! A constitutive relation assigns fluxes and sources to points of a (partial)
//! first jet bundle; this crate derives the balance PDE system, builds the
//! associated Poincare-Cartan forms and runs the symmetry, Noether, type and
//! entropy-principle analyses on top of an exact symbolic core.
#![no_std]

extern crate alloc;

pub mod symex;
pub mod forms;
pub mod jetspace;
pub mod linalg;
pub mod crel;
pub mod balance;
pub mod noether;
pub mod ret;
pub mod selftest;
