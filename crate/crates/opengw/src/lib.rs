//! Exact computations for open Gromov-Witten and Welschinger-type invariants
//! of Lagrangian threefolds: orientation signs, the degree lattice,
//! multi-disk counts, the bounding-chain recursion and open WDVV relations.

pub mod bounding_chain;
pub mod lattice;
pub mod linalg;
pub mod multidisk;
pub mod orientation;
pub mod ring;
pub mod synthetic;
pub mod wdvv;
pub mod io;
pub mod pipeline;
pub mod fixtures;
