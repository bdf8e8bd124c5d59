//! Discrete homotopy theory on finite metric spaces.
//!
//! Everything is indexed by a scale: chains step strictly below it, the
//! scale group is the edge-path group of the Rips 2-complex, covering
//! graphs realize the space of chain classes with its endpoint map, and
//! towers of spaces with 1-Lipschitz surjective bonds support preimage
//! diameters, refining checks, and lifts of chains and homotopies.
//!
//! The metric side is generic over the scalar (`f32` or `f64`); concrete
//! `f64` aliases live at the crate root and are the wire types of the JSON
//! schemas in [`io`]. Homology arithmetic is exact 64-bit integer with
//! checked overflow.
//!
//! Decision surfaces are three-valued by design: nullity and refining
//! checks answer with a replayable witness, a homology certificate, or an
//! explicit budget-exhausted unknown — never a guess.

pub mod chains;
pub mod connect;
pub mod coset;
pub mod cover;
pub mod fixtures;
pub mod io;
pub mod metric;
pub mod nullity;
pub mod presentation;
pub mod rips;
pub mod scalar;
pub mod snf;
pub mod spectrum;
pub mod tower;

pub use scalar::Scalar;

/// Concrete `f64` aliases used by the CLI, fixtures, and JSON schemas.
pub type Space = metric::FiniteMetricSpace<f64>;
pub type Chain64 = chains::Chain<f64>;
pub type Homotopy64 = chains::Homotopy<f64>;
pub type Presentation64 = presentation::Presentation<f64>;
pub type Cover64 = cover::CoveringGraph<f64>;
pub type Tower64 = tower::Tower<f64>;
