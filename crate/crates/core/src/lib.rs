//! Twisted Burau representations, Reidemeister torsion and the doubled
//! quantum holonomy invariant of SL₂(ℂ)-colored braid closures.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: dense complex matrices (LU, SVD, Kronecker products).
//! * [`braids`]: braid words, their action on free groups and color tuples.
//! * [`holonomy`]: SL₂(ℂ) and SL₂(ℂ)* coordinates, the biquandle, gauges.
//! * [`burau`]: twisted Burau matrices and the torsion of a colored closure.
//! * [`uqi`]: matrix representations of the quantum group at `q = i`.
//! * [`braiding`]: holonomy braidings, their mirrors and doubles, functors.
//! * [`invariants`]: modified traces and the link invariants.
//! * [`cli`]: the JSON-facing layer used by the `holotor` binary.

pub mod braiding;
pub mod braids;
pub mod burau;
pub mod cli;
pub mod error;
pub mod holonomy;
pub mod invariants;
pub mod numerics;
pub mod uqi;

pub use braids::BraidWord;
pub use error::{Error, Result};
pub use holonomy::{ExtChar, SL2Elem, StarChar};
pub use numerics::{Matrix, C64};
