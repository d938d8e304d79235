//! Bit-accurate functional models of lookup-table multipliers for
//! compute-in-memory arrays: the full-table design, the divide-and-conquer
//! design with plain and storage-optimized banks, and two approximate
//! variants. Also component counting, exhaustive error characterization of
//! the approximate variants, and a small quantized network harness that runs
//! inference through any of them.

pub mod bitcore;
pub mod costmodel;
pub mod error;
pub mod erroranalysis;
pub mod lutmul;
pub mod nnharness;

pub use bitcore::{add_traced, exact_mul, Addend, AdderKind, AdderTrace, UWord};
pub use costmodel::{weighted_area, AreaWeights, ComponentCount};
pub use error::{Error, Result};
pub use lutmul::{program, MultiplierConfig, MultiplierKind, MultiplierModel};
