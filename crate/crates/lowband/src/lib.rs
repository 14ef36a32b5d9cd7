//! Simulator for the supported low-bandwidth model and distributed sparse
//! matrix multiplication over semirings.
//!
//! The model: `n` computers run in synchronous rounds. In each round a
//! computer may send at most one message of `O(log n)` bits and receive at
//! most one. The *support* of the computation (which entries of `A`, `B` and
//! the output `X` are allowed to be nonzero) is known to everyone in advance
//! and preprocessing on it is free; the actual values arrive only at runtime.
//! Consequently every communication schedule here is built from the support
//! alone and is oblivious to values.
//!
//! Module layout:
//!
//! * [`algebra`]: runtime-pluggable semirings and the element word type.
//! * [`spmat`]: sparsity patterns, sparsity classes, degeneracy.
//! * [`support`]: support instances, triangle enumeration, counting bounds.
//! * [`netsim`]: the deterministic round-based network simulator.
//! * [`routing`]: anchor arrays, bipartite edge coloring, cast trees.
//! * [`algorithms`]: the multiplication algorithms themselves.
//! * [`analysis`]: exponent iteration and scaling fits.
//! * [`harness`]: instance generation, file formats, oracle, CLI plumbing.

pub mod algebra;
pub mod algorithms;
pub mod analysis;
pub mod harness;
pub mod netsim;
pub mod routing;
pub mod spmat;
pub mod support;
