//! Block-structure analysis and variable-length faithful compression of
//! finite quantum-state ensembles.
//!
//! Given a source ensemble `{p_i, rho_i}`, this crate computes the
//! Koashi-Imoto decomposition of the support of the average state into
//! blocks `H_J ⊗ H_K` (every letter block-diagonal, with an i-independent
//! redundant K factor per block), derives the compression-rate quantities
//! attached to that structure (classical part, nonclassical dimension and
//! entropy parts, Levitin-Holevo bound, scenario gaps), and simulates the
//! explicit variable-length faithful codec at the density-operator level:
//! a projective block measurement, a Huffman code for the block index, and
//! a qubit-packed transfer of the J factor, with the K factor regenerated
//! on decode.
//!
//! Modules:
//! - [`matcore`]: dense complex-matrix primitives.
//! - [`ensemble`]: ensemble data model, validation, file format, fixtures.
//! - [`kidecomp`]: the decomposition engine and its verification suite.
//! - [`rates`]: rate quantities, gaps, classification, shadow ensemble.
//! - [`vlfcodec`]: prefix codes and the faithful codec with length accounting.
//! - [`cli`]: command-line front end.

pub mod cli;
pub mod ensemble;
pub mod kidecomp;
pub mod matcore;
pub mod rates;
pub mod tol;
pub mod vlfcodec;
