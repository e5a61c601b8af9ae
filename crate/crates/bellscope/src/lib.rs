//! Toolkit for correlation vectors over finite event scenarios: exact
//! polytope membership with Bell-type facet reports, Kolmogorovian and
//! conditional probability-space witnesses, common-cause screening analysis,
//! and two-qubit singlet-state computations.

pub mod arith;
pub mod classical_rep;
pub mod common_cause;
pub mod scenario;
pub mod polytope;
pub mod quantum;
pub mod simplex;
