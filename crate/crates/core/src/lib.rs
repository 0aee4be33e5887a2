//! Discretized 2D Kuramoto-Sivashinsky dynamics on the unit square with
//! sampled-data boundary-free control, functional-inequality checks and
//! LMI stability certificates.

pub mod field;
pub mod inequalities;
pub mod linalg;
pub mod lmi;
pub mod sim;
