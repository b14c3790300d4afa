//! Dirichlet Laplacian spectra on finite subsets of ℤⁿ.

pub mod eigen;
pub mod inequalities;
pub mod operator;
pub mod proof;
pub mod region;
pub mod report;
pub mod rng;
pub mod search;
