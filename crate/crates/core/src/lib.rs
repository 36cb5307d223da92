pub mod bicomplex;
pub mod holonomy;
pub mod jetcalc;
pub mod random;
pub mod smoothset;
pub mod suites;
pub mod symexpr;
pub mod variational;
