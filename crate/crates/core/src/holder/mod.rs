//! Hölder observables, functionals of trajectories and the variance bound harness.

pub mod functional;
pub mod harness;
pub mod observable;

pub use functional::{devroye_bound, lj_coefficients, CatalogFunctional, Coefficients, Functional, Reference};
pub use harness::{
    calibrate_d, catalog_functional, check_devroye, estimate_variance_mc, CalibrationConfig, CalibrationReport, DevroyeCheck,
    HarnessConfig, VarianceReport, DEFAULT_D,
};
pub use observable::{invariant_mean, Observable, ObservableKind};
