//! Manufactured-solution verification: forcing synthesis, convergence
//! studies and field export.

pub mod export;
pub mod manufactured;
pub mod study;

pub use manufactured::{manufactured_fields, manufactured_forcing, ManufacturedSolution};
pub use study::{
    convergence_rate, run_space_study, run_time_study, ErrorReport, StudyAxis, StudyLevel, StudySettings,
    TimeErrorMeasure,
};
