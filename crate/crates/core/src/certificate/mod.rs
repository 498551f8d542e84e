//! Optimality certificates for candidate solutions and pre-solve
//! diagnostics of whether a maximum-entropy density exists at all.

mod certify;
mod existence;

pub use certify::{certify, Certificate, SlaterStatus, Tolerances, Verdict, RECOMPUTE_FACTOR};
pub use existence::{
    diagnose_constraints, diagnose_existence, EntropyBracket, ExistenceDiagnosis, Route, SlaterWitness,
    VolumeEvidence, VOLUME_SAMPLES, WITNESS_SAMPLES,
};
