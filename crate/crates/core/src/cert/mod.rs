//! ISS certificate synthesis and numerical verification.
//!
//! Synthesis is sequential per system; verifying many arcs against one
//! immutable certificate may run concurrently.

mod synthesize;
mod verify;

pub use synthesize::{
    synthesize_certificate, verify_certificate_feasibility, IssCertificate, PSD_TOL,
    SYNTHESIS_MARGIN,
};
pub use verify::{
    check_decrease, check_iss_bound, evaluate_v, VerificationReport, VerificationStatus,
};
