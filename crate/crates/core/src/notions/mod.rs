//! Certifiers for DP, MI, LMI, TS, ML and LML, implication checks between
//! them, and the two separation instances.

mod certify;
mod implication;
mod separation;

pub use certify::{
    dp_certify, dp_certify_ratio, lmi_certify, lmi_certify_induced, lmi_certify_ratio, lml_certify,
    lml_certify_induced, lss_notion_certify, mi_certify, mi_certify_induced, mi_certify_ratio,
    ml_certify, ml_certify_induced, ts_certify, ts_certify_ratio, Direction, Notion,
    NotionCertificate, Witness,
};
pub use implication::{
    compression_lss_threshold, lmi_to_lss_eps, verify_implication, Implication,
    ImplicationParams, ImplicationReport, Instance,
};
pub use separation::{
    parity_mi_witness, parity_world, run_separation, ParityParams, Prong, ReleaseParams,
    SeparationKind, SeparationReport,
};
