//! Certificates and contract annotations: the `.fdcert` file format, its
//! re-verification against a plant model, and ACSL-like contract blocks.

mod cert;
mod emit;
mod grammar;

pub use cert::{
    parse_certificate, verify_certificate, CertEllipsoid, CertThresholds, CertificateFile,
    CheckResult, VerifyReport, CERT_SCHEMA_VERSION,
};
pub use emit::{
    doubling_sample, ellipsoid_predicate, emit_annotations, parse_blocks, quadratic_form,
    render_blocks, variable_names, AnnotationBlock,
};
pub use grammar::{parse_predicate, Expr, Predicate, RelOp};
