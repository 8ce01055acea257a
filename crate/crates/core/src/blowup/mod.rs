//! Blowup constructions on the plane: fixed-point census, the eye, cone-field
//! certificates, lifted and monkey-saddle models, and suspensions.

mod cone;
mod extended;
mod eye;
mod fixed;
mod models;
mod suspension;

pub use cone::{
    axis_angle, certify_cone_contraction, cone_image, recheck_archived_margins,
    reverify_certificate, stable_directions, stable_separatrix_entries, write_certificate_csv,
    CertificateConfig, CertificateParameters, ConeCertificate, ConeField, ConeImage, ConeSample,
    SampleKind, Verdict, CERTIFICATE_CSV_HEADER,
};
pub use extended::{
    extended_cone_field, ExtendedConeField, ExtendedConfig, ExtendedReport, ExtendedSample,
    ExtendedSampleKind, Transport,
};
pub use eye::{eye_boundary, write_eye_csv, EyeRegion, EYE_CSV_HEADER};
pub use fixed::{
    classify_fixed_point, find_fixed_points, FixedPoint, FixedPointCensus, FixedPointType,
    FlaggedCell, SearchBox, DEDUP_RADIUS,
};
pub use models::{
    branched_cover_lift, count_separatrix_rays, cover_projection, hausdorff_distance,
    monkey_delta_bound, monkey_saddle_roots, monkey_saddle_spec, shadowing_distance, PostRotation,
};
pub use suspension::{
    classify_linear_return, suspend, ClassifyError, ClosedOrbit, OrbitClass, OrbitType, Suspension,
};
