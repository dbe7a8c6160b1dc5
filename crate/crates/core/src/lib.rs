//! Calibration of a camera-projector pair from images of two spheres of
//! known radius.
//!
//! The pipeline: fit each sphere's contour conic ([`geom`]), decode the
//! projected fringes into camera-to-projector correspondences ([`phase`],
//! [`pipeline`]), then search the camera intrinsics under which both
//! spheres agree on one projector matrix ([`isc`]). The projector's
//! intrinsics and pose follow from decomposing that matrix ([`dlt`]).
//! [`sim`] renders synthetic scenes with exact ground truth and
//! [`reconstruct`] triangulates point clouds from a calibration.

pub mod bundle;
pub mod dlt;
pub mod geom;
pub mod isc;
pub mod phase;
pub mod pipeline;
pub mod raster;
pub mod reconstruct;
pub mod sim;
pub mod sphere;

pub use dlt::{Correspondence, Decomposition, ProjMatrix};
pub use geom::{Conic, ConstraintPair, GeomError, Intrinsics};
pub use isc::{calibrate, CalibResult, ErrorReport, IscError, IscOptions, IscProblem, SphereObservation};
pub use phase::{FringeConfig, Orientation, PhaseMap};
pub use sim::{SceneBundle, SceneConfig, SceneTruth};
pub use sphere::SpherePose;
