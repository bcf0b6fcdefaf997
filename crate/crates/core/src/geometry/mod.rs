//! Sequence execution: sketch discretization, plane transforms, extrusion
//! cylinders, Boolean folding, surface sampling and mesh extraction.

mod bbox;
mod cylinder;
mod mesh;
mod sample;
mod solid;
mod transform;

pub use crate::dsl::planar::{discretize_curve, DegenerateCurve};
pub use bbox::{bbox_of_cylinder, Bbox3};
pub use cylinder::{DiscretizedSketch, ExtrusionCylinder};
pub use mesh::{export_mesh, Mesh};
pub use sample::{sample_surface, SAMPLE_EPSILON};
pub use solid::Solid;
pub use transform::{inverse_transform, transform_point};

use crate::dsl::Violation;
use thiserror::Error;

/// Default chord tolerance for curve discretization, in world units.
pub const CHORD_TOLERANCE: f64 = 1.0 / 256.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("sequence is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Degenerate(#[from] DegenerateCurve),
    #[error("solid is empty")]
    EmptySolid,
    #[error("collected only {got} of {wanted} surface samples")]
    Undersampled { got: usize, wanted: usize },
}
