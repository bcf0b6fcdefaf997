//! Reverse engineering of sketch-extrude CAD modeling sequences from point clouds.
//!
//! The crate is organised around the iterative prompt-and-select loop:
//!
//! * [`dsl`] holds the sequence data model, the token alphabet and the
//!   quantized token codec.
//! * [`geometry`] executes sequences into occupancy solids, samples their
//!   surfaces and extracts meshes.
//! * [`guidance`] computes the distinct-region masks between the target and
//!   the current state, detects planes and samples planar prompts.
//! * [`fit`] turns one planar prompt into a candidate modeling step.
//! * [`selection`] scores candidates and picks one.
//! * [`pipeline`] drives the loop and generates synthetic test models.
//! * [`losses`] provides reference implementations of the differentiable
//!   bounding-box quantities used to supervise learned decoders.
//! * [`metrics`] implements the evaluation metrics and batch reports.
//!
//! Data-parallel inner loops run on rayon when the `parallel` feature is
//! enabled (the default) and fall back to plain iterators otherwise.

pub mod cloud;
pub mod dsl;
pub mod fit;
pub mod geometry;
pub mod guidance;
pub mod losses;
pub mod math;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod selection;
pub mod spatial;

pub use cloud::PointCloud;
pub use dsl::{BooleanOp, CadSequence, Curve, CurveKind, Extrusion, Face, Loop, ModelingStep, Sketch};
pub use geometry::Solid;
