//! Floor-plan guided navigation toolkit.
//!
//! Agents move with discrete actions over continuous 2D space inside a
//! vectorized floor plan of typed regions. The crate covers the floor-plan
//! model ([`geometry`]), the noisy kinematic simulator ([`simulator`]),
//! rasterization and dual-view frame composition ([`render`]), the dataset
//! and QA generation pipeline ([`dataset`]) and metrics, policies and the
//! benchmark runner ([`eval`]).

pub mod geometry;
pub mod simulator;

pub mod dataset;
pub mod eval;
pub mod render;
