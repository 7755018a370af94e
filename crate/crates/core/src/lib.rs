//! Analysis of piecewise-smooth continuous planar maps near homoclinic
//! corners: border-collision normal form, periodic orbits, invariant
//! manifolds with kinks, border-collision bifurcations, and mode-locking.

pub mod config;
pub mod emit;
pub mod error;
pub mod geom;
pub mod homoclinic;
pub mod manifolds;
pub mod modelock;
pub mod normal_form;
pub mod periodic;
pub mod pws;
pub mod unfolding;

pub use error::{Error, Result};
pub use geom::{Mat2, Point};
pub use normal_form::{NormalFormParams, SaddleData, Side};
pub use pws::{Itinerary, OrbitSegment, PwsMapSpec};
