//! Towers of algorithms for spectral problems on infinite matrices.
//!
//! Every tower is exposed as a stage evaluator: give it the stage indices and
//! it returns a finite answer (a point cloud, a vector, a number, a verdict).
//! Nothing here claims a certified limit; schedule runners only report whether
//! consecutive stages agree.

pub mod cloud;
pub mod decision;
pub mod error;
pub mod expr;
pub mod linsys;
pub mod numerics;
pub mod operator;
pub mod polyroots;
pub mod schrodinger;
pub mod spec;
pub mod spectral;
pub mod sublevel;

pub use cloud::{GridSpec, PointCloud, TowerStage};
pub use error::{Error, Result};
pub use expr::{parse_expression, Expr};
pub use numerics::{ComplexMatrix, QuantizedValue, C64, DEFAULT_ETA};
pub use operator::{Dispersion, LazyOperator, ResolventControl, RhsVector};
pub use spec::{make_test_operator, OperatorSpec};
