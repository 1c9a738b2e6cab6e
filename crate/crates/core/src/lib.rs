pub mod barriers;
pub mod conditions;
pub mod domain;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod harness;
pub mod parallels;
pub mod solver;

pub use barriers::{BoundaryData, GlobalGradientBound, GradientBarrier, HeightBarrier};
pub use conditions::{ConditionReport, ExistenceRoute, HBounds, PrescribedH};
pub use domain::{DistanceField, DomainSpec, Orientation, TrigCurve, TrigSeries};
pub use error::{Error, Result};
pub use expr::{Expr, Jet, Var};
pub use geometry::{ManifoldModel, MetricAt, ModelKind, Point};
pub use parallels::{ParallelTrajectory, RiccatiProblem};
pub use solver::{solve_dirichlet, SolutionField, SolveReport, SolverConfig};
