//! Decorated ideal triangulations of cusped hyperbolic 3-manifolds: gluing
//! equations, exact cusp holonomy algebra, cusp parameters, field recognition,
//! isolation tests along the completeness curve, and trace calculus.

pub mod fixtures;
pub mod isolation;
pub mod holonomy;
pub mod linalg;
pub mod lll;
pub mod manifold;
pub mod num;
pub mod screen;
pub mod numberlab;
pub mod solver;
pub mod tracecalc;

pub use holonomy::{mu, tau, CuspParameter, MonomialSum, ShapeAssignment, SignedMonomial};
pub use manifold::{parse_triangulation, CornerKind, CornerRef, CuspCurve, CuspData, EdgeClass, IdealTriangulation};
pub use solver::{solve_complete, solve_filled, FillTarget, SolveResult, SolverOptions};
