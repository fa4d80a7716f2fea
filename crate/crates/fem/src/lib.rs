//! Finite-element infrastructure: quadtree meshes, continuous Lagrange spaces
//! with hanging-node elimination, quadrature, parallel assembly and sparse LU.

pub mod assembly;
pub mod basis;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod kernels;
pub mod mesh;
pub mod parallel;
pub mod quadrature;
pub mod solve;
pub mod space;
pub mod sparse;

pub use assembly::{assemble, assemble_with_pattern, BlockLayout, Kernel, LocalSystem, Want};
pub use error::{FemError, Result};
pub use geometry::{Configuration, ReferenceTables, Symmetry};
pub use integrate::{integrate, PointEval, Region};
pub use mesh::{build_structured_mesh, Facet, Mesh, Neighbor, QuadtreeBuilder, Rect, RefineBox};
pub use quadrature::QuadratureRule;
pub use solve::{solve_linear, Factorization, LuSolver};
pub use space::{Family, Field, FunctionSpace};
pub use sparse::{CsrMatrix, CsrPattern, SparseSystem};
