//! Dirichlet problems on rasterised 2D domains (and 1D intervals): geometry,
//! Crank-Nicolson evolution, boundary traces, and the domain identities.

pub mod boundary;
pub mod cn;
pub mod geometry;
pub mod identity;
pub mod measure;
pub mod weights;

pub use boundary::{boundary_term_directional, boundary_term_directional_brute, normal_trace};
pub use cn::{evolve_domain, step_crank_nicolson, CrankNicolson};
pub use geometry::{BoundaryFace, CellKind, DomainGrid, GeometrySpec, Obstacle, OuterBoundary};
pub use identity::{boundary_brute_force_suite, domain_virial_disk_study, domain_virial_residual, t1d_disk_study, DiskStudyParams, rhs_domain_virial, rhs_theorem_t1d, verify_t1d, PairDomainVirial, PairT1d};
pub use measure::{cross_engine_oracle, frequency_localized_l4, l4_ratio_spread, CrossEngineLevel, CrossEngineParams, trace_control_measurement, DirichletBox, L4Datum};
pub use weights::{sign_audit, SignAudit, VirialWeight};
