//! Solver and certification toolkit for the Dirichlet problem of the
//! 1-Laplacian with a power-type source term.
//!
//! The solver constructs nontrivial nonnegative solutions by running a
//! numerical mountain-pass algorithm on p-Laplacian approximations and
//! driving the exponent p toward 1 with warm starts, while recording the
//! diagnostics that characterize the limit object: uniform energy bounds,
//! the flux field and its pairing defect, boundary detachment, and level-set
//! truncation tails. The certification side checks candidate solutions
//! against a Pohozaev-type identity, closed-form radial solutions on balls,
//! and distributional weak residuals.
//!
//! Module map:
//! - [`mesh`]: disk/rectangle triangulations with boundary normals and masses
//! - [`source`]: power-type sources, antiderivatives, hypothesis certificates
//! - [`field`]: nodal fields and per-triangle flux fields with dump formats
//! - [`energy`]: discrete p-energies, the limit functional, first variations
//! - [`assembly`]: P1 stiffness assembly and the descent preconditioner
//! - [`mpa`]: the mountain-pass solver and measured nontriviality radius
//! - [`continuation`]: the p -> 1 driver and its per-step diagnostics
//! - [`certify`]: Pohozaev reports, radial solutions, weak residuals
//! - [`radial`]: radial shooting reference for the p = 2 benchmark
//! - [`cli`]: run configuration and the mesh/solve/continue/certify commands

pub mod assembly;
pub mod certify;
pub mod cli;
pub mod continuation;
pub mod energy;
pub mod field;
pub mod mesh;
pub mod mpa;
pub mod quad;
pub mod radial;
pub mod source;

pub use energy::{bv_norm, energy_ip, energy_j1, energy_jp, gradient_jp, EnergyParams};
pub use field::{Field, FluxField};
pub use mesh::{build_disk_mesh, build_rect_mesh, mesh_quality, refine, DomainTag, Mesh};
pub use mpa::{
    find_endpoint, local_min_check, measure_rho, mountain_pass_solve, warm_start_solve,
    MountainPassConfig, MpaSolution,
};
pub use source::{SignBranch, SourceKind, SourceSpec};
