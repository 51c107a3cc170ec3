//! Spin operators, radical-pair systems and their Hamiltonians.

pub mod hamiltonian;
pub mod model_file;
pub mod operators;
pub mod system;

pub use hamiltonian::{
    build_hamiltonian, electronic_singlet_projector, embed_site_operator, point_dipole_prefactor, point_dipole_tensor,
    singlet_projector, total_spin_squared, HamiltonianParts,
};
pub use model_file::{load_spin_system, load_spin_system_with_cap, parse_spin_system, shipped_model, SHIPPED_MODELS};
pub use operators::{angular_momentum_ops, CMatrix, CsrMatrix, OperatorMatrix, SpinMatrices, C64};
pub use system::{composite_average, rank_and_truncate, FieldOrientation, Nucleus, Radical, SpinSystem};
