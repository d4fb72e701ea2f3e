//! Lowest coupled nuclear-photonic eigenstates by imaginary-time Krylov propagation,
//! transition dipoles and the g/e/f manifold partition.

mod krylov;
mod relax;
mod solution;

pub use krylov::{krylov_imaginary_step, propagate_vector, KrylovInfo};
pub use relax::{solve_grid_states, GridStates, RelaxationConfig, LOCK_RESIDUAL, STATIONARY_WINDOW, TRIAL_LEAK_LIMIT};
pub use solution::{
    config_for, load_eigen_solution, load_wavefunctions, partition_manifolds, read_eigen_solution,
    read_wavefunctions, relax_eigenstates, save_eigen_solution, save_wavefunctions, transition_dipoles,
    transition_dipoles_with_residue, write_eigen_solution, write_wavefunctions, EigenSolution, ManifoldPartition,
    DEGENERACY_TOL, E_WINDOW, F_WINDOW,
};
