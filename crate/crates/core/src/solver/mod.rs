//! Variational machinery: projection onto constraint manifolds, constrained minimization,
//! separation sweeps, Morse indices, Rayleigh-quotient constants and the attainment check.

pub mod ansatz;
pub mod attainment;
pub mod hessian;
pub mod init;
pub mod minimize;
pub mod projection;
pub mod rayleigh;
pub mod search;
pub mod separation;

pub use hessian::{hessian_apply, hessian_matrix, morse_index, MorseResult};
pub use init::{block_centers, default_block_gap, soliton_field};
pub use minimize::{gradient_norm, minimize, Diagnosis, GroundStateResult, HistoryPoint, MinimizeOptions};
pub use projection::{first_order_multipliers, multiplier_system, project_nehari, Multipliers, Projection};
pub use ansatz::{minimize_ansatz, AnsatzOptions, AnsatzResult};
pub use attainment::{check_attainment, AttainmentReport, AttainmentVerdict, SplitCertificate};
pub use rayleigh::{beta_bar, beta_bar_radial, d_tilde, radial_weighted_quotient, min_weighted_quotient, rho_hat, BetaBar, DTilde};
pub use search::{ground_state_search, initial_placements, SearchOutcome, SearchRun};
pub use separation::{composite, multiplier_expansion, sweep_separation, MultiplierExpansion, SeparationCurve, SideState};
