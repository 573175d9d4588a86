//! Asymptotic diagnostics built on top of the solver: the profile
//! `α_j(t,ξ) = F_{m_j}[U_{m_j}(t)⁻¹u_j(t)](ξ)`, the residual of the profile
//! equation `i∂ₜα = p(ξ;α)/t + ρ`, the ρ-free reduced flow, the Lyapunov
//! quantity `ν = √⟨α, Aα⟩`, the ODE comparison lemma, decay fits and the
//! scattering (Cauchy) check.

pub mod fit;
pub mod kms;
pub mod profile;
pub mod reduced;
pub mod scattering;

pub use fit::{fit_decay, fit_power_law, DecayFit, DecayModel, PowerFit};
pub use kms::{kms_verify, KmsInput, KmsReport};
pub use profile::{
    compute_residual, default_xi_grid, extract_profile, stationary_phase_error, uniform_grid, ProfileState,
    ResidualField,
};
pub use reduced::{integrate_reduced, lyapunov_nu, reduced_history};
pub use scattering::{scattering_check, ScatteringReport};

/// Reference slack `γ` used when comparing measured residual exponents
/// against `-5/4 + γ`.
pub const GAMMA_REFERENCE: f64 = 0.1;
