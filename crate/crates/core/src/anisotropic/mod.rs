//! Reduction of an anisotropic conductivity to an isotropic one: μ₁ from σ,
//! the normalized solution Θ of ∂̄Θ = μ₁∂Θ on a grid, and the transport of σ
//! and boundary data through Θ.

mod beltrami;
mod grid;
mod pushforward;

pub use beltrami::{mu1, mu1_of, sample_mu1, solve_beltrami, BeltramiMap};
pub use grid::{BeltramiGrid, GridField};
pub use pushforward::{
    composition_residual, pullback_boundary_data, pushforward_boundary_data, pushforward_conductivity,
    transport_matrix, Pushforward, TransportedData,
};

#[cfg(test)]
mod tests;
