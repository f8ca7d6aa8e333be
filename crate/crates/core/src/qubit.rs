//! Qubit reference model built on the controlled-`σ_θ` ("c-maybe") gate
//! `U = |0⟩⟨0| ⊗ 1 + |1⟩⟨1| ⊗ σ_θ` with `σ_θ = cos θ σ_x + sin θ σ_z`.
//!
//! The induced monitoring strength is `1 - sin θ`, while the `d = 2` case of
//! the general construction gives `1 - cos θ`. The two agree after the
//! substitution `θ → π/2 - θ`.

use std::f64::consts::FRAC_PI_2;

use crate::algebra::{conjugate_local, partial_trace, tensor, trace_distance, DimensionLayout, Operator, C64};
use crate::darwinism::{reduced_state_dense, EnvironmentModel};
use crate::error::{QmonError, Result};
use crate::phases::analytic_phases;
use crate::weyl::Dimension;

/// `cos θ σ_x + sin θ σ_z`.
pub fn sigma_theta(theta: f64) -> Operator {
    let (s, c) = theta.sin_cos();
    Operator::from_rows(&[
        vec![C64::new(s, 0.0), C64::new(c, 0.0)],
        vec![C64::new(c, 0.0), C64::new(-s, 0.0)],
    ])
    .expect("finite angle")
}

/// Controlled-`σ_θ` on control ⊗ target.
pub fn c_maybe(theta: f64) -> Operator {
    let off = tensor(&[Operator::basis_projector(2, 0), Operator::identity(2)]).expect("non-empty");
    let on = tensor(&[Operator::basis_projector(2, 1), sigma_theta(theta)]).expect("non-empty");
    &off + &on
}

pub fn cmaybe_strength(theta: f64) -> f64 {
    1.0 - theta.sin()
}

pub fn general_t_strength(theta: f64) -> f64 {
    1.0 - theta.cos()
}

/// `(1 - sin θ, 1 - cos θ)`.
pub fn compare_with_general_t(theta: f64) -> (f64, f64) {
    (cmaybe_strength(theta), general_t_strength(theta))
}

/// Couples qubit `A` of `ρ_AB` to one environment qubit in `|0⟩` through the
/// c-maybe gate and traces the environment out.
pub fn monitored_by_cmaybe(rho_ab: &Operator, theta: f64, d_b: usize) -> Result<Operator> {
    if d_b == 0 {
        return Err(QmonError::InvalidLayout("bystander dimension must be positive".into()));
    }
    if rho_ab.dim() != 2 * d_b {
        return Err(QmonError::DimensionMismatch {
            expected: 2 * d_b,
            found: rho_ab.dim(),
        });
    }
    rho_ab.validate_density()?;
    let layout = DimensionLayout::new(vec![2, d_b, 2])?;
    let omega = tensor(&[rho_ab.clone(), Operator::basis_projector(2, 0)])?;
    let evolved = conjugate_local(&omega, &layout, &[0, 2], &c_maybe(theta))?;
    partial_trace(&evolved, &layout, &[0, 1])
}

/// The general `d = 2` construction at `π/2 - θ` applied to `ρ_AB`.
pub fn monitored_by_general_t(rho_ab: &Operator, theta: f64, d_b: usize) -> Result<Operator> {
    let phases = analytic_phases(Dimension::new(2)?, FRAC_PI_2 - theta);
    let model = EnvironmentModel::new(phases, 1, d_b)?;
    reduced_state_dense(rho_ab, &model, 0)
}

/// Largest trace distance between the two constructions over `states`.
pub fn channel_distance(theta: f64, states: &[Operator], d_b: usize) -> Result<f64> {
    states.iter().try_fold(0.0_f64, |worst, rho| {
        let a = monitored_by_cmaybe(rho, theta, d_b)?;
        let b = monitored_by_general_t(rho, theta, d_b)?;
        Ok(worst.max(trace_distance(&a, &b)?))
    })
}
