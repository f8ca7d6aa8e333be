//! Phase-parametrized unitary observables `T = Σ_k α_k Z X^k`.
//!
//! A [`PhaseVector`] holds `d` phases `φ_0 … φ_{d-1}` summing to zero; the
//! coefficients are `α_k = (1/d) Σ_l ω^{lk} e^{iφ_l}`. The resulting `T` is
//! unitary with `T^d = 1`, and its vacuum overlaps `⟨0|(T^j)† T^i|0⟩` have a
//! closed form in the phases alone (see [`vacuum_overlap`]).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{Operator, C64, DENSITY_TOL};
use crate::error::{QmonError, Result};
use crate::weyl::{clock, modulo, omega_pow, shift_pow, Dimension};

/// Tolerance on the zero-sum constraint.
pub const PHASE_SUM_TOL: f64 = 1e-10;
/// Largest unitarity residual accepted when realizing `T`.
pub const UNITARITY_TOL: f64 = 1e-8;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// The `d` phases defining a unitary observable.
///
/// Phases are stored on the `(-π, π]` branch. Because only `e^{iφ_l}` enters
/// any derived quantity, the zero-sum constraint is checked modulo `2π`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PhaseVector {
    phases: Vec<f64>,
}

impl PhaseVector {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        Dimension::new(phases.len())?;
        if phases.iter().any(|x| !x.is_finite()) {
            return Err(QmonError::NonFinite);
        }
        let deviation = wrap_angle(phases.iter().sum::<f64>()).abs();
        if deviation > PHASE_SUM_TOL {
            return Err(QmonError::PhaseSumViolation(deviation));
        }
        Ok(Self {
            phases: phases.into_iter().map(wrap_angle).collect(),
        })
    }

    /// Builds from the `d - 1` free phases; the last is minus their sum.
    pub fn from_free(free: &[f64]) -> Result<Self> {
        let mut phases = free.to_vec();
        phases.push(-free.iter().sum::<f64>());
        Self::new(phases)
    }

    pub fn zeros(d: Dimension) -> Self {
        Self {
            phases: vec![0.0; d.get()],
        }
    }

    pub fn dim(&self) -> Dimension {
        Dimension::new(self.phases.len()).expect("validated at construction")
    }

    pub fn d(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Phase with cyclic index `[l]_d`.
    pub fn at(&self, l: i64) -> f64 {
        self.phases[modulo(l, self.d())]
    }

    /// `Σ_{m=0}^{len-1} φ_{[start+m]_d}`.
    pub fn window_sum(&self, start: usize, len: usize) -> f64 {
        (0..len).map(|m| self.phases[(start + m) % self.d()]).sum()
    }
}

impl TryFrom<Vec<f64>> for PhaseVector {
    type Error = QmonError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PhaseVector> for Vec<f64> {
    fn from(p: PhaseVector) -> Vec<f64> {
        p.phases
    }
}

/// `α_k = (1/d) Σ_l ω^{lk} e^{iφ_l}` for `k = 0 … d-1`.
pub fn alphas_from_phases(p: &PhaseVector) -> Vec<C64> {
    let d = p.dim();
    let n = d.get();
    (0..n)
        .map(|k| {
            let s: C64 = (0..n)
                .map(|l| omega_pow(d, (l * k) as i64) * C64::from_polar(1.0, p.phases[l]))
                .sum();
            s / n as f64
        })
        .collect()
}

/// A realized unitary observable together with the phases that define it.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryObservable {
    phases: PhaseVector,
    matrix: Operator,
}

impl UnitaryObservable {
    pub fn phases(&self) -> &PhaseVector {
        &self.phases
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn d(&self) -> usize {
        self.phases.d()
    }

    /// `T^j` for any integer `j`, reduced mod `d` first (`T^d = 1`).
    pub fn power(&self, j: i64) -> Operator {
        self.matrix.pow(modulo(j, self.d()))
    }

    /// `T^j |0⟩` as a column vector.
    pub fn vacuum_image(&self, j: i64) -> Vec<C64> {
        let t = self.power(j);
        (0..self.d()).map(|r| t.get(r, 0)).collect()
    }
}

/// Realizes `T = Σ_k α_k Z X^k`.
pub fn build_t(p: &PhaseVector) -> Result<UnitaryObservable> {
    let d = p.dim();
    let z = clock(d);
    let alphas = alphas_from_phases(p);
    let mut t = Operator::zeros(d.get());
    for (k, &a) in alphas.iter().enumerate() {
        let term = (&z * &shift_pow(d, k as i64)).scale(a);
        t = &t + &term;
    }
    let residual = t.unitarity_residual();
    if residual > UNITARITY_TOL {
        return Err(QmonError::NonUnitary(residual));
    }
    Ok(UnitaryObservable {
        phases: p.clone(),
        matrix: t,
    })
}

/// Closed form of `⟨0|(T^j)† T^i|0⟩ = (1/d) Σ_q exp(i Σ_{m=0}^{[i-j]_d - 1} φ_{[q+m]_d})`.
pub fn vacuum_overlap(p: &PhaseVector, i: i64, j: i64) -> C64 {
    let n = p.d();
    let len = modulo(i - j, n);
    if len == 0 {
        return C64::new(1.0, 0.0);
    }
    let s: C64 = (0..n).map(|q| C64::from_polar(1.0, p.window_sum(q, len))).sum();
    s / n as f64
}

fn check_povm(elements: &[Operator], d: usize) -> Result<()> {
    if elements.len() != d {
        return Err(QmonError::InvalidPovm(format!(
            "expected {d} elements, got {}",
            elements.len()
        )));
    }
    let mut sum = Operator::zeros(d);
    for (a, m) in elements.iter().enumerate() {
        if m.dim() != d {
            return Err(QmonError::InvalidPovm(format!("element {a} has dimension {}", m.dim())));
        }
        if m.hermiticity_residual() > DENSITY_TOL {
            return Err(QmonError::InvalidPovm(format!("element {a} is not Hermitian")));
        }
        if let Some(&low) = m.hermitian_eigenvalues().first() {
            if low < -DENSITY_TOL {
                return Err(QmonError::InvalidPovm(format!("element {a} has eigenvalue {low:e}")));
            }
        }
        sum = &sum + m;
    }
    if sum.max_abs_diff(&Operator::identity(d)) > DENSITY_TOL {
        return Err(QmonError::InvalidPovm("elements do not sum to identity".into()));
    }
    Ok(())
}

/// Discrete Fourier transform of a `d`-outcome POVM: `T^{(i)} = Σ_a ω^{ia} M_a`.
pub fn generalized_observables(povm: &[Operator]) -> Result<Vec<Operator>> {
    let d = povm.first().map(Operator::dim).unwrap_or(0);
    let dd = Dimension::new(d).map_err(|_| QmonError::InvalidPovm("need at least 2 outcomes".into()))?;
    check_povm(povm, d)?;
    Ok((0..d)
        .map(|i| {
            povm.iter().enumerate().fold(Operator::zeros(d), |acc, (a, m)| {
                &acc + &m.scale(omega_pow(dd, (i * a) as i64))
            })
        })
        .collect())
}

/// Inverse transform `M_a = (1/d) Σ_i ω^{-ia} T^{(i)}`.
pub fn povm_from_generalized(observables: &[Operator]) -> Result<Vec<Operator>> {
    let d = observables.len();
    let dd = Dimension::new(d).map_err(|_| QmonError::InvalidPovm("need at least 2 outcomes".into()))?;
    if observables.iter().any(|t| t.dim() != d) {
        return Err(QmonError::InvalidPovm(
            "observable dimension must equal outcome count".into(),
        ));
    }
    let povm: Vec<Operator> = (0..d)
        .map(|a| {
            observables
                .iter()
                .enumerate()
                .fold(Operator::zeros(d), |acc, (i, t)| {
                    &acc + &t.scale(omega_pow(dd, -((i * a) as i64)))
                })
                .scale_real(1.0 / d as f64)
        })
        .collect();
    check_povm(&povm, d)?;
    Ok(povm)
}

/// Projective measurement whose unitary observable is `t`: `M_a = (1/d) Σ_i ω^{-ia} T^i`.
pub fn povm_from_t(t: &UnitaryObservable) -> Result<Vec<Operator>> {
    let powers: Vec<Operator> = (0..t.d() as i64).map(|i| t.power(i)).collect();
    povm_from_generalized(&powers)
}
