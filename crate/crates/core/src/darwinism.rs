//! System–environment dynamics under repeated noisy-CNOT interactions.
//!
//! The system `S = A ⊗ B` interacts in turn with `n` environment qudits, each
//! prepared in `|0⟩`, through `U_{SE_k} = Σ_j P_j ⊗ T^j` with `P_j = A_j ⊗ 1_B`.
//! The global state is
//!
//! ```text
//! Ω' = Σ_{ij} P_i ρ P_j ⊗ ⊗_k T^i|0⟩⟨0|(T^j)†
//! ```
//!
//! Two backends compute reduced states: a dense one that applies every gate
//! to the full density matrix (bounded by a dimension cap), and a structured
//! one that writes the reduced state directly from the closed-form vacuum
//! overlaps. The dense path serves as the oracle for the structured one.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{conjugate_local, partial_trace, DimensionLayout, Operator, C64};
use crate::error::{QmonError, Result};
use crate::monitoring::{accessible_info, irreality, mutual_information, weight_blocks, ObservableBasis};
use crate::observable::{build_t, vacuum_overlap, PhaseVector, UnitaryObservable};
use crate::output::fmt_float;
use crate::phases::eta_nominal;

/// Default bound on the total dimension handled by the dense backend.
pub const DEFAULT_DIM_CAP: usize = 4096;
const GATE_UNITARITY_TOL: f64 = 1e-9;

/// Homogeneous environment of `n` qudits sharing one phase vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentModel {
    phases: PhaseVector,
    n: usize,
    d_b: usize,
    basis: ObservableBasis,
    dim_cap: usize,
}

impl EnvironmentModel {
    /// Model measuring `A` in the computational basis.
    pub fn new(phases: PhaseVector, n: usize, d_b: usize) -> Result<Self> {
        if d_b == 0 {
            return Err(QmonError::InvalidLayout("bystander dimension must be positive".into()));
        }
        let basis = ObservableBasis::computational(phases.dim());
        Ok(Self {
            phases,
            n,
            d_b,
            basis,
            dim_cap: DEFAULT_DIM_CAP,
        })
    }

    pub fn with_basis(mut self, basis: ObservableBasis) -> Result<Self> {
        if basis.d() != self.d() {
            return Err(QmonError::InvalidBasis(format!(
                "basis has {} outcomes, environment qudits have dimension {}",
                basis.d(),
                self.d()
            )));
        }
        self.basis = basis;
        Ok(self)
    }

    pub fn with_dim_cap(mut self, cap: usize) -> Self {
        self.dim_cap = cap;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn phases(&self) -> &PhaseVector {
        &self.phases
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.phases.d()
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn basis(&self) -> &ObservableBasis {
        &self.basis
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    /// Layout `[d, d_B, d, …, d]` with `m` environment factors.
    pub fn layout(&self, m: usize) -> DimensionLayout {
        let mut dims = vec![self.d(), self.d_b];
        dims.extend(std::iter::repeat_n(self.d(), m));
        DimensionLayout::new(dims).expect("positive dimensions")
    }

    pub fn system_layout(&self) -> DimensionLayout {
        self.layout(0)
    }

    /// Total dimension with `m` environment qudits, `None` on overflow.
    pub fn total_dim(&self, m: usize) -> Option<usize> {
        (0..m).try_fold(self.d() * self.d_b, |acc, _| acc.checked_mul(self.d()))
    }

    fn check_cap(&self, m: usize) -> Result<usize> {
        match self.total_dim(m) {
            Some(dim) if dim <= self.dim_cap => Ok(dim),
            Some(dim) => Err(QmonError::DimensionCapExceeded { dim, cap: self.dim_cap }),
            None => Err(QmonError::DimensionCapExceeded {
                dim: usize::MAX,
                cap: self.dim_cap,
            }),
        }
    }

    fn check_state(&self, rho_ab: &Operator) -> Result<()> {
        let expected = self.d() * self.d_b;
        if rho_ab.dim() != expected {
            return Err(QmonError::DimensionMismatch {
                expected,
                found: rho_ab.dim(),
            });
        }
        rho_ab.validate_density()
    }

    fn observable(&self) -> Result<UnitaryObservable> {
        build_t(&self.phases)
    }
}

/// `U = Σ_j P_j ⊗ T^j` on `A ⊗ B ⊗ E_i`.
pub fn noisy_cnot(phases: &PhaseVector, basis: &ObservableBasis, d_b: usize) -> Result<Operator> {
    let d = phases.d();
    if basis.d() != d {
        return Err(QmonError::InvalidBasis(format!(
            "basis has {} outcomes, T has dimension {d}",
            basis.d()
        )));
    }
    let t = build_t(phases)?;
    let id_b = Operator::identity(d_b);
    let mut u = Operator::zeros(d * d_b * d);
    for (j, proj) in basis.projectors().into_iter().enumerate() {
        let term = crate::algebra::tensor(&[proj, id_b.clone(), t.power(j as i64)])?;
        u = &u + &term;
    }
    let residual = u.unitarity_residual();
    if residual > GATE_UNITARITY_TOL {
        return Err(QmonError::NonUnitary(residual));
    }
    Ok(u)
}

/// `ρ_AB ⊗ |0⟩⟨0|^{⊗n}` evolved by `U_{SE_n} ⋯ U_{SE_1}`, gate by gate.
pub fn evolve_dense(rho_ab: &Operator, model: &EnvironmentModel) -> Result<Operator> {
    model.check_state(rho_ab)?;
    let dim = model.check_cap(model.n)?;
    let env_dim = dim / rho_ab.dim();
    let m = rho_ab.matrix();
    let mut omega = Operator::from_fn(dim, |r, c| {
        if r % env_dim == 0 && c % env_dim == 0 {
            m[(r / env_dim, c / env_dim)]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    if model.n == 0 {
        return Ok(omega);
    }
    let gate = noisy_cnot(&model.phases, &model.basis, model.d_b)?;
    let layout = model.layout(model.n);
    for k in 0..model.n {
        omega = conjugate_local(&omega, &layout, &[0, 1, 2 + k], &gate)?;
    }
    Ok(omega)
}

/// Reduced state on `S` and the first `m` environment qudits, taken from the
/// dense evolution.
pub fn reduced_state_dense(rho_ab: &Operator, model: &EnvironmentModel, m: usize) -> Result<Operator> {
    if m > model.n {
        return Err(QmonError::FragmentOutOfRange { m, n: model.n });
    }
    let omega = evolve_dense(rho_ab, model)?;
    let keep: Vec<usize> = (0..2 + m).collect();
    partial_trace(&omega, &model.layout(model.n), &keep)
}

/// Reduced state on `S ⊗ F_m` from the closed form
/// `Σ_{ij} P_i ρ P_j · ⟨0|(T^j)†T^i|0⟩^{n-m} ⊗ ⊗_{k≤m} T^i|0⟩⟨0|(T^j)†`.
pub fn reduced_state_structured(rho_ab: &Operator, model: &EnvironmentModel, m: usize) -> Result<Operator> {
    if m > model.n {
        return Err(QmonError::FragmentOutOfRange { m, n: model.n });
    }
    model.check_state(rho_ab)?;
    let dim = model.check_cap(m)?;
    let d = model.d();
    let traced = u32::try_from(model.n - m).map_err(|_| QmonError::InvalidArgument("environment too large".into()))?;
    let overlap: Vec<Vec<C64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| vacuum_overlap(&model.phases, i as i64, j as i64).powu(traced))
                .collect()
        })
        .collect();
    if m == 0 {
        return weight_blocks(rho_ab, &model.basis, &model.system_layout(), |i, j| overlap[i][j]);
    }

    let t = model.observable()?;
    let vac: Vec<Vec<C64>> = (0..d).map(|i| t.vacuum_image(i as i64)).collect();
    let env_dim = dim / rho_ab.dim();
    // amp[a][e] = Π_k ⟨e_k|T^a|0⟩ over the m fragment digits of e
    let amp: Vec<Vec<C64>> = (0..d)
        .map(|a| {
            (0..env_dim)
                .map(|mut e| {
                    let mut prod = C64::new(1.0, 0.0);
                    for _ in 0..m {
                        prod *= vac[a][e % d];
                        e /= d;
                    }
                    prod
                })
                .collect()
        })
        .collect();

    let sys_layout = model.system_layout();
    let w = model.basis.change_of_basis();
    let rotated = if model.basis.is_computational() {
        rho_ab.clone()
    } else {
        conjugate_local(rho_ab, &sys_layout, &[0], &w.adjoint())?
    };
    let rm = rotated.matrix();
    let d_b = model.d_b;
    let out = Operator::from_fn(dim, |r, c| {
        let (sr, er) = (r / env_dim, r % env_dim);
        let (sc, ec) = (c / env_dim, c % env_dim);
        let (ar, ac) = (sr / d_b, sc / d_b);
        rm[(sr, sc)] * overlap[ar][ac] * amp[ar][er] * amp[ac][ec].conj()
    });
    if model.basis.is_computational() {
        Ok(out)
    } else {
        conjugate_local(&out, &model.layout(m), &[0], &w)
    }
}

/// `Tr_E Ω'`, which equals `M_A^{1-η^n}(ρ_AB)` when the phases solve the
/// constraint system. Cost does not grow with `n`.
pub fn system_state_after(rho_ab: &Operator, model: &EnvironmentModel) -> Result<Operator> {
    reduced_state_structured(rho_ab, model, 0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Dense,
    Structured,
    #[default]
    Auto,
}

impl FromStr for Backend {
    type Err = QmonError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(Self::Dense),
            "structured" => Ok(Self::Structured),
            "auto" => Ok(Self::Auto),
            other => Err(QmonError::InvalidArgument(format!("unknown backend {other:?}"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dense => "dense",
            Self::Structured => "structured",
            Self::Auto => "auto",
        })
    }
}

/// Mutual information between the system and growing environment fragments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FragmentProfile {
    pub m_values: Vec<usize>,
    /// `I(S:F_m)` in bits, one per entry of `m_values`.
    pub mutual_info: Vec<f64>,
    /// Irreality of `Tr_E Ω'` after all `n` interactions.
    pub irreality_after: f64,
    /// `1 - η^n` with `η` read off the phases.
    pub effective_epsilon: f64,
    pub backend: Backend,
}

impl FragmentProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,mutual_info_bits,irreality_bits\n");
        for (m, i) in self.m_values.iter().zip(&self.mutual_info) {
            out.push_str(&format!("{m},{},{}\n", fmt_float(*i), fmt_float(self.irreality_after)));
        }
        out
    }
}

/// `I(S:F_m)` for `m = 0 … m_max`.
pub fn mutual_info_profile(
    rho_ab: &Operator,
    model: &EnvironmentModel,
    m_max: usize,
    backend: Backend,
) -> Result<FragmentProfile> {
    if m_max > model.n {
        return Err(QmonError::FragmentOutOfRange { m: m_max, n: model.n });
    }
    model.check_state(rho_ab)?;
    let backend = match backend {
        Backend::Auto if model.check_cap(model.n).is_ok() => Backend::Dense,
        Backend::Auto => Backend::Structured,
        b => b,
    };
    let fragments: Vec<Operator> = match backend {
        Backend::Dense => {
            let omega = evolve_dense(rho_ab, model)?;
            let layout = model.layout(model.n);
            (0..=m_max)
                .into_par_iter()
                .map(|m| partial_trace(&omega, &layout, &(0..2 + m).collect::<Vec<_>>()))
                .collect::<Result<_>>()?
        }
        _ => {
            model.check_cap(m_max)?;
            (0..=m_max)
                .into_par_iter()
                .map(|m| reduced_state_structured(rho_ab, model, m))
                .collect::<Result<_>>()?
        }
    };
    let mutual_info = fragments
        .par_iter()
        .enumerate()
        .map(|(m, state)| {
            if m == 0 {
                return Ok(0.0);
            }
            let env: Vec<usize> = (2..2 + m).collect();
            mutual_information(state, &model.layout(m), &[0, 1], &env)
        })
        .collect::<Result<Vec<f64>>>()?;
    let system = &fragments[0];
    let n = i32::try_from(model.n).unwrap_or(i32::MAX);
    Ok(FragmentProfile {
        m_values: (0..=m_max).collect(),
        mutual_info,
        irreality_after: irreality(system, &model.basis, &model.system_layout())?,
        effective_epsilon: 1.0 - eta_nominal(&model.phases).powi(n),
        backend,
    })
}

/// Both sides of `Δ𝕴_A = Δ(I_{S:E} + I_E)` for one environment qudit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoFlow {
    /// `𝕴_A(ρ_S) - 𝕴_A(Tr_E Ω')`
    pub delta_irreality: f64,
    /// `[I_{S:E} + I_E](Ω') - [I_{S:E} + I_E](Ω)`
    pub delta_info: f64,
}

impl InfoFlow {
    pub fn gap(&self) -> f64 {
        (self.delta_irreality - self.delta_info).abs()
    }
}

pub fn info_flow_check(rho_ab: &Operator, model: &EnvironmentModel) -> Result<InfoFlow> {
    if model.n != 1 {
        return Err(QmonError::InvalidArgument(format!(
            "information-flow check needs exactly one environment qudit, got {}",
            model.n
        )));
    }
    model.check_state(rho_ab)?;
    let layout = model.layout(1);
    let sys = model.system_layout();
    let initial = evolve_dense(rho_ab, &model.clone().with_n(0))?;
    let omega_in = crate::algebra::tensor(&[initial, Operator::basis_projector(model.d(), 0)])?;
    let omega_out = evolve_dense(rho_ab, model)?;

    let flow = |omega: &Operator| -> Result<f64> {
        let env = partial_trace(omega, &layout, &[2])?;
        Ok(mutual_information(omega, &layout, &[0, 1], &[2])? + accessible_info(&env)?)
    };
    let sys_out = partial_trace(&omega_out, &layout, &[0, 1])?;
    let delta_irreality = irreality(rho_ab, &model.basis, &sys)? - irreality(&sys_out, &model.basis, &sys)?;
    Ok(InfoFlow {
        delta_irreality,
        delta_info: flow(&omega_out)? - flow(&omega_in)?,
    })
}
