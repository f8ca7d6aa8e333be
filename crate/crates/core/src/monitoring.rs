//! Channels and quantifiers acting on the monitored system alone.
//!
//! All maps act on the first factor `A` of a [`DimensionLayout`]; the other
//! factors (the bystander `B`, environment qudits) are carried along with
//! identity action. Projectors `A_a` come from an [`ObservableBasis`].

use serde::{Deserialize, Serialize};

use crate::algebra::{conjugate_local, partial_trace, von_neumann_entropy, DimensionLayout, Operator, C64, ONE, ZERO};
use crate::error::{QmonError, Result};
use crate::weyl::Dimension;

/// Slack below zero tolerated on quantities that are non-negative in exact
/// arithmetic.
pub const NONNEG_SLACK: f64 = 1e-9;
const BASIS_TOL: f64 = 1e-10;

pub(crate) fn clamp_nonneg(x: f64, what: &str) -> Result<f64> {
    if x >= 0.0 {
        return Ok(x);
    }
    if x < -NONNEG_SLACK {
        return Err(QmonError::NegativeQuantity(x));
    }
    log::debug!("clamping {what} = {x:e} to zero");
    Ok(0.0)
}

/// Rank-one orthogonal projectors `A_a` resolving the identity on `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableBasis {
    vectors: Vec<Vec<C64>>,
    labels: Option<Vec<f64>>,
    computational: bool,
}

impl ObservableBasis {
    pub fn computational(d: Dimension) -> Self {
        let n = d.get();
        let vectors = (0..n)
            .map(|k| (0..n).map(|r| if r == k { ONE } else { ZERO }).collect())
            .collect();
        Self {
            vectors,
            labels: None,
            computational: true,
        }
    }

    /// Basis from orthonormal eigenvectors.
    pub fn from_vectors(vectors: Vec<Vec<C64>>) -> Result<Self> {
        let n = vectors.len();
        Dimension::new(n).map_err(|_| QmonError::InvalidBasis("need at least two vectors".into()))?;
        if vectors.iter().any(|v| v.len() != n) {
            return Err(QmonError::InvalidBasis("vector length must equal count".into()));
        }
        for a in 0..n {
            for b in 0..n {
                let ip: C64 = vectors[a].iter().zip(&vectors[b]).map(|(x, y)| x.conj() * y).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                if (ip - C64::new(expected, 0.0)).norm() > BASIS_TOL {
                    return Err(QmonError::InvalidBasis(format!("vectors {a}, {b} not orthonormal")));
                }
            }
        }
        Ok(Self {
            vectors,
            labels: None,
            computational: false,
        })
    }

    /// Basis from explicit projectors, checking `A_a A_{a'} = δ A_a` and `Σ A_a = 1`.
    pub fn from_projectors(projectors: &[Operator]) -> Result<Self> {
        let n = projectors.len();
        Dimension::new(n).map_err(|_| QmonError::InvalidBasis("need at least two projectors".into()))?;
        let mut sum = Operator::zeros(n);
        for (a, pa) in projectors.iter().enumerate() {
            if pa.dim() != n {
                return Err(QmonError::InvalidBasis(format!("projector {a} has wrong dimension")));
            }
            for (b, pb) in projectors.iter().enumerate() {
                let prod = pa * pb;
                let expected = if a == b { pa.clone() } else { Operator::zeros(n) };
                if prod.max_abs_diff(&expected) > BASIS_TOL {
                    return Err(QmonError::InvalidBasis(format!(
                        "projectors {a}, {b} not orthogonal idempotents"
                    )));
                }
            }
            if (pa.trace().re - 1.0).abs() > BASIS_TOL {
                return Err(QmonError::InvalidBasis(format!("projector {a} is not rank one")));
            }
            sum = &sum + pa;
        }
        if sum.max_abs_diff(&Operator::identity(n)) > BASIS_TOL {
            return Err(QmonError::InvalidBasis("projectors do not sum to identity".into()));
        }
        // Column of largest norm spans the range of a rank-one projector.
        let vectors = projectors
            .iter()
            .map(|p| {
                let col = (0..n)
                    .max_by(|&x, &y| p.get(x, x).re.total_cmp(&p.get(y, y).re))
                    .expect("non-empty");
                let norm = p.get(col, col).re.sqrt();
                (0..n).map(|r| p.get(r, col) / norm).collect()
            })
            .collect();
        Self::from_vectors(vectors)
    }

    /// Attaches eigenvalue labels `a`. They do not enter any channel.
    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != self.d() {
            return Err(QmonError::InvalidBasis("one label per projector".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[f64]> {
        self.labels.as_deref()
    }

    pub fn d(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, a: usize) -> &[C64] {
        &self.vectors[a]
    }

    pub fn projectors(&self) -> Vec<Operator> {
        self.vectors.iter().map(|v| Operator::projector(v)).collect()
    }

    /// Unitary whose columns are the basis vectors.
    pub fn change_of_basis(&self) -> Operator {
        let n = self.d();
        Operator::from_fn(n, |r, c| self.vectors[c][r])
    }

    pub fn is_computational(&self) -> bool {
        self.computational
    }
}

/// Observable basis plus monitoring strength `ε ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonitoringSpec {
    basis: ObservableBasis,
    epsilon: f64,
}

impl MonitoringSpec {
    pub fn new(basis: ObservableBasis, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(QmonError::EpsilonOutOfRange(epsilon));
        }
        Ok(Self { basis, epsilon })
    }

    pub fn basis(&self) -> &ObservableBasis {
        &self.basis
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// `Σ_{ij} w(i, j) P_i ρ P_j` with `P_i = A_i ⊗ 1`.
pub(crate) fn weight_blocks(
    state: &Operator,
    basis: &ObservableBasis,
    layout: &DimensionLayout,
    weight: impl Fn(usize, usize) -> C64,
) -> Result<Operator> {
    layout.check(state)?;
    if layout.dims()[0] != basis.d() {
        return Err(QmonError::InvalidBasis(format!(
            "basis has {} outcomes but factor A has dimension {}",
            basis.d(),
            layout.dims()[0]
        )));
    }
    let rest = state.dim() / basis.d();
    let w = basis.change_of_basis();
    let rotated = if basis.is_computational() {
        state.clone()
    } else {
        conjugate_local(state, layout, &[0], &w.adjoint())?
    };
    let m = rotated.matrix();
    let weighted = Operator::from_fn(state.dim(), |r, c| m[(r, c)] * weight(r / rest, c / rest));
    if basis.is_computational() {
        Ok(weighted)
    } else {
        conjugate_local(&weighted, layout, &[0], &w)
    }
}

/// Non-selective projective measurement `Φ_A(ρ) = Σ_a P_a ρ P_a`.
pub fn dephase(state: &Operator, basis: &ObservableBasis, layout: &DimensionLayout) -> Result<Operator> {
    weight_blocks(state, basis, layout, |i, j| if i == j { ONE } else { ZERO })
}

/// `M_A^ε(ρ) = (1 - ε) ρ + ε Φ_A(ρ)`.
pub fn monitor(state: &Operator, spec: &MonitoringSpec, layout: &DimensionLayout) -> Result<Operator> {
    let keep = C64::new(1.0 - spec.epsilon, 0.0);
    weight_blocks(state, &spec.basis, layout, |i, j| if i == j { ONE } else { keep })
}

/// Strength of `n` composed monitorings: `1 - (1 - ε)^n`.
pub fn effective_strength(epsilon: f64, n: u32) -> f64 {
    1.0 - (1.0 - epsilon).powi(n as i32)
}

/// Applies [`monitor`] `n` times in sequence.
pub fn monitor_repeated(state: &Operator, spec: &MonitoringSpec, n: u32, layout: &DimensionLayout) -> Result<Operator> {
    layout.check(state)?;
    let mut out = state.clone();
    for _ in 0..n {
        out = monitor(&out, spec, layout)?;
    }
    Ok(out)
}

/// Irreality `S(Φ_A(ρ)) - S(ρ)` in bits.
pub fn irreality(state: &Operator, basis: &ObservableBasis, layout: &DimensionLayout) -> Result<f64> {
    let s = von_neumann_entropy(state)?;
    let sd = von_neumann_entropy(&dephase(state, basis, layout)?)?;
    clamp_nonneg(sd - s, "irreality")
}

/// Local coherence and non-optimized discord parts of the irreality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrrealityParts {
    /// `𝕴_A(Tr_B ρ)`
    pub coherence: f64,
    /// `I_{A:B}(ρ) - I_{A:B}(Φ_A(ρ))`
    pub discord_like: f64,
}

impl IrrealityParts {
    pub fn total(&self) -> f64 {
        self.coherence + self.discord_like
    }
}

pub fn decompose_irreality(
    state: &Operator,
    basis: &ObservableBasis,
    layout: &DimensionLayout,
) -> Result<IrrealityParts> {
    if layout.len() != 2 {
        return Err(QmonError::InvalidLayout(format!(
            "irreality decomposition needs a bipartite layout, got {} factors",
            layout.len()
        )));
    }
    layout.check(state)?;
    let reduced = partial_trace(state, layout, &[0])?;
    let local = DimensionLayout::new(vec![layout.dims()[0]])?;
    let coherence = irreality(&reduced, basis, &local)?;
    let before = mutual_information(state, layout, &[0], &[1])?;
    let after = mutual_information(&dephase(state, basis, layout)?, layout, &[0], &[1])?;
    Ok(IrrealityParts {
        coherence,
        discord_like: clamp_nonneg(before - after, "discord")?,
    })
}

/// Accessible information `log₂ d - S(ρ)` in bits.
pub fn accessible_info(state: &Operator) -> Result<f64> {
    let s = von_neumann_entropy(state)?;
    Ok(((state.dim() as f64).log2() - s).max(0.0))
}

/// `S(ρ_X) + S(ρ_Y) - S(ρ_XY)` for a split of the layout factors into `X`, `Y`.
pub fn mutual_information(
    state: &Operator,
    layout: &DimensionLayout,
    group_x: &[usize],
    group_y: &[usize],
) -> Result<f64> {
    layout.check(state)?;
    if group_x.is_empty() || group_y.is_empty() {
        return Err(QmonError::InvalidPartition("both groups must be nonempty".into()));
    }
    let mut all: Vec<usize> = group_x.iter().chain(group_y).copied().collect();
    all.sort_unstable();
    if all != (0..layout.len()).collect::<Vec<_>>() {
        return Err(QmonError::InvalidPartition(format!(
            "groups {group_x:?} and {group_y:?} do not partition {} factors",
            layout.len()
        )));
    }
    let sx = von_neumann_entropy(&partial_trace(state, layout, group_x)?)?;
    let sy = von_neumann_entropy(&partial_trace(state, layout, group_y)?)?;
    let sxy = von_neumann_entropy(state)?;
    clamp_nonneg(sx + sy - sxy, "mutual information")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{random_density, random_unitary, tensor};

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    fn layout(dims: &[usize]) -> DimensionLayout {
        DimensionLayout::new(dims.to_vec()).unwrap()
    }

    fn plus() -> Operator {
        Operator::from_fn(2, |_, _| C64::new(0.5, 0.0))
    }

    fn bell() -> Operator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Operator::projector(&[C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)])
    }

    fn zbasis(d: usize) -> ObservableBasis {
        ObservableBasis::computational(dim(d))
    }

    #[test]
    fn dephase_plus_is_mixed() {
        let out = dephase(&plus(), &zbasis(2), &layout(&[2])).unwrap();
        assert!(out.max_abs_diff(&Operator::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn dephase_fixes_reality_states() {
        let rho = Operator::real_diagonal(&[0.2, 0.5, 0.3]);
        assert_eq!(dephase(&rho, &zbasis(3), &layout(&[3])).unwrap(), rho);
    }

    #[test]
    fn dephase_bell() {
        let out = dephase(&bell(), &zbasis(2), &layout(&[2, 2])).unwrap();
        assert!(out.max_abs_diff(&Operator::real_diagonal(&[0.5, 0.0, 0.0, 0.5])) < 1e-15);
    }

    #[test]
    fn dephase_layout_mismatch() {
        let rho = Operator::identity(6).scale_real(1.0 / 6.0);
        assert!(matches!(
            dephase(&rho, &zbasis(2), &layout(&[3, 2])),
            Err(QmonError::InvalidBasis(_))
        ));
        assert!(dephase(&rho, &zbasis(2), &layout(&[2, 2])).is_err());
    }

    #[test]
    fn monitor_endpoints_and_interior() {
        let rho = random_density(6, 3, 1).unwrap();
        let l = layout(&[3, 2]);
        let s0 = MonitoringSpec::new(zbasis(3), 0.0).unwrap();
        assert!(monitor(&rho, &s0, &l).unwrap().max_abs_diff(&rho) < 1e-15);
        let s1 = MonitoringSpec::new(zbasis(3), 1.0).unwrap();
        let d = dephase(&rho, &zbasis(3), &l).unwrap();
        assert!(monitor(&rho, &s1, &l).unwrap().max_abs_diff(&d) < 1e-15);

        let s = MonitoringSpec::new(zbasis(2), 0.4).unwrap();
        let out = monitor(&plus(), &s, &layout(&[2])).unwrap();
        assert!((out.get(0, 1).re - 0.3).abs() < 1e-15);
        assert!((out.get(0, 0).re - 0.5).abs() < 1e-15);
        assert_eq!(
            MonitoringSpec::new(zbasis(2), 1.2),
            Err(QmonError::EpsilonOutOfRange(1.2))
        );
    }

    #[test]
    fn strength_arithmetic() {
        assert!((effective_strength(0.3, 3) - 0.657).abs() < 1e-15);
        assert_eq!(effective_strength(0.7, 0), 0.0);
    }

    #[test]
    fn repeated_monitoring_closed_form() {
        let rho = random_density(6, 6, 12).unwrap();
        let l = layout(&[3, 2]);
        let spec = MonitoringSpec::new(zbasis(3), 0.5).unwrap();
        let composed = monitor_repeated(&rho, &spec, 4, &l).unwrap();
        let single = MonitoringSpec::new(zbasis(3), effective_strength(0.5, 4)).unwrap();
        let closed = monitor(&rho, &single, &l).unwrap();
        assert!(crate::algebra::trace_distance(&composed, &closed).unwrap() < 1e-12);
        assert_eq!(monitor_repeated(&rho, &spec, 0, &l).unwrap(), rho);
    }

    #[test]
    fn irreality_examples() {
        let l = layout(&[2]);
        assert!((irreality(&plus(), &zbasis(2), &l).unwrap() - 1.0).abs() < 1e-12);
        let mixed = Operator::identity(4).scale_real(0.25);
        assert!(irreality(&mixed, &zbasis(4), &layout(&[4])).unwrap().abs() < 1e-12);
        let sigma = random_density(6, 4, 5).unwrap();
        let l2 = layout(&[2, 3]);
        let real = dephase(&sigma, &zbasis(2), &l2).unwrap();
        assert!(irreality(&real, &zbasis(2), &l2).unwrap().abs() < 1e-12);
        assert!(irreality(&Operator::identity(2), &zbasis(2), &l).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let sigma = random_density(2, 2, 3).unwrap();
        let prod = tensor(&[plus(), sigma]).unwrap();
        let l = layout(&[2, 2]);
        let parts = decompose_irreality(&prod, &zbasis(2), &l).unwrap();
        assert!(parts.discord_like.abs() < 1e-12);
        assert!((parts.coherence - 1.0).abs() < 1e-12);

        let parts = decompose_irreality(&bell(), &zbasis(2), &l).unwrap();
        assert!(parts.coherence.abs() < 1e-12);
        assert!((parts.discord_like - 1.0).abs() < 1e-12);

        let cc = Operator::real_diagonal(&[0.1, 0.2, 0.3, 0.4]);
        let parts = decompose_irreality(&cc, &zbasis(2), &l).unwrap();
        assert!(parts.coherence.abs() < 1e-12 && parts.discord_like.abs() < 1e-12);

        let tri = layout(&[2, 2, 1]);
        assert!(matches!(
            decompose_irreality(&bell(), &zbasis(2), &tri),
            Err(QmonError::InvalidLayout(_))
        ));
    }

    #[test]
    fn accessible_info_examples() {
        let pure = random_density(4, 1, 2).unwrap();
        assert!((accessible_info(&pure).unwrap() - 2.0).abs() < 1e-10);
        let mixed = Operator::identity(3).scale_real(1.0 / 3.0);
        assert!(accessible_info(&mixed).unwrap().abs() < 1e-12);
        let h = -(0.75f64 * 0.75f64.log2()) - 0.25 * 0.25f64.log2();
        let got = accessible_info(&Operator::real_diagonal(&[0.75, 0.25])).unwrap();
        assert!((got - (1.0 - h)).abs() < 1e-14);
        assert!((got - 0.188_721_875_540_867_2).abs() < 1e-12);
    }

    #[test]
    fn mutual_information_examples() {
        let l = layout(&[2, 2]);
        let prod = tensor(&[random_density(2, 2, 1).unwrap(), random_density(2, 1, 2).unwrap()]).unwrap();
        assert!(mutual_information(&prod, &l, &[0], &[1]).unwrap().abs() < 1e-10);
        assert!((mutual_information(&bell(), &l, &[0], &[1]).unwrap() - 2.0).abs() < 1e-10);
        let cc = Operator::real_diagonal(&[0.5, 0.0, 0.0, 0.5]);
        assert!((mutual_information(&cc, &l, &[1], &[0]).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            mutual_information(&cc, &l, &[0], &[]),
            Err(QmonError::InvalidPartition(_))
        ));
        assert!(mutual_information(&cc, &l, &[0], &[0]).is_err());
    }

    #[test]
    fn rotated_basis_matches_explicit_projectors() {
        let u = random_unitary(3, 9);
        let vectors: Vec<Vec<C64>> = (0..3).map(|c| (0..3).map(|r| u.get(r, c)).collect()).collect();
        let basis = ObservableBasis::from_vectors(vectors).unwrap();
        let l = layout(&[3, 2]);
        let rho = random_density(6, 6, 4).unwrap();
        let got = dephase(&rho, &basis, &l).unwrap();
        let mut expected = Operator::zeros(6);
        for p in basis.projectors() {
            let big = tensor(&[p, Operator::identity(2)]).unwrap();
            expected = &expected + &(&(&big * &rho) * &big);
        }
        assert!(got.max_abs_diff(&expected) < 1e-13);

        let again = ObservableBasis::from_projectors(&basis.projectors()).unwrap();
        assert!(dephase(&rho, &again, &l).unwrap().max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn basis_validation() {
        let bad = vec![Operator::basis_projector(2, 0), Operator::basis_projector(2, 0)];
        assert!(ObservableBasis::from_projectors(&bad).is_err());
        let rank2 = vec![Operator::identity(2), Operator::zeros(2)];
        assert!(ObservableBasis::from_projectors(&rank2).is_err());
        let basis = zbasis(3).with_labels(vec![-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(basis.labels(), Some(&[-1.0, 0.0, 1.0][..]));
        assert!(zbasis(2).with_labels(vec![1.0]).is_err());
    }
}
