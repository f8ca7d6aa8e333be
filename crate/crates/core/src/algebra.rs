//! Dense complex operators on finite tensor-product spaces.
//!
//! Every state, gate and observable in the crate is an [`Operator`]: a square
//! matrix of `Complex<f64>` entries. A [`DimensionLayout`] names the tensor
//! factors of the space an operator lives on; the leftmost factor is the
//! slowest-varying index (system `A`, then `B`, then environment qudits in
//! interaction order).
//!
//! Entropies are in bits.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{QmonError, Result};

pub type C64 = Complex<f64>;

/// Tolerance on Hermiticity and trace when a matrix is used as a density matrix.
pub const DENSITY_TOL: f64 = 1e-9;
/// Eigenvalues in `[-EIGEN_CLAMP, 0)` are treated as rounding and clamped to zero.
pub const EIGEN_CLAMP: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A dense square complex matrix.
#[derive(Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(QmonError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QmonError::NonFinite);
        }
        Ok(Self { m })
    }

    /// Builds from a list of rows. Fails on ragged or non-square input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(QmonError::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
    }

    pub(crate) fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            m: DMatrix::from_fn(dim, dim, f),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        let n = entries.len();
        Self::from_fn(n, |r, c| if r == c { entries[r] } else { ZERO })
    }

    pub fn real_diagonal(entries: &[f64]) -> Self {
        let e: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diagonal(&e)
    }

    /// `|v⟩⟨v|` for an (unnormalized) vector `v`.
    pub fn projector(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, |r, c| v[r] * v[c].conj())
    }

    /// `|k⟩⟨k|` in a `dim`-dimensional computational basis.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == k && c == k { ONE } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `self^k` by repeated multiplication.
    pub fn pow(&self, k: usize) -> Self {
        let mut out = Self::identity(self.dim());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - self†`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.m[(r, c)] - self.m[(c, r)].conj()).norm());
            }
        }
        worst
    }

    /// `max |U U† - 1|` over entries.
    pub fn unitarity_residual(&self) -> f64 {
        let prod = &self.m * self.m.adjoint();
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        prod.iter()
            .zip(id.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() <= tol
    }

    /// Checks Hermiticity and unit trace at [`DENSITY_TOL`].
    ///
    /// Positivity is checked lazily by the spectral routines.
    pub fn validate_density(&self) -> Result<()> {
        let h = self.hermiticity_residual();
        if h > DENSITY_TOL {
            return Err(QmonError::NotHermitian(h));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(QmonError::TraceNotOne(tr.re));
        }
        Ok(())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Eigenvalues of a density matrix with rounding negatives clamped to 0.
    pub fn density_spectrum(&self) -> Result<Vec<f64>> {
        self.validate_density()?;
        let mut ev = self.hermitian_eigenvalues();
        for x in ev.iter_mut() {
            if *x < 0.0 {
                if *x < -EIGEN_CLAMP {
                    return Err(QmonError::NegativeEigenvalue(*x));
                }
                *x = 0.0;
            }
        }
        Ok(ev)
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim(), self.dim())?;
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|c| {
                    let z = self.m[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m * &rhs.m }
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m + &rhs.m }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator { m: &self.m - &rhs.m }
    }
}

// JSON form: list of rows, each entry an `[re, im]` pair.
impl Serialize for Operator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.dim())
            .map(|r| {
                (0..self.dim())
                    .map(|c| [self.m[(r, c)].re, self.m[(r, c)].im])
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        Operator::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Ordered tensor-factor dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionLayout {
    dims: Vec<usize>,
}

impl DimensionLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(QmonError::InvalidLayout("no factors".into()));
        }
        if dims.contains(&0) {
            return Err(QmonError::InvalidLayout("zero-dimensional factor".into()));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn check(&self, op: &Operator) -> Result<()> {
        if self.total() != op.dim() {
            return Err(QmonError::DimensionMismatch {
                expected: self.total(),
                found: op.dim(),
            });
        }
        Ok(())
    }

    /// Offsets into the flat index contributed by every multi-index over `factors`.
    ///
    /// `factors` must be sorted ascending; the returned offsets enumerate the
    /// sub-multi-index with the leftmost listed factor slowest.
    pub(crate) fn offsets(&self, factors: &[usize]) -> Vec<usize> {
        let mut strides = vec![1usize; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        let mut out = vec![0usize];
        for &f in factors {
            let mut next = Vec::with_capacity(out.len() * self.dims[f]);
            for &base in &out {
                for digit in 0..self.dims[f] {
                    next.push(base + digit * strides[f]);
                }
            }
            out = next;
        }
        out
    }

    fn validate_subset(&self, factors: &[usize]) -> Result<Vec<usize>> {
        let mut sorted = factors.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != factors.len() {
            return Err(QmonError::InvalidLayout("repeated factor index".into()));
        }
        if let Some(&bad) = sorted.iter().find(|&&f| f >= self.dims.len()) {
            return Err(QmonError::InvalidLayout(format!(
                "factor {bad} out of range for {} factors",
                self.dims.len()
            )));
        }
        Ok(sorted)
    }

    fn complement(&self, sorted: &[usize]) -> Vec<usize> {
        (0..self.dims.len()).filter(|f| !sorted.contains(f)).collect()
    }
}

fn kron(a: &Operator, b: &Operator) -> Operator {
    let (da, db) = (a.dim(), b.dim());
    Operator::from_fn(da * db, |r, c| a.m[(r / db, c / db)] * b.m[(r % db, c % db)])
}

/// Kronecker product, leftmost factor most significant.
pub fn tensor(factors: &[Operator]) -> Result<Operator> {
    let (first, rest) = factors.split_first().ok_or(QmonError::EmptyFactors)?;
    Ok(rest.iter().fold(first.clone(), |acc, f| kron(&acc, f)))
}

/// Traces out every factor not listed in `keep`.
///
/// The result is ordered by ascending factor index regardless of the order
/// of `keep`.
pub fn partial_trace(state: &Operator, layout: &DimensionLayout, keep: &[usize]) -> Result<Operator> {
    layout.check(state)?;
    if keep.is_empty() {
        return Err(QmonError::EmptyKeepSet);
    }
    let keep = layout.validate_subset(keep)?;
    let traced = layout.complement(&keep);
    let keep_off = layout.offsets(&keep);
    let trace_off = layout.offsets(&traced);
    let m = state.matrix();
    Ok(Operator::from_fn(keep_off.len(), |r, c| {
        let (br, bc) = (keep_off[r], keep_off[c]);
        trace_off.iter().map(|&t| m[(br + t, bc + t)]).sum()
    }))
}

/// Conjugates `state` by `local` acting on the listed factors:
/// `(local ⊗ 1) state (local ⊗ 1)†`.
///
/// `targets` are in the order `local`'s indices expect (leftmost slowest).
/// Cost is `O(dim² · local_dim)`; the full embedded operator is never built.
pub fn conjugate_local(
    state: &Operator,
    layout: &DimensionLayout,
    targets: &[usize],
    local: &Operator,
) -> Result<Operator> {
    layout.check(state)?;
    let sorted = layout.validate_subset(targets)?;
    if targets.is_empty() {
        return Err(QmonError::InvalidLayout("no target factors".into()));
    }
    let local_dim: usize = targets.iter().map(|&t| layout.dims[t]).product();
    if local.dim() != local_dim {
        return Err(QmonError::DimensionMismatch {
            expected: local_dim,
            found: local.dim(),
        });
    }
    let rest = layout.complement(&sorted);
    // offsets() walks factors in the given order, so passing `targets`
    // unsorted yields the local operator's own index ordering.
    let tgt_off = layout.offsets(targets);
    let rest_off = layout.offsets(&rest);
    let u = local.matrix();
    let dim = state.dim();

    let mut m = state.matrix().clone();
    let mut buf = vec![ZERO; local_dim];
    // Left multiplication, column by column.
    for col in 0..dim {
        for &ro in &rest_off {
            for (a, &to) in tgt_off.iter().enumerate() {
                buf[a] = m[(ro + to, col)];
            }
            for (b, &to) in tgt_off.iter().enumerate() {
                let mut acc = ZERO;
                for a in 0..local_dim {
                    acc += u[(b, a)] * buf[a];
                }
                m[(ro + to, col)] = acc;
            }
        }
    }
    // Right multiplication by the adjoint, row by row.
    for row in 0..dim {
        for &ro in &rest_off {
            for (a, &to) in tgt_off.iter().enumerate() {
                buf[a] = m[(row, ro + to)];
            }
            for (b, &to) in tgt_off.iter().enumerate() {
                let mut acc = ZERO;
                for a in 0..local_dim {
                    acc += buf[a] * u[(b, a)].conj();
                }
                m[(row, ro + to)] = acc;
            }
        }
    }
    Ok(Operator { m })
}

/// `-Σ λ log₂ λ` over the spectrum, with `0 log 0 = 0`.
pub fn von_neumann_entropy(state: &Operator) -> Result<f64> {
    let ev = state.density_spectrum()?;
    Ok(ev
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum::<f64>()
        .max(0.0))
}

/// `½‖a − b‖₁` from the eigenvalues of `a − b`.
pub fn trace_distance(a: &Operator, b: &Operator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(QmonError::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    for op in [a, b] {
        let h = op.hermiticity_residual();
        if h > DENSITY_TOL {
            return Err(QmonError::NotHermitian(h));
        }
    }
    let diff = a - b;
    Ok(0.5 * diff.hermitian_eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Random density matrix `G G† / Tr(G G†)` with `G` a complex Gaussian
/// `dim × rank` matrix. Deterministic in `seed`.
pub fn random_density(dim: usize, rank: usize, seed: u64) -> Result<Operator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density_from(dim, rank, &mut rng)
}

pub fn random_density_from(dim: usize, rank: usize, rng: &mut impl Rng) -> Result<Operator> {
    if rank == 0 || rank > dim {
        return Err(QmonError::InvalidRank { rank, dim });
    }
    let g = gaussian_matrix(dim, rank, rng);
    let mut gg = &g * g.adjoint();
    let tr = gg.trace().re;
    gg /= C64::new(tr, 0.0);
    // Exact Hermitian symmetry; the product is only Hermitian up to rounding.
    let herm = (&gg + gg.adjoint()) * C64::new(0.5, 0.0);
    Operator::from_matrix(herm)
}

/// Haar-random unitary via QR of a complex Gaussian matrix with phase fix.
pub fn random_unitary(dim: usize, seed: u64) -> Operator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unitary_from(dim, &mut rng)
}

pub fn random_unitary_from(dim: usize, rng: &mut impl Rng) -> Operator {
    let g = gaussian_matrix(dim, dim, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for row in 0..dim {
            q[(row, k)] *= phase;
        }
    }
    Operator { m: q }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn sigma_z() -> Operator {
        Operator::real_diagonal(&[1.0, -1.0])
    }

    fn bell() -> Operator {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Operator::projector(&[c(s), ZERO, ZERO, c(s)])
    }

    #[test]
    fn tensor_of_identities() {
        let t = tensor(&[Operator::identity(2), Operator::identity(3)]).unwrap();
        assert_eq!(t, Operator::identity(6));
    }

    #[test]
    fn tensor_orders_leftmost_first() {
        let t = tensor(&[sigma_z(), Operator::basis_projector(2, 0)]).unwrap();
        let expected = Operator::real_diagonal(&[1.0, 0.0, -1.0, 0.0]);
        assert_eq!(t, expected);
    }

    #[test]
    fn tensor_single_and_empty() {
        let a = random_density(3, 2, 4).unwrap();
        assert_eq!(tensor(std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(tensor(&[]), Err(QmonError::EmptyFactors));
    }

    #[test]
    fn partial_trace_of_bell_is_maximally_mixed() {
        let layout = DimensionLayout::new(vec![2, 2]).unwrap();
        let r = partial_trace(&bell(), &layout, &[0]).unwrap();
        assert!(r.max_abs_diff(&Operator::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_recovers_factors() {
        let a = random_density(2, 2, 1).unwrap();
        let b = random_density(3, 1, 2).unwrap();
        let layout = DimensionLayout::new(vec![2, 3]).unwrap();
        let ab = tensor(&[a.clone(), b.clone()]).unwrap();
        assert!(partial_trace(&ab, &layout, &[0]).unwrap().max_abs_diff(&a) < 1e-14);
        assert!(partial_trace(&ab, &layout, &[1]).unwrap().max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn partial_trace_errors() {
        let layout = DimensionLayout::new(vec![2, 3]).unwrap();
        let s = Operator::identity(6).scale_real(1.0 / 6.0);
        assert_eq!(partial_trace(&s, &layout, &[]), Err(QmonError::EmptyKeepSet));
        let bad = DimensionLayout::new(vec![2, 2]).unwrap();
        assert!(matches!(
            partial_trace(&s, &bad, &[0]),
            Err(QmonError::DimensionMismatch { .. })
        ));
        assert!(partial_trace(&s, &layout, &[2]).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&Operator::basis_projector(2, 0)).unwrap().abs() < 1e-15);
        let mixed = Operator::identity(5).scale_real(0.2);
        assert!((von_neumann_entropy(&mixed).unwrap() - 5f64.log2()).abs() < 1e-12);
        // h(1/4) = -(3/4)log2(3/4) - (1/4)log2(1/4), evaluated independently.
        let h = -(0.75f64 * 0.75f64.log2()) - 0.25 * 0.25f64.log2();
        let s = von_neumann_entropy(&Operator::real_diagonal(&[0.75, 0.25])).unwrap();
        assert!((s - h).abs() < 1e-14);
        assert!((s - 0.811_278_124_459_132_8).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_invalid_states() {
        let non_herm = Operator::from_rows(&[vec![c(0.5), c(0.3)], vec![c(0.0), c(0.5)]]).unwrap();
        assert!(matches!(
            von_neumann_entropy(&non_herm),
            Err(QmonError::NotHermitian(_))
        ));
        let unnormalized = Operator::identity(2);
        assert!(matches!(
            von_neumann_entropy(&unnormalized),
            Err(QmonError::TraceNotOne(_))
        ));
        let negative = Operator::real_diagonal(&[1.5, -0.5]);
        assert!(matches!(
            von_neumann_entropy(&negative),
            Err(QmonError::NegativeEigenvalue(_))
        ));
        // rounding-size negatives are clamped
        let tiny = Operator::real_diagonal(&[1.0 + 5e-11, -5e-11]);
        assert!(von_neumann_entropy(&tiny).unwrap() < 1e-9);
    }

    #[test]
    fn trace_distance_examples() {
        let rho = random_density(3, 3, 9).unwrap();
        assert!(trace_distance(&rho, &rho).unwrap() < 1e-15);
        let p0 = Operator::basis_projector(2, 0);
        let p1 = Operator::basis_projector(2, 1);
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-15);
        let mixed = Operator::identity(2).scale_real(0.5);
        assert!((trace_distance(&mixed, &p0).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            trace_distance(&p0, &Operator::identity(3)),
            Err(QmonError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn random_density_properties() {
        let pure = random_density(4, 1, 11).unwrap();
        assert!(von_neumann_entropy(&pure).unwrap() < 1e-10);
        assert_eq!(random_density(4, 2, 5).unwrap(), random_density(4, 2, 5).unwrap());
        let full = random_density(4, 4, 3).unwrap();
        full.validate_density().unwrap();
        assert!(full.hermitian_eigenvalues().iter().all(|&x| x > 0.0));
        assert_eq!(random_density(3, 4, 0), Err(QmonError::InvalidRank { rank: 4, dim: 3 }));
        assert!(random_density(3, 0, 0).is_err());
    }

    #[test]
    fn random_density_rank() {
        let rho = random_density(5, 2, 8).unwrap();
        let ev = rho.hermitian_eigenvalues();
        assert!(ev[..3].iter().all(|x| x.abs() < 1e-12));
        assert!(ev[3..].iter().all(|&x| x > 1e-6));
    }

    #[test]
    fn conjugate_local_matches_explicit_embedding() {
        let layout = DimensionLayout::new(vec![2, 3, 2]).unwrap();
        let rho = random_density(12, 12, 21).unwrap();
        let u = random_unitary(4, 22);
        // acting on factors (2, 0): reorder by swapping through an explicit permutation
        let got = conjugate_local(&rho, &layout, &[0, 2], &u).unwrap();
        // explicit: U on (0,2) = sum over matrix units
        let mut full = Operator::zeros(12);
        for r in 0..4 {
            for cc in 0..4 {
                let e0 = Operator::from_fn(2, |i, j| if i == r / 2 && j == cc / 2 { ONE } else { ZERO });
                let e2 = Operator::from_fn(2, |i, j| if i == r % 2 && j == cc % 2 { ONE } else { ZERO });
                let term = tensor(&[e0, Operator::identity(3), e2]).unwrap().scale(u.get(r, cc));
                full = &full + &term;
            }
        }
        let expected = &(&full * &rho) * &full.adjoint();
        assert!(got.max_abs_diff(&expected) < 1e-13);

        let got_rev = conjugate_local(&rho, &layout, &[2, 0], &u).unwrap();
        let swap = Operator::from_fn(4, |r, cc| {
            let (a, b) = (r / 2, r % 2);
            if cc == b * 2 + a {
                ONE
            } else {
                ZERO
            }
        });
        let u_rev = &(&swap * &u) * &swap;
        let expected_rev = conjugate_local(&rho, &layout, &[0, 2], &u_rev).unwrap();
        assert!(got_rev.max_abs_diff(&expected_rev) < 1e-13);
    }

    #[test]
    fn random_unitary_is_unitary() {
        for seed in 0..5 {
            assert!(random_unitary(6, seed).unitarity_residual() < 1e-13);
        }
    }

    #[test]
    fn operator_json_round_trip() {
        let rho = random_density(3, 2, 77).unwrap();
        let s = serde_json::to_string(&rho).unwrap();
        let back: Operator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rho);
        assert!(serde_json::from_str::<Operator>("[[[1,0],[0,0]]]").is_err());
    }
}
