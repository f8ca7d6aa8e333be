//! Heisenberg–Weyl generators: clock `Z`, shift `X`, the root of unity `ω`
//! and the discrete Fourier matrix `V`.
//!
//! Entries are evaluated from the exact angle `2π·(l·k mod d)/d` instead of
//! by repeated multiplication so that large powers keep unitarity residuals
//! at rounding level.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{Operator, C64, ONE, ZERO};
use crate::error::{QmonError, Result};

/// Local dimension of a qudit, `d ≥ 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(QmonError::InvalidDimension(d));
        }
        Ok(Self(d))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for Dimension {
    type Error = QmonError;
    fn try_from(d: usize) -> Result<Self> {
        Self::new(d)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

/// Non-negative residue of `a` modulo `d`.
pub fn modulo(a: i64, d: usize) -> usize {
    a.rem_euclid(d as i64) as usize
}

/// `ω^k` with `ω = e^{2πi/d}`, reduced mod `d` before evaluation.
/// Quarter turns are returned exactly.
pub fn omega_pow(d: Dimension, k: i64) -> C64 {
    let n = d.get();
    let r = modulo(k, n);
    if (4 * r).is_multiple_of(n) {
        return match 4 * r / n {
            0 => ONE,
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, 2.0 * PI * r as f64 / n as f64)
}

pub fn omega(d: Dimension) -> C64 {
    omega_pow(d, 1)
}

/// `Z^l = Σ_k ω^{lk} |k⟩⟨k|`.
pub fn clock_pow(d: Dimension, l: i64) -> Operator {
    let n = d.get();
    let diag: Vec<C64> = (0..n).map(|k| omega_pow(d, l * k as i64)).collect();
    Operator::diagonal(&diag)
}

/// `X^k = Σ_j |j+k mod d⟩⟨j|`.
pub fn shift_pow(d: Dimension, k: i64) -> Operator {
    let n = d.get();
    let s = modulo(k, n);
    Operator::from_fn(n, |r, c| if r == (c + s) % n { ONE } else { ZERO })
}

pub fn clock(d: Dimension) -> Operator {
    clock_pow(d, 1)
}

pub fn shift(d: Dimension) -> Operator {
    shift_pow(d, 1)
}

/// `V = (1/√d) Σ_{ij} ω^{ij} |i⟩⟨j|`.
pub fn fourier(d: Dimension) -> Operator {
    let n = d.get();
    let norm = 1.0 / (n as f64).sqrt();
    Operator::from_fn(n, |r, c| omega_pow(d, (r * c) as i64) * norm)
}

/// `Σ_{k=0}^{d-1} ω^{(a-b)k}`, which equals `d·δ_{a≡b (mod d)}`.
pub fn root_of_unity_sum(d: Dimension, a: i64, b: i64) -> C64 {
    (0..d.get() as i64).map(|k| omega_pow(d, (a - b) * k)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(d: usize) -> Dimension {
        Dimension::new(d).unwrap()
    }

    #[test]
    fn rejects_small_dimensions() {
        assert_eq!(Dimension::new(1), Err(QmonError::InvalidDimension(1)));
        assert!(Dimension::new(0).is_err());
        assert!(serde_json::from_str::<Dimension>("1").is_err());
    }

    #[test]
    fn omega_values() {
        assert!((omega(dim(2)) - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((omega(dim(4)) - C64::new(0.0, 1.0)).norm() < 1e-15);
        let w3 = C64::new(-0.5, 3f64.sqrt() / 2.0);
        assert!((omega(dim(3)) - w3).norm() < 1e-15);
        for d in 2..=12 {
            let w = omega(dim(d));
            assert!((w.norm() - 1.0).abs() < 1e-15);
            assert!((w.powu(d as u32) - ONE).norm() < 1e-14);
        }
    }

    #[test]
    fn qubit_generators_are_pauli() {
        let z = clock(dim(2));
        let x = shift(dim(2));
        assert_eq!(z, Operator::real_diagonal(&[1.0, -1.0]));
        let sx = Operator::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        assert_eq!(x, sx);
    }

    #[test]
    fn shift_wraps() {
        let x = shift(dim(3));
        // X|2⟩ = |0⟩: column 2 has its one in row 0
        assert_eq!(x.get(0, 2), ONE);
        assert_eq!(x.get(1, 2), ZERO);
    }

    #[test]
    fn commutation_relation_qutrit() {
        let d = dim(3);
        let zx = &clock(d) * &shift(d);
        let xz = (&shift(d) * &clock(d)).scale(omega(d));
        assert!(zx.max_abs_diff(&xz) < 1e-15);
    }

    #[test]
    fn fourier_qubit_is_hadamard() {
        let v = fourier(dim(2));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = Operator::from_rows(&[
            vec![C64::new(s, 0.0), C64::new(s, 0.0)],
            vec![C64::new(s, 0.0), C64::new(-s, 0.0)],
        ])
        .unwrap();
        assert!(v.max_abs_diff(&h) < 1e-15);
    }

    #[test]
    fn fourier_is_unitary_and_maps_clock_to_shift() {
        for d in 2..=8 {
            let dd = dim(d);
            let v = fourier(dd);
            assert!(v.unitarity_residual() < 1e-13);
            // V Z V† = X^{-1}: the clock becomes a (reverse) shift
            let vzv = &(&v * &clock(dd)) * &v.adjoint();
            assert!(vzv.max_abs_diff(&shift_pow(dd, -1)) < 1e-13, "d={d}");
        }
    }

    #[test]
    fn generators_have_order_d() {
        for d in 2..=8 {
            let dd = dim(d);
            let id = Operator::identity(d);
            assert!(clock(dd).pow(d).max_abs_diff(&id) < 1e-12);
            assert!(shift(dd).pow(d).max_abs_diff(&id) < 1e-12);
            assert!(clock(dd).unitarity_residual() < 1e-14);
        }
    }

    #[test]
    fn weyl_commutation_all_powers() {
        for d in 2..=6 {
            let dd = dim(d);
            for l in 0..d as i64 {
                for k in 0..d as i64 {
                    let lhs = &clock_pow(dd, l) * &shift_pow(dd, k);
                    let rhs = (&shift_pow(dd, k) * &clock_pow(dd, l)).scale(omega_pow(dd, l * k));
                    assert!(lhs.max_abs_diff(&rhs) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn root_of_unity_identity() {
        for d in 2..=7 {
            let dd = dim(d);
            for a in -9i64..9 {
                for b in -4i64..4 {
                    let expected = if (a - b).rem_euclid(d as i64) == 0 {
                        d as f64
                    } else {
                        0.0
                    };
                    let s = root_of_unity_sum(dd, a, b);
                    assert!((s - C64::new(expected, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn modulo_is_non_negative() {
        assert_eq!(modulo(-1, 3), 2);
        assert_eq!(modulo(-6, 3), 0);
        assert_eq!(modulo(7, 3), 1);
    }
}
