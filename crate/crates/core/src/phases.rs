//! The transcendental constraint system on the phases of `T`.
//!
//! A phase vector generates a monitoring map exactly when every vacuum
//! overlap `⟨0|T^r|0⟩`, `r = 1 … d-1`, equals the same real number `η`.
//! Written out through the window sums `s_{q,p} = Σ_{m=0}^{p} φ_{[q+m]_d}`:
//!
//! * `Σ_q sin s_{q,p} = 0` for `p = 0 … d-2`,
//! * `Σ_q cos s_{q,p}` is independent of `p`,
//!
//! and then `η = (1/d) Σ_q cos φ_q`. The system has the analytic family
//! `φ = (θ, -θ, 0, …, 0)`; other solutions are found numerically by
//! [`solve_phases`].

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{QmonError, Result};
use crate::observable::{wrap_angle, PhaseVector};
use crate::weyl::Dimension;

/// Residual norm below which a phase vector counts as an exact solution.
pub const SYSTEM_TOL: f64 = 1e-10;
/// Slack on the `[0, 1]` range of `η`.
pub const ETA_RANGE_TOL: f64 = 1e-9;

/// Noise of a monitoring interaction, `η ∈ [0, 1]` (strength `ε = 1 - η`).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct NoiseLevel(f64);

impl NoiseLevel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(QmonError::EtaOutOfRange(eta));
        }
        Ok(Self(eta))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Monitoring strength `1 - η`.
    pub fn strength(self) -> f64 {
        1.0 - self.0
    }

    fn clamped(eta: f64) -> Self {
        Self(eta.clamp(0.0, 1.0))
    }
}

impl TryFrom<f64> for NoiseLevel {
    type Error = QmonError;
    fn try_from(x: f64) -> Result<Self> {
        Self::new(x)
    }
}

impl From<NoiseLevel> for f64 {
    fn from(n: NoiseLevel) -> f64 {
        n.0
    }
}

/// Σ_q e^{i s_{q,len-1}} split into (Σ cos, Σ sin).
fn window_sums(p: &PhaseVector, len: usize) -> (f64, f64) {
    (0..p.d()).fold((0.0, 0.0), |(c, s), q| {
        let w = p.window_sum(q, len);
        (c + w.cos(), s + w.sin())
    })
}

/// Constraint residuals, length `1 + (d-1) + (d-2)`:
/// `[zero-sum; sine sums for p = 0…d-2; cosine sums for p = 1…d-2 minus p = 0]`.
///
/// The zero-sum entry is taken modulo `2π`.
pub fn residuals(p: &PhaseVector) -> Vec<f64> {
    let d = p.d();
    let mut out = Vec::with_capacity(2 * d - 2);
    out.push(wrap_angle(p.phases().iter().sum()));
    let sums: Vec<(f64, f64)> = (1..d).map(|len| window_sums(p, len)).collect();
    out.extend(sums.iter().map(|&(_, s)| s));
    let base = sums[0].0;
    out.extend(sums[1..].iter().map(|&(c, _)| c - base));
    out
}

pub fn residual_norm(p: &PhaseVector) -> f64 {
    residuals(p).iter().map(|r| r * r).sum::<f64>().sqrt()
}

/// `(1/d) Σ_q cos φ_q` with no range or consistency checks.
pub fn eta_nominal(p: &PhaseVector) -> f64 {
    p.phases().iter().map(|x| x.cos()).sum::<f64>() / p.d() as f64
}

/// Noise read off a phase vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaReading {
    pub eta: NoiseLevel,
    /// Set when the phases do not solve the constraint system, so the value
    /// does not describe a monitoring map.
    pub nominal_only: bool,
}

/// `η = (1/d) Σ_q cos φ_q`.
///
/// Values within [`ETA_RANGE_TOL`] of `[0, 1]` are clamped; anything further
/// out is an error.
pub fn eta_from_phases(p: &PhaseVector) -> Result<EtaReading> {
    let eta = eta_nominal(p);
    if !(-ETA_RANGE_TOL..=1.0 + ETA_RANGE_TOL).contains(&eta) {
        return Err(QmonError::EtaOutOfRange(eta));
    }
    Ok(EtaReading {
        eta: NoiseLevel::clamped(eta),
        nominal_only: residual_norm(p) > SYSTEM_TOL,
    })
}

/// The family `φ_0 = θ, φ_1 = -θ, φ_{k≥2} = 0`.
pub fn analytic_phases(d: Dimension, theta: f64) -> PhaseVector {
    let mut v = vec![0.0; d.get()];
    v[0] = theta;
    v[1] = -theta;
    PhaseVector::new(v).expect("analytic family sums to zero")
}

/// Angle of the analytic family reaching `η`, if any:
/// `η = (d - 2 + 2 cos θ)/d`.
pub fn analytic_theta_for(d: Dimension, eta: NoiseLevel) -> Option<f64> {
    let n = d.get() as f64;
    let c = (n * eta.value() - n + 2.0) / 2.0;
    (-1.0..=1.0).contains(&c).then(|| c.acos())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub phases: PhaseVector,
    pub target_eta: NoiseLevel,
    pub achieved_eta: NoiseLevel,
    pub residual_norm: f64,
    /// Total damped least-squares iterations over all starts.
    pub iterations: usize,
    /// Number of starting points tried.
    pub restarts: usize,
    pub seed: u64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub residual_tol: f64,
    pub eta_tol: f64,
    pub max_restarts: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            eta_tol: 1e-8,
            max_restarts: 50,
            max_iterations: 200,
        }
    }
}

/// Least-squares objective over the `d - 1` free phases.
struct Objective {
    d: usize,
    target: f64,
}

impl Objective {
    fn phases(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = x.iter().copied().collect();
        v.push(-x.sum());
        v
    }

    /// Residuals `[sines (d-1); cosine differences (d-2); η - target]` and
    /// their Jacobian.
    fn eval(&self, x: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.d;
        let nv = d - 1;
        let phi = self.phases(x);
        let rows = 2 * d - 2;
        let mut f = DVector::zeros(rows);
        let mut j = DMatrix::zeros(rows, nv);
        // (cos sum, sin sum, d cos/dx, d sin/dx) per window length
        let mut cos_rows = Vec::with_capacity(nv);
        for len in 1..d {
            let mut cs = 0.0;
            let mut sn = 0.0;
            let mut dcs = vec![0.0; nv];
            let mut dsn = vec![0.0; nv];
            for q in 0..d {
                let mut s = 0.0;
                let mut grad = vec![0.0; nv];
                let mut has_last = false;
                for m in 0..len {
                    let idx = (q + m) % d;
                    s += phi[idx];
                    if idx == d - 1 {
                        has_last = true;
                    } else {
                        grad[idx] += 1.0;
                    }
                }
                if has_last {
                    grad.iter_mut().for_each(|g| *g -= 1.0);
                }
                let (sv, cv) = s.sin_cos();
                cs += cv;
                sn += sv;
                for v in 0..nv {
                    dcs[v] -= sv * grad[v];
                    dsn[v] += cv * grad[v];
                }
            }
            let p = len - 1;
            f[p] = sn;
            for v in 0..nv {
                j[(p, v)] = dsn[v];
            }
            cos_rows.push((cs, dcs));
        }
        let (c0, dc0) = &cos_rows[0];
        for (p, (cp, dcp)) in cos_rows.iter().enumerate().skip(1) {
            let row = nv + p - 1;
            f[row] = cp - c0;
            for v in 0..nv {
                j[(row, v)] = dcp[v] - dc0[v];
            }
        }
        let last = rows - 1;
        f[last] = c0 / d as f64 - self.target;
        for v in 0..nv {
            j[(last, v)] = dc0[v] / d as f64;
        }
        (f, j)
    }

    /// Levenberg–Marquardt from `x0`. Returns the final point and iteration count.
    fn minimize(&self, mut x: DVector<f64>, max_iter: usize, stop: f64) -> (DVector<f64>, usize) {
        let nv = x.len();
        let (mut f, mut jac) = self.eval(&x);
        let mut cost = f.norm_squared();
        let mut lambda = 1e-3;
        let mut iters = 0;
        while iters < max_iter {
            if f.norm() <= stop {
                break;
            }
            iters += 1;
            let jtj = jac.transpose() * &jac;
            let g = jac.transpose() * &f;
            let mut improved = false;
            for _ in 0..20 {
                let mut a = jtj.clone();
                for k in 0..nv {
                    a[(k, k)] += lambda * (jtj[(k, k)] + 1e-12);
                }
                let Some(chol) = a.cholesky() else {
                    lambda *= 10.0;
                    continue;
                };
                let step = chol.solve(&(-&g));
                let trial = &x + &step;
                let (tf, tj) = self.eval(&trial);
                let tc = tf.norm_squared();
                if tc < cost {
                    x = trial;
                    f = tf;
                    jac = tj;
                    cost = tc;
                    lambda = (lambda / 3.0).max(1e-15);
                    improved = true;
                    break;
                }
                lambda *= 4.0;
                if lambda > 1e12 {
                    break;
                }
            }
            if !improved {
                break;
            }
        }
        (x, iters)
    }
}

fn evaluate(free: &[f64], target: NoiseLevel) -> Option<(PhaseVector, f64, f64)> {
    let p = PhaseVector::from_free(free).ok()?;
    let res = residual_norm(&p);
    let eta = eta_nominal(&p);
    Some((p, res, (eta - target.value()).abs()))
}

/// Finds phases solving the constraint system with `η = target`.
///
/// `tol` bounds both the residual norm and `|η - target|`. Failure to find a
/// solution is not an error: the report comes back with `converged = false`.
pub fn solve_phases(d: Dimension, target: NoiseLevel, seed: u64, tol: f64) -> Result<SolverReport> {
    solve_phases_with(
        d,
        target,
        seed,
        SolverOptions {
            residual_tol: tol,
            eta_tol: tol,
            ..SolverOptions::default()
        },
    )
}

/// Multistart damped least squares.
///
/// Order of candidates: the all-zero phases (the only solution at `η = 1`),
/// then up to `max_restarts` uniform random starts on the zero-sum manifold
/// drawn from a ChaCha stream keyed by `seed`, then the analytic family as a
/// last resort.
pub fn solve_phases_with(d: Dimension, target: NoiseLevel, seed: u64, opts: SolverOptions) -> Result<SolverReport> {
    for tol in [opts.residual_tol, opts.eta_tol] {
        if tol.is_nan() || tol <= 0.0 {
            return Err(QmonError::InvalidTolerance(tol));
        }
    }
    let n = d.get();
    let accept = |res: f64, eta_err: f64| res <= opts.residual_tol && eta_err <= opts.eta_tol;
    let report = |p: PhaseVector, res: f64, iterations, restarts, converged| SolverReport {
        achieved_eta: NoiseLevel::clamped(eta_nominal(&p)),
        phases: p,
        target_eta: target,
        residual_norm: res,
        iterations,
        restarts,
        seed,
        converged,
    };

    let zeros = vec![0.0; n - 1];
    let (p, res, err) = evaluate(&zeros, target).expect("zero phases are valid");
    if accept(res, err) {
        return Ok(report(p, res, 0, 0, true));
    }

    let objective = Objective {
        d: n,
        target: target.value(),
    };
    let stop = 0.01 * opts.residual_tol.min(opts.eta_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut iterations = 0;
    let mut best: Option<(PhaseVector, f64, f64)> = None;
    for restart in 1..=opts.max_restarts {
        let x0 = DVector::from_fn(n - 1, |_, _| rng.random_range(-PI..PI));
        let (x, it) = objective.minimize(x0, opts.max_iterations, stop);
        iterations += it;
        let Some((p, res, err)) = evaluate(x.as_slice(), target) else {
            continue;
        };
        if accept(res, err) {
            return Ok(report(p, res, iterations, restart, true));
        }
        if best.as_ref().is_none_or(|b| res + err < b.1 + b.2) {
            best = Some((p, res, err));
        }
    }

    let mut restarts = opts.max_restarts;
    if let Some(theta) = analytic_theta_for(d, target) {
        restarts += 1;
        let p = analytic_phases(d, theta);
        let res = residual_norm(&p);
        let err = (eta_nominal(&p) - target.value()).abs();
        if accept(res, err) {
            return Ok(report(p, res, iterations, restarts, true));
        }
    }
    let (p, res, _) = best.unwrap_or_else(|| evaluate(&zeros, target).expect("valid"));
    Ok(report(p, res, iterations, restarts, false))
}
