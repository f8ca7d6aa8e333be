//! C ABI for the qmon library.
//!
//! Objects cross the boundary as opaque handles (`QmonOperator`,
//! `QmonPhases`) that the caller releases with the matching `_free`
//! function. Every fallible call returns a `QmonStatus`; on failure the
//! message is kept per thread and can be read with
//! `qmon_last_error_message`. Matrices are exchanged as row-major arrays of
//! real and imaginary parts. Bipartite states use the layout `A ⊗ B` with the
//! monitored factor first, measured in the computational basis.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qmon::algebra::random_density;
use qmon::{
    analytic_phases, build_t, dephase, eta_from_phases, irreality, monitor, reduced_state_structured, solve_phases,
    system_state_after, trace_distance, vacuum_overlap, von_neumann_entropy, Dimension, DimensionLayout,
    EnvironmentModel, MonitoringSpec, NoiseLevel, ObservableBasis, Operator, PhaseVector, QmonError, C64,
};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QmonStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    InvalidState = 4,
    SolverNotFound = 5,
    DimensionCap = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque square complex matrix.
pub struct QmonOperator(Operator);

/// Opaque phase vector of a unitary observable.
pub struct QmonPhases(PhaseVector);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(QmonStatus, String);

impl From<QmonError> for Failure {
    fn from(e: QmonError) -> Self {
        let status = match &e {
            QmonError::DimensionMismatch { .. }
            | QmonError::PhaseCount { .. }
            | QmonError::InvalidLayout(_)
            | QmonError::NotSquare { .. } => QmonStatus::DimensionMismatch,
            QmonError::NotHermitian(_) | QmonError::TraceNotOne(_) | QmonError::NegativeEigenvalue(_) => {
                QmonStatus::InvalidState
            }
            QmonError::DimensionCapExceeded { .. } => QmonStatus::DimensionCap,
            _ => QmonStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(QmonStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QmonStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|payload| {
        let msg = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".to_string());
        Err(Failure(QmonStatus::Panic, msg))
    });
    match outcome {
        Ok(()) => {
            LAST_ERROR.with(|e| e.borrow_mut().clear());
            QmonStatus::Ok
        }
        Err(Failure(status, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            status
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes a handle obtained from this library or null.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: `out` is non-null and points to writable storage for a pointer.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: `out` is non-null and points to writable storage.
    unsafe { *out = value };
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `len` readable elements at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn bipartite(d_a: usize, d_b: usize) -> Result<(ObservableBasis, DimensionLayout), Failure> {
    let d = Dimension::new(d_a)?;
    Ok((ObservableBasis::computational(d), DimensionLayout::new(vec![d_a, d_b])?))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the length the full message
/// needs including the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qmon_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            // SAFETY: `buf` holds `len` bytes and `n < len`.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len() + 1
    })
}

/// Builds a phase vector from `d` phases summing to zero modulo 2π.
///
/// # Safety
/// `phases` must point to `d` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_phases_new(phases: *const f64, d: usize, out: *mut *mut QmonPhases) -> QmonStatus {
    guard(|| unsafe {
        let p = PhaseVector::new(slice(phases, d, "phases")?.to_vec())?;
        store(out, QmonPhases(p))
    })
}

/// Analytic family `(θ, -θ, 0, …, 0)` in dimension `d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_phases_analytic(d: usize, theta: f64, out: *mut *mut QmonPhases) -> QmonStatus {
    guard(|| unsafe {
        if !theta.is_finite() {
            return Err(Failure(QmonStatus::InvalidArgument, "theta must be finite".into()));
        }
        store(out, QmonPhases(analytic_phases(Dimension::new(d)?, theta)))
    })
}

/// Numerically solves the phase constraint system for noise `eta`.
/// Returns `QMON_STATUS_SOLVER_NOT_FOUND` when no start converges.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_phases_solve(
    d: usize,
    eta: f64,
    seed: u64,
    tol: f64,
    out: *mut *mut QmonPhases,
) -> QmonStatus {
    guard(|| unsafe {
        let report = solve_phases(Dimension::new(d)?, NoiseLevel::new(eta)?, seed, tol)?;
        if !report.converged {
            return Err(Failure(
                QmonStatus::SolverNotFound,
                format!("no solution for d={d} eta={eta}, residual {:e}", report.residual_norm),
            ));
        }
        store(out, QmonPhases(report.phases))
    })
}

/// Number of phases, or 0 for a null handle.
///
/// # Safety
/// `phases` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qmon_phases_dim(phases: *const QmonPhases) -> usize {
    unsafe { phases.as_ref() }.map_or(0, |p| p.0.d())
}

/// Copies the phases into `out`, which must hold at least `len` doubles.
///
/// # Safety
/// `phases` must be a live handle; `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qmon_phases_get(phases: *const QmonPhases, out: *mut f64, len: usize) -> QmonStatus {
    guard(|| unsafe {
        let p = borrow(phases, "phases")?;
        let d = p.0.d();
        if len < d {
            return Err(Failure(
                QmonStatus::BufferTooSmall,
                format!("need {d} entries, got {len}"),
            ));
        }
        if out.is_null() {
            return Err(null("output pointer"));
        }
        ptr::copy_nonoverlapping(p.0.phases().as_ptr(), out, d);
        Ok(())
    })
}

/// `η = (1/d) Σ cos φ_q`, checked to lie in `[0, 1]`.
///
/// # Safety
/// `phases` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_phases_eta(phases: *const QmonPhases, out: *mut f64) -> QmonStatus {
    guard(|| unsafe {
        let reading = eta_from_phases(&borrow(phases, "phases")?.0)?;
        write(out, reading.eta.value())
    })
}

/// `⟨0|(T^j)† T^i|0⟩` for the observable built from `phases`.
///
/// # Safety
/// `phases` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_vacuum_overlap(
    phases: *const QmonPhases,
    i: i64,
    j: i64,
    re: *mut f64,
    im: *mut f64,
) -> QmonStatus {
    guard(|| unsafe {
        let c = vacuum_overlap(&borrow(phases, "phases")?.0, i, j);
        write(re, c.re)?;
        write(im, c.im)
    })
}

/// Matrix of `T` for `phases` as a new operator.
///
/// # Safety
/// `phases` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_observable_matrix(phases: *const QmonPhases, out: *mut *mut QmonOperator) -> QmonStatus {
    guard(|| unsafe {
        let t = build_t(&borrow(phases, "phases")?.0)?;
        store(out, QmonOperator(t.matrix().clone()))
    })
}

/// # Safety
/// `phases` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qmon_phases_free(phases: *mut QmonPhases) {
    if !phases.is_null() {
        // SAFETY: handle was created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(phases) });
    }
}

/// Builds a `dim × dim` operator from row-major real and imaginary parts.
///
/// # Safety
/// `re` and `im` must each point to `dim * dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn qmon_operator_from_parts(
    re: *const f64,
    im: *const f64,
    dim: usize,
    out: *mut *mut QmonOperator,
) -> QmonStatus {
    guard(|| unsafe {
        if dim == 0 {
            return Err(Failure(
                QmonStatus::InvalidArgument,
                "dimension must be positive".into(),
            ));
        }
        let len = dim
            .checked_mul(dim)
            .ok_or_else(|| Failure(QmonStatus::InvalidArgument, "dimension too large".into()))?;
        let re = slice(re, len, "re")?;
        let im = slice(im, len, "im")?;
        let rows: Vec<Vec<C64>> = (0..dim)
            .map(|r| (0..dim).map(|c| C64::new(re[r * dim + c], im[r * dim + c])).collect())
            .collect();
        store(out, QmonOperator(Operator::from_rows(&rows)?))
    })
}

/// Seeded random density matrix of the given rank.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_operator_random_density(
    dim: usize,
    rank: usize,
    seed: u64,
    out: *mut *mut QmonOperator,
) -> QmonStatus {
    guard(|| unsafe { store(out, QmonOperator(random_density(dim, rank, seed)?)) })
}

/// Matrix dimension, or 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qmon_operator_dim(op: *const QmonOperator) -> usize {
    unsafe { op.as_ref() }.map_or(0, |o| o.0.dim())
}

/// Copies the entries row-major into `re` and `im`, each holding `len`
/// doubles.
///
/// # Safety
/// `op` must be a live handle; `re` and `im` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn qmon_operator_copy_parts(
    op: *const QmonOperator,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> QmonStatus {
    guard(|| unsafe {
        let o = &borrow(op, "operator")?.0;
        let dim = o.dim();
        if len < dim * dim {
            return Err(Failure(
                QmonStatus::BufferTooSmall,
                format!("need {} entries, got {len}", dim * dim),
            ));
        }
        if re.is_null() || im.is_null() {
            return Err(null("output pointer"));
        }
        for r in 0..dim {
            for c in 0..dim {
                let z = o.get(r, c);
                *re.add(r * dim + c) = z.re;
                *im.add(r * dim + c) = z.im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `op` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qmon_operator_free(op: *mut QmonOperator) {
    if !op.is_null() {
        // SAFETY: handle was created by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(op) });
    }
}

/// Von Neumann entropy in bits.
///
/// # Safety
/// `rho` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_entropy(rho: *const QmonOperator, out: *mut f64) -> QmonStatus {
    guard(|| unsafe { write(out, von_neumann_entropy(&borrow(rho, "rho")?.0)?) })
}

/// `½‖a - b‖₁`.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_trace_distance(
    a: *const QmonOperator,
    b: *const QmonOperator,
    out: *mut f64,
) -> QmonStatus {
    guard(|| unsafe { write(out, trace_distance(&borrow(a, "a")?.0, &borrow(b, "b")?.0)?) })
}

/// Full dephasing of factor `A` of a `d_a × d_b` state.
///
/// # Safety
/// `rho` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_dephase(
    rho: *const QmonOperator,
    d_a: usize,
    d_b: usize,
    out: *mut *mut QmonOperator,
) -> QmonStatus {
    guard(|| unsafe {
        let (basis, layout) = bipartite(d_a, d_b)?;
        store(out, QmonOperator(dephase(&borrow(rho, "rho")?.0, &basis, &layout)?))
    })
}

/// `(1 - ε) ρ + ε Φ_A(ρ)`.
///
/// # Safety
/// `rho` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_monitor(
    rho: *const QmonOperator,
    d_a: usize,
    d_b: usize,
    epsilon: f64,
    out: *mut *mut QmonOperator,
) -> QmonStatus {
    guard(|| unsafe {
        let (basis, layout) = bipartite(d_a, d_b)?;
        let spec = MonitoringSpec::new(basis, epsilon)?;
        store(out, QmonOperator(monitor(&borrow(rho, "rho")?.0, &spec, &layout)?))
    })
}

/// `S(Φ_A(ρ)) - S(ρ)` in bits.
///
/// # Safety
/// `rho` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_irreality(rho: *const QmonOperator, d_a: usize, d_b: usize, out: *mut f64) -> QmonStatus {
    guard(|| unsafe {
        let (basis, layout) = bipartite(d_a, d_b)?;
        write(out, irreality(&borrow(rho, "rho")?.0, &basis, &layout)?)
    })
}

unsafe fn model_for(phases: *const QmonPhases, n: usize, d_b: usize) -> Result<EnvironmentModel, Failure> {
    let p = unsafe { borrow(phases, "phases") }?;
    Ok(EnvironmentModel::new(p.0.clone(), n, d_b)?)
}

/// State of `A ⊗ B` after interacting with `n` environment qudits.
///
/// # Safety
/// `rho` and `phases` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_system_state_after(
    rho: *const QmonOperator,
    phases: *const QmonPhases,
    n: usize,
    d_b: usize,
    out: *mut *mut QmonOperator,
) -> QmonStatus {
    guard(|| unsafe {
        let model = model_for(phases, n, d_b)?;
        store(out, QmonOperator(system_state_after(&borrow(rho, "rho")?.0, &model)?))
    })
}

/// State of `A ⊗ B ⊗ F_m` after interacting with `n` environment qudits.
///
/// # Safety
/// `rho` and `phases` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qmon_reduced_state(
    rho: *const QmonOperator,
    phases: *const QmonPhases,
    n: usize,
    d_b: usize,
    m: usize,
    out: *mut *mut QmonOperator,
) -> QmonStatus {
    guard(|| unsafe {
        let model = model_for(phases, n, d_b)?;
        store(
            out,
            QmonOperator(reduced_state_structured(&borrow(rho, "rho")?.0, &model, m)?),
        )
    })
}
