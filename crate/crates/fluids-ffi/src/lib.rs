//! C ABI over the fluids crate. Fields travel as opaque handles created and
//! freed here; every fallible call returns an [`FlStatus`] and records a
//! human-readable message retrievable with [`fl_last_error_message`]. All
//! functions are safe to call from any thread; the error message is
//! thread-local.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fluids::circle_field::{make_field, SymmetrySpec};
use fluids::harness::config::ExperimentConfig;
use fluids::harness::execute::execute_plan;
use fluids::harness::HarnessError;
use fluids::kernels::{solve_stream_euler, solve_stream_sqg};
use fluids::lift2d::{EulerLift, PlanePoint, SqgLift};
use fluids::pointvortex::{gap_hamiltonian, gap_rhs};
use fluids::CircleField;

/// Outcome of an ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of the supported range.
    InvalidArgument = 2,
    /// The dynamics halted the requested run.
    Physics = 3,
    /// A filesystem or serialization failure.
    Io = 4,
    /// A string argument was not valid UTF-8.
    Utf8 = 5,
    /// An unexpected internal failure; the library state is still sound.
    Internal = 6,
}

/// Opaque handle to a periodic profile on the circle.
pub struct FlField(CircleField);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn record_error(status: FlStatus, message: &str) -> FlStatus {
    let owned = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("unrepresentable error message").expect("static text"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
    status
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn harness_status(e: &HarnessError) -> FlStatus {
    match e {
        HarnessError::Io(_) => FlStatus::Io,
        HarnessError::Config(_) => FlStatus::InvalidArgument,
        HarnessError::Physics(_) => FlStatus::Physics,
    }
}

/// Runs `body` with panic isolation so no unwind crosses the ABI.
fn guarded(body: impl FnOnce() -> FlStatus) -> FlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic with a non-string payload".to_string());
            record_error(FlStatus::Internal, &msg)
        }
    }
}

unsafe fn field_ref<'a>(field: *const FlField) -> Option<&'a CircleField> {
    field.as_ref().map(|f| &f.0)
}

unsafe fn emit_field(out: *mut *mut FlField, value: CircleField) -> FlStatus {
    *out = Box::into_raw(Box::new(FlField(value)));
    clear_error();
    FlStatus::Ok
}

/// Builds a field from `n` samples at the uniform grid nodes.
///
/// # Safety
///
/// `values` must point to `n` readable doubles and `out` must be a valid
/// destination for one pointer. On success `*out` owns the field and must be
/// released with [`fl_field_free`].
#[no_mangle]
pub unsafe extern "C" fn fl_field_create(
    values: *const f64,
    n: usize,
    out: *mut *mut FlField,
) -> FlStatus {
    if values.is_null() || out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_field_create: null pointer");
    }
    guarded(|| {
        let samples = std::slice::from_raw_parts(values, n);
        match make_field(samples) {
            Ok(field) => emit_field(out, field),
            Err(e) => record_error(FlStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// Releases a field handle. A null pointer is ignored.
///
/// # Safety
///
/// `field` must be null or a pointer previously produced by this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_field_free(field: *mut FlField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Writes the grid size of a field to `out`.
///
/// # Safety
///
/// `field` must be a live handle and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn fl_field_n(field: *const FlField, out: *mut usize) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_field_n: null field");
    };
    if out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_field_n: null out");
    }
    *out = f.n();
    clear_error();
    FlStatus::Ok
}

/// Copies the nodal values of a field into `out`, which holds `len` doubles;
/// `len` must equal the grid size.
///
/// # Safety
///
/// `field` must be a live handle and `out` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn fl_field_values(
    field: *const FlField,
    out: *mut f64,
    len: usize,
) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_field_values: null field");
    };
    if out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_field_values: null out");
    }
    if len != f.n() {
        return record_error(
            FlStatus::InvalidArgument,
            &format!("fl_field_values: buffer holds {len} but the grid has {}", f.n()),
        );
    }
    guarded(|| {
        let values = f.values();
        std::ptr::copy_nonoverlapping(values.as_ptr(), out, len);
        clear_error();
        FlStatus::Ok
    })
}

/// Evaluates the trigonometric interpolant of the field at `theta`.
///
/// # Safety
///
/// `field` must be a live handle and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn fl_field_eval(
    field: *const FlField,
    theta: f64,
    out: *mut f64,
) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_field_eval: null field");
    };
    if out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_field_eval: null out");
    }
    guarded(|| {
        *out = f.eval(theta);
        clear_error();
        FlStatus::Ok
    })
}

/// Spectral derivative of a field, as a new handle.
///
/// # Safety
///
/// `field` must be a live handle and `out` a valid destination; the result
/// must be released with [`fl_field_free`].
#[no_mangle]
pub unsafe extern "C" fn fl_field_derivative(
    field: *const FlField,
    out: *mut *mut FlField,
) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_field_derivative: null field");
    };
    if out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_field_derivative: null out");
    }
    guarded(|| emit_field(out, f.derivative()))
}

/// Hilbert transform of a field, as a new handle.
///
/// # Safety
///
/// Same contract as [`fl_field_derivative`].
#[no_mangle]
pub unsafe extern "C" fn fl_field_hilbert(
    field: *const FlField,
    out: *mut *mut FlField,
) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_field_hilbert: null field");
    };
    if out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_field_hilbert: null out");
    }
    guarded(|| emit_field(out, f.hilbert()))
}

/// Applies `|nabla|^-1` to a mean-free field, as a new handle.
///
/// # Safety
///
/// Same contract as [`fl_field_derivative`].
#[no_mangle]
pub unsafe extern "C" fn fl_field_inv_modulus(
    field: *const FlField,
    out: *mut *mut FlField,
) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_field_inv_modulus: null field");
    };
    if out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_field_inv_modulus: null out");
    }
    guarded(|| match f.inv_modulus() {
        Ok(result) => emit_field(out, result),
        Err(e) => record_error(FlStatus::InvalidArgument, &e.to_string()),
    })
}

/// Projects a field onto the order-`m` rotational symmetry class; when
/// `odd_axis` is non-null the odd reflection about that axis is enforced as
/// well.
///
/// # Safety
///
/// `field` must be a live handle, `odd_axis` null or a readable double, and
/// `out` a valid destination; the result must be released with
/// [`fl_field_free`].
#[no_mangle]
pub unsafe extern "C" fn fl_field_project(
    field: *const FlField,
    m: u32,
    odd_axis: *const f64,
    out: *mut *mut FlField,
) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_field_project: null field");
    };
    if out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_field_project: null out");
    }
    guarded(|| {
        let axis = odd_axis.as_ref().copied();
        match SymmetrySpec::new(m, axis) {
            Ok(spec) => emit_field(out, f.project_symmetry(&spec)),
            Err(e) => record_error(FlStatus::InvalidArgument, &e.to_string()),
        }
    })
}

/// Solves the transport-model stream equation `H` from a vorticity profile.
/// When `mode_two_residual` is non-null it receives the dropped resonant
/// content at wavenumber 2.
///
/// # Safety
///
/// `field` must be a live handle, `mode_two_residual` null or writable, and
/// `out` a valid destination; the result must be released with
/// [`fl_field_free`].
#[no_mangle]
pub unsafe extern "C" fn fl_stream_euler(
    field: *const FlField,
    mode_two_residual: *mut f64,
    out: *mut *mut FlField,
) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_stream_euler: null field");
    };
    if out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_stream_euler: null out");
    }
    guarded(|| {
        let solution = solve_stream_euler(f);
        if let Some(slot) = mode_two_residual.as_mut() {
            *slot = solution.mode_two_residual;
        }
        emit_field(out, solution.stream)
    })
}

/// Solves the stretching-model stream equation `G` from a mean-free scalar
/// profile.
///
/// # Safety
///
/// Same contract as [`fl_field_derivative`].
#[no_mangle]
pub unsafe extern "C" fn fl_stream_sqg(field: *const FlField, out: *mut *mut FlField) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_stream_sqg: null field");
    };
    if out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_stream_sqg: null out");
    }
    guarded(|| match solve_stream_sqg(f) {
        Ok(stream) => emit_field(out, stream),
        Err(e) => record_error(FlStatus::InvalidArgument, &e.to_string()),
    })
}

/// Right-hand side of the two-gap system of three identical vortices.
///
/// # Safety
///
/// `out_dz1` and `out_dz2` must be valid destinations.
#[no_mangle]
pub unsafe extern "C" fn fl_gap_rhs(
    z1: f64,
    z2: f64,
    out_dz1: *mut f64,
    out_dz2: *mut f64,
) -> FlStatus {
    if out_dz1.is_null() || out_dz2.is_null() {
        return record_error(FlStatus::NullPointer, "fl_gap_rhs: null out");
    }
    let [dz1, dz2] = gap_rhs([z1, z2]);
    *out_dz1 = dz1;
    *out_dz2 = dz2;
    clear_error();
    FlStatus::Ok
}

/// Conserved energy of the two-gap system.
///
/// # Safety
///
/// `out` must be a valid destination.
#[no_mangle]
pub unsafe extern "C" fn fl_gap_hamiltonian(z1: f64, z2: f64, out: *mut f64) -> FlStatus {
    if out.is_null() {
        return record_error(FlStatus::NullPointer, "fl_gap_hamiltonian: null out");
    }
    *out = gap_hamiltonian([z1, z2]);
    clear_error();
    FlStatus::Ok
}

/// Evaluates the plane velocity, stream function, and vorticity of the
/// transport-model lift of `field` at the point `(x1, x2)`.
///
/// # Safety
///
/// `field` must be a live handle; the four out pointers must be valid
/// destinations.
#[no_mangle]
pub unsafe extern "C" fn fl_lift_euler(
    field: *const FlField,
    x1: f64,
    x2: f64,
    out_omega: *mut f64,
    out_u1: *mut f64,
    out_u2: *mut f64,
    out_psi: *mut f64,
) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_lift_euler: null field");
    };
    if out_omega.is_null() || out_u1.is_null() || out_u2.is_null() || out_psi.is_null() {
        return record_error(FlStatus::NullPointer, "fl_lift_euler: null out");
    }
    guarded(|| {
        let value = EulerLift::new(f).at(&PlanePoint::from_cartesian(x1, x2));
        *out_omega = value.omega;
        *out_u1 = value.u[0];
        *out_u2 = value.u[1];
        *out_psi = value.psi;
        clear_error();
        FlStatus::Ok
    })
}

/// Evaluates the plane velocity, stream function, and scalar of the
/// stretching-model lift of a mean-free `field` at the point `(x1, x2)`.
///
/// # Safety
///
/// Same contract as [`fl_lift_euler`].
#[no_mangle]
pub unsafe extern "C" fn fl_lift_sqg(
    field: *const FlField,
    x1: f64,
    x2: f64,
    out_theta: *mut f64,
    out_u1: *mut f64,
    out_u2: *mut f64,
    out_psi: *mut f64,
) -> FlStatus {
    let Some(f) = field_ref(field) else {
        return record_error(FlStatus::NullPointer, "fl_lift_sqg: null field");
    };
    if out_theta.is_null() || out_u1.is_null() || out_u2.is_null() || out_psi.is_null() {
        return record_error(FlStatus::NullPointer, "fl_lift_sqg: null out");
    }
    guarded(|| match SqgLift::new(f, 0.5) {
        Ok(lift) => {
            let value = lift.at(&PlanePoint::from_cartesian(x1, x2));
            *out_theta = value.theta_scalar;
            *out_u1 = value.u[0];
            *out_u2 = value.u[1];
            *out_psi = value.psi;
            clear_error();
            FlStatus::Ok
        }
        Err(e) => record_error(FlStatus::InvalidArgument, &e.to_string()),
    })
}

/// Runs a simulation described by a TOML config string, exactly like the
/// `fluids` CLI subcommands driven by `--config`. On success (and on a
/// dynamics halt, which returns `FL_STATUS_PHYSICS`) `*out_dir` receives the
/// finished run directory as a string owned by the caller; release it with
/// [`fl_string_free`].
///
/// # Safety
///
/// `config` must be a NUL-terminated string and `out_dir` a valid
/// destination.
#[no_mangle]
pub unsafe extern "C" fn fl_run_config_str(
    config: *const c_char,
    out_dir: *mut *mut c_char,
) -> FlStatus {
    if config.is_null() || out_dir.is_null() {
        return record_error(FlStatus::NullPointer, "fl_run_config_str: null pointer");
    }
    *out_dir = std::ptr::null_mut();
    let Ok(source) = CStr::from_ptr(config).to_str() else {
        return record_error(FlStatus::Utf8, "fl_run_config_str: config is not UTF-8");
    };
    guarded(|| {
        let outcome = (|| {
            let cfg = ExperimentConfig::from_toml(source)?;
            let plan = cfg.validate()?;
            execute_plan(&plan, source, |_, _, _, _| Ok(()))
        })();
        match outcome {
            Ok(outcome) => {
                let dir = outcome.dir.to_string_lossy().into_owned();
                let owned = CString::new(dir)
                    .unwrap_or_else(|_| CString::new("").expect("static text"));
                *out_dir = owned.into_raw();
                match outcome.abort {
                    Some(msg) => record_error(FlStatus::Physics, &msg),
                    None => {
                        clear_error();
                        FlStatus::Ok
                    }
                }
            }
            Err(e) => record_error(harness_status(&e), &e.to_string()),
        }
    })
}

/// Returns the message recorded by the last failing call on this thread as
/// a caller-owned string, or null when the last call succeeded. Release it
/// with [`fl_string_free`].
#[no_mangle]
pub extern "C" fn fl_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|msg| msg.clone().into_raw())
            .unwrap_or(std::ptr::null_mut())
    })
}

/// Releases a string returned by this library. A null pointer is ignored.
///
/// # Safety
///
/// `s` must be null or a string previously returned by this library and not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn fl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string; do not free it.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
