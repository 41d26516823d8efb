//! C ABI over `gaugelab`.
//!
//! Models and Gibbs states are opaque heap handles released with their
//! `_free` function. Every call returns a [`GaugelabStatus`]; on failure the
//! message is available from [`gaugelab_last_error`] on the same thread.
//! Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gaugelab::cli::{execute, Command, ExperimentConfig};
use gaugelab::disorder::{nishimori_point_with, CouplingSample};
use gaugelab::gibbs::SpectralGibbs;
use gaugelab::lattice::Lattice;
use gaugelab::nishimori::Scenario;
use gaugelab::operators::{assemble_hamiltonian, z_product, Observable};
use gaugelab::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugelabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Budget = 4,
    Numerical = 5,
    Io = 6,
    /// A report was produced but some checks exceeded their tolerance.
    ChecksFailed = 7,
    Panic = 8,
}

/// Geometry, ensemble and thermal point from an experiment config.
pub struct GaugelabModel {
    config: ExperimentConfig,
    scenario: Scenario,
}

/// Gibbs state of one coupling realization.
pub struct GaugelabGibbs {
    lattice: Lattice,
    state: SpectralGibbs,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(GaugelabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config { .. } => GaugelabStatus::Config,
            Error::Budget { .. } => GaugelabStatus::Budget,
            Error::Eigensolver(_) => GaugelabStatus::Numerical,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => GaugelabStatus::Io,
            _ => GaugelabStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GaugelabStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(GaugelabStatus::InvalidArgument, message.into())
}

/// Runs `body`, recording any failure or panic as the thread's last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GaugelabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GaugelabStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {message}"));
            GaugelabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or NULL after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn gaugelab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gaugelab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a model from the TOML text of an experiment config.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_model_from_toml(toml: *const c_char, out: *mut *mut GaugelabModel) -> GaugelabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let config = ExperimentConfig::from_toml_str(str_arg(toml, "toml")?)?;
        let scenario = config.scenario()?;
        *out = Box::into_raw(Box::new(GaugelabModel { config, scenario }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `gaugelab_model_from_toml` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_model_free(model: *mut GaugelabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of lattice sites.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_model_sites(model: *const GaugelabModel, out: *mut usize) -> GaugelabStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *out_arg(out, "out")? = m.scenario.n_sites();
        Ok(())
    })
}

/// Total number of couplings, i.e. bonds over all families, in the order
/// expected by `gaugelab_gibbs_new`: families in config order, bonds in
/// lexicographic order within each.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_model_couplings(model: *const GaugelabModel, out: *mut usize) -> GaugelabStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        *out_arg(out, "out")? = m.scenario.families.iter().map(|f| f.len()).sum();
        Ok(())
    })
}

/// Sites of bond `index` in the flattened coupling order. Writes up to
/// `capacity` site indices to `sites` and the bond size to `len`.
///
/// # Safety
/// `sites` must hold `capacity` elements; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_model_bond(
    model: *const GaugelabModel,
    index: usize,
    sites: *mut usize,
    capacity: usize,
    len: *mut usize,
) -> GaugelabStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let bond = m
            .scenario
            .families
            .iter()
            .flat_map(|f| f.bonds())
            .nth(index)
            .ok_or_else(|| invalid(format!("bond index {index} out of range")))?;
        *out_arg(len, "len")? = bond.len();
        if capacity < bond.len() {
            return Err(invalid(format!("bond has {} sites, capacity is {capacity}", bond.len())));
        }
        if sites.is_null() {
            return Err(null("sites"));
        }
        std::slice::from_raw_parts_mut(sites, bond.len()).copy_from_slice(bond.sites());
        Ok(())
    })
}

/// Classical Nishimori inverse temperature of order `p`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_model_nishimori_beta(
    model: *const GaugelabModel,
    p: usize,
    out: *mut f64,
) -> GaugelabStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let s = &m.scenario;
        let nm = nishimori_point_with(&s.ensemble, s.deterministic_field, Some(s.beta))?;
        *out_arg(out, "out")? = nm.beta(p).ok_or_else(|| invalid(format!("no order p = {p} in the ensemble")))?;
        Ok(())
    })
}

/// Diagonalizes `H(J, h)` at inverse temperature `beta` for the flattened
/// couplings `J` (see `gaugelab_model_couplings`).
///
/// # Safety
/// `couplings` must hold `len` doubles; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_gibbs_new(
    model: *const GaugelabModel,
    couplings: *const f64,
    len: usize,
    h: f64,
    beta: f64,
    out: *mut *mut GaugelabGibbs,
) -> GaugelabStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let flat = slice_arg(couplings, len, "couplings")?;
        let s = &m.scenario;
        let expected: usize = s.families.iter().map(|f| f.len()).sum();
        if flat.len() != expected {
            return Err(invalid(format!("expected {expected} couplings, got {}", flat.len())));
        }
        let mut rest = flat;
        let values = s
            .families
            .iter()
            .map(|f| {
                let (head, tail) = rest.split_at(f.len());
                rest = tail;
                head.to_vec()
            })
            .collect();
        let ham = assemble_hamiltonian(&s.lattice, &s.families, &CouplingSample::from_values(values), h)?;
        let state = SpectralGibbs::with_cap(&ham, beta, m.config.budget.quantum_spins)?;
        *out = Box::into_raw(Box::new(GaugelabGibbs {
            lattice: s.lattice.clone(),
            state,
        }));
        Ok(())
    })
}

/// # Safety
/// `gibbs` must come from `gaugelab_gibbs_new` and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_gibbs_free(gibbs: *mut GaugelabGibbs) {
    if !gibbs.is_null() {
        drop(Box::from_raw(gibbs));
    }
}

/// `log Z`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_gibbs_log_z(gibbs: *const GaugelabGibbs, out: *mut f64) -> GaugelabStatus {
    guard(|| {
        let g = gibbs.as_ref().ok_or_else(|| null("gibbs"))?;
        *out_arg(out, "out")? = g.state.log_z();
        Ok(())
    })
}

unsafe fn z_op(g: &GaugelabGibbs, sites: *const usize, len: usize, what: &str) -> Result<Observable, Failure> {
    let sites = slice_arg(sites, len, what)?;
    Ok(z_product(&g.lattice, sites)?.into_observable())
}

/// `⟨σ^z_X⟩` for the site set `X`.
///
/// # Safety
/// `sites` must hold `len` indices; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_gibbs_z_expectation(
    gibbs: *const GaugelabGibbs,
    sites: *const usize,
    len: usize,
    out: *mut f64,
) -> GaugelabStatus {
    guard(|| {
        let g = gibbs.as_ref().ok_or_else(|| null("gibbs"))?;
        let a = z_op(g, sites, len, "sites")?;
        *out_arg(out, "out")? = g.state.expectation(&a)?;
        Ok(())
    })
}

/// Duhamel function `(σ^z_X, σ^z_Y)`, or its truncated form when
/// `truncated` is nonzero.
///
/// # Safety
/// Site arrays must hold their stated lengths; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_gibbs_z_duhamel(
    gibbs: *const GaugelabGibbs,
    x: *const usize,
    x_len: usize,
    y: *const usize,
    y_len: usize,
    truncated: i32,
    out: *mut f64,
) -> GaugelabStatus {
    guard(|| {
        let g = gibbs.as_ref().ok_or_else(|| null("gibbs"))?;
        let a = z_op(g, x, x_len, "x")?;
        let b = z_op(g, y, y_len, "y")?;
        *out_arg(out, "out")? = if truncated != 0 {
            g.state.truncated_duhamel(&a, &b)?
        } else {
            g.state.duhamel(&a, &b)?
        };
        Ok(())
    })
}

/// Runs a CLI subcommand (`verify-gauge`, `verify-identities`, `bounds`,
/// `susceptibility`, `sweep`) on a config and returns the JSON report in
/// `json_out`, to be released with `gaugelab_string_free`. `threads = 0`
/// uses all cores. Returns `CHECKS_FAILED` (with the report) when some
/// check exceeded its tolerance. Nothing is written to disk.
///
/// # Safety
/// Strings must be NUL-terminated; `json_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_run(
    subcommand: *const c_char,
    toml: *const c_char,
    threads: usize,
    json_out: *mut *mut c_char,
) -> GaugelabStatus {
    let mut failed = 0;
    let status = guard(|| {
        let out = out_arg(json_out, "json_out")?;
        *out = ptr::null_mut();
        let cmd = match str_arg(subcommand, "subcommand")? {
            "verify-gauge" => Command::VerifyGauge,
            "verify-identities" => Command::VerifyIdentities,
            "bounds" => Command::Bounds,
            "susceptibility" => Command::Susceptibility,
            "sweep" => Command::Sweep,
            other => return Err(invalid(format!("unknown subcommand `{other}`"))),
        };
        let config = ExperimentConfig::from_toml_str(str_arg(toml, "toml")?)?;
        let report = execute(cmd, &config, (threads > 0).then_some(threads))?;
        failed = report.summary.failures;
        let json = serde_json::to_string(&report).map_err(Error::from)?;
        *out = CString::new(json).map_err(|e| invalid(e.to_string()))?.into_raw();
        Ok(())
    });
    if status == GaugelabStatus::Ok && failed > 0 {
        set_error(format!("{failed} checks exceeded their tolerance"));
        return GaugelabStatus::ChecksFailed;
    }
    status
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn gaugelab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
