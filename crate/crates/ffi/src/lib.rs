//! C ABI for rentsim.
//!
//! Every function returns a [`RentsimStatus`]; results come back through out
//! pointers. After a non-OK status, [`rentsim_last_error`] describes the
//! failure on the calling thread. Handles are opaque and must be released
//! with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use rentsim::calibration::{isotonic_regression_bits, pav, platt_scaling, CalibratorFn};
use rentsim::evaluation::{rent, OutcomeModel};
use rentsim::policy::{
    budget_for_neighborhoods, non_targeting, plan, CostModel, NeighborhoodOrder, PolicyKind,
};
use rentsim::ranking::{
    footrule_normalizer, kendall_tau, mallows_normalizer, sample_rim, spearman_footrule,
    MallowsParams, Ranking,
};
use rentsim::seed::stream_rng;
use rentsim::spatial::{
    assign_to_neighborhoods, gini_of_counts, neighborhood_stats, sample_city, CityConfig, CityModel,
};
use rentsim::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RentsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A quantity is undefined for the input, e.g. the Gini index of all zeros.
    Undefined = 3,
    DegenerateFit = 4,
    Data = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RentsimPolicy {
    NonTargeting = 0,
    Hpt = 1,
    Tpt = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RentsimCalibratorKind {
    Platt = 0,
    Isotonic = 1,
}

/// Expected discoveries of the non-targeting walk (`s_b`) and a targeting
/// policy (`s_t`) at the same budget. `rent` is NaN and `rent_defined` is
/// false when `s_t` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RentsimRent {
    pub budget: f64,
    pub s_b: f64,
    pub s_t: f64,
    pub rent: f64,
    pub rent_defined: bool,
}

/// A city: properties ranked by risk, grouped into neighborhoods.
pub struct RentsimCity(CityModel);

/// A fitted score-to-probability map.
pub struct RentsimCalibrator(CalibratorFn);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> RentsimStatus {
    match err {
        Error::InvalidArgument(_) | Error::Unsupported(_) => RentsimStatus::InvalidArgument,
        Error::UndefinedMean => RentsimStatus::Undefined,
        Error::DegenerateFit(_) => RentsimStatus::DegenerateFit,
        Error::Data(_) | Error::Parse { .. } | Error::EmptyInput(_) | Error::Csv(_) => {
            RentsimStatus::Data
        }
        Error::Io(_) => RentsimStatus::Io,
    }
}

struct Failure(RentsimStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RentsimStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RentsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RentsimStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            RentsimStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn ranking(items: *const usize, n: usize) -> Result<Ranking, Failure> {
    Ok(Ranking::new(input(items, n, "ranking")?.to_vec())?)
}

unsafe fn city<'a>(c: *const RentsimCity) -> Result<&'a CityModel, Failure> {
    c.as_ref().map(|c| &c.0).ok_or_else(|| null("city"))
}

unsafe fn calibrator<'a>(c: *const RentsimCalibrator) -> Result<&'a CalibratorFn, Failure> {
    c.as_ref().map(|c| &c.0).ok_or_else(|| null("calibrator"))
}

fn policy_kind(p: RentsimPolicy) -> PolicyKind {
    match p {
        RentsimPolicy::NonTargeting => PolicyKind::NonTargeting,
        RentsimPolicy::Hpt => PolicyKind::Hpt,
        RentsimPolicy::Tpt => PolicyKind::Tpt,
    }
}

/// Message for the last failure on this thread. The pointer stays valid
/// until the next failing call on the same thread; empty if none.
#[no_mangle]
pub extern "C" fn rentsim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rentsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Kendall tau distance between two rankings of `1..=n`.
///
/// # Safety
/// `a` and `b` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rentsim_kendall_tau(
    a: *const usize,
    b: *const usize,
    n: usize,
    out: *mut u64,
) -> RentsimStatus {
    guard(|| {
        let d = kendall_tau(&ranking(a, n)?, &ranking(b, n)?)?;
        write(out, d, "out")
    })
}

/// Spearman footrule distance between two rankings of `1..=n`.
///
/// # Safety
/// As for [`rentsim_kendall_tau`].
#[no_mangle]
pub unsafe extern "C" fn rentsim_spearman_footrule(
    a: *const usize,
    b: *const usize,
    n: usize,
    out: *mut u64,
) -> RentsimStatus {
    guard(|| {
        let d = spearman_footrule(&ranking(a, n)?, &ranking(b, n)?)?;
        write(out, d, "out")
    })
}

/// Kendall Mallows normalizer `Z(n, phi)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rentsim_mallows_normalizer(
    n: usize,
    phi: f64,
    out: *mut f64,
) -> RentsimStatus {
    guard(|| write(out, mallows_normalizer(n, phi)?, "out"))
}

/// Footrule Mallows normalizer by enumeration; `n` is at most 8.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rentsim_footrule_normalizer(
    n: usize,
    phi: f64,
    out: *mut f64,
) -> RentsimStatus {
    guard(|| write(out, footrule_normalizer(n, phi)?, "out"))
}

/// Draws one Kendall Mallows ranking around `center` by repeated insertion.
/// The same `seed` always yields the same ranking.
///
/// # Safety
/// `center` must hold `n` values and `out` must have room for `n`.
#[no_mangle]
pub unsafe extern "C" fn rentsim_sample_mallows(
    center: *const usize,
    n: usize,
    phi: f64,
    seed: u64,
    out: *mut usize,
) -> RentsimStatus {
    guard(|| {
        let params = MallowsParams::kendall(ranking(center, n)?, phi)?;
        let r = sample_rim(&params, &mut stream_rng(seed, &[]))?;
        output(out, n, "out")?.copy_from_slice(r.items());
        Ok(())
    })
}

/// Pool-adjacent-violators fit of `values` with positive `weights`.
///
/// # Safety
/// `values` and `weights` must hold `n` values; `out` must have room for `n`.
#[no_mangle]
pub unsafe extern "C" fn rentsim_pav(
    values: *const f64,
    weights: *const f64,
    n: usize,
    out: *mut f64,
) -> RentsimStatus {
    guard(|| {
        let (v, w) = (input(values, n, "values")?, input(weights, n, "weights")?);
        if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) || v.iter().any(|x| !x.is_finite()) {
            return Err(Failure(
                RentsimStatus::InvalidArgument,
                "values must be finite and weights positive".into(),
            ));
        }
        output(out, n, "out")?.copy_from_slice(&pav(v, w));
        Ok(())
    })
}

/// Samples a city of `neighborhoods` equal neighborhoods around the
/// homogeneous central ranking.
///
/// # Safety
/// `out` must be writable; on success it receives a handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn rentsim_city_sample(
    neighborhoods: usize,
    properties_per: usize,
    high_risk_fraction: f64,
    phi: f64,
    seed: u64,
    out: *mut *mut RentsimCity,
) -> RentsimStatus {
    guard(|| {
        let config = CityConfig::uniform(neighborhoods, properties_per, high_risk_fraction)?;
        let model = sample_city(&config, phi, &mut stream_rng(seed, &[]))?;
        write(out, Box::into_raw(Box::new(RentsimCity(model))), "out")
    })
}

/// Builds a city from an explicit ranking: the first `sizes[0]` slots form
/// neighborhood 0, the next `sizes[1]` neighborhood 1, and so on.
///
/// # Safety
/// `ranking_items` must hold `n` values, `sizes` `num_sizes` values, and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rentsim_city_from_ranking(
    ranking_items: *const usize,
    n: usize,
    sizes: *const usize,
    num_sizes: usize,
    high_risk_fraction: f64,
    out: *mut *mut RentsimCity,
) -> RentsimStatus {
    guard(|| {
        let config = CityConfig::with_sizes(
            input(sizes, num_sizes, "sizes")?.to_vec(),
            high_risk_fraction,
        )?;
        let model = assign_to_neighborhoods(&ranking(ranking_items, n)?, &config)?;
        write(out, Box::into_raw(Box::new(RentsimCity(model))), "out")
    })
}

/// Releases a city; null is ignored.
///
/// # Safety
/// `city` must come from a `rentsim_city_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn rentsim_city_free(city: *mut RentsimCity) {
    if !city.is_null() {
        drop(Box::from_raw(city));
    }
}

/// # Safety
/// `city` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rentsim_city_num_neighborhoods(
    city: *const RentsimCity,
    out: *mut usize,
) -> RentsimStatus {
    guard(|| write(out, self::city(city)?.num_neighborhoods(), "out"))
}

/// # Safety
/// `city` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rentsim_city_total_properties(
    city: *const RentsimCity,
    out: *mut usize,
) -> RentsimStatus {
    guard(|| write(out, self::city(city)?.total_properties(), "out"))
}

/// Copies the High-Risk count of each neighborhood into `out`, which must
/// have room for `len >= num_neighborhoods` values.
///
/// # Safety
/// `city` must be a live handle and `out` must have room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn rentsim_city_high_risk_counts(
    city: *const RentsimCity,
    out: *mut usize,
    len: usize,
) -> RentsimStatus {
    guard(|| {
        let counts = neighborhood_stats(self::city(city)?).high_risk_counts;
        if len < counts.len() {
            return Err(Failure(
                RentsimStatus::BufferTooSmall,
                format!("need room for {} counts, got {len}", counts.len()),
            ));
        }
        output(out, counts.len(), "out")?.copy_from_slice(&counts);
        Ok(())
    })
}

/// Gini index of the per-neighborhood High-Risk counts.
///
/// # Safety
/// `city` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rentsim_city_gini(
    city: *const RentsimCity,
    out: *mut f64,
) -> RentsimStatus {
    guard(|| {
        let g = gini_of_counts(&neighborhood_stats(self::city(city)?).high_risk_counts)?;
        write(out, g, "out")
    })
}

/// RENT of `policy` against the non-targeting walk. The budget covers the
/// first `m` neighborhoods in High-Risk-count order at inter-neighborhood
/// cost `alpha`; High-Risk properties are evicted with probability `p`,
/// the rest with `q`.
///
/// # Safety
/// `city` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rentsim_city_rent(
    city: *const RentsimCity,
    m: usize,
    alpha: f64,
    policy: RentsimPolicy,
    p: f64,
    q: f64,
    out: *mut RentsimRent,
) -> RentsimStatus {
    guard(|| {
        let model = self::city(city)?;
        let cost = CostModel::new(alpha)?;
        let outcome = OutcomeModel::new(p, q)?;
        let order = NeighborhoodOrder::by_high_risk_count(model);
        let budget = budget_for_neighborhoods(model, &order, m, &cost)?;
        let b = non_targeting(model, &order, budget, &cost)?;
        let t = plan(policy_kind(policy), model, &order, budget, &cost)?;
        let r = rent(&b, &t, &outcome)?;
        write(
            out,
            RentsimRent {
                budget: r.budget,
                s_b: r.s_b,
                s_t: r.s_t,
                rent: r.rent.unwrap_or(f64::NAN),
                rent_defined: r.rent.is_some(),
            },
            "out",
        )
    })
}

/// Fits a calibrator to `n` scores and binary outcomes (nonzero is true).
///
/// # Safety
/// `scores` and `outcomes` must hold `n` values; `out` must be writable and
/// receives a handle owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn rentsim_calibrator_fit(
    kind: RentsimCalibratorKind,
    scores: *const f64,
    outcomes: *const u8,
    n: usize,
    out: *mut *mut RentsimCalibrator,
) -> RentsimStatus {
    guard(|| {
        let s = input(scores, n, "scores")?;
        let o: Vec<bool> = input(outcomes, n, "outcomes")?
            .iter()
            .map(|&b| b != 0)
            .collect();
        let fitted = match kind {
            RentsimCalibratorKind::Platt => platt_scaling(s, &o)?,
            RentsimCalibratorKind::Isotonic => isotonic_regression_bits(s, &o)?,
        };
        write(
            out,
            Box::into_raw(Box::new(RentsimCalibrator(fitted))),
            "out",
        )
    })
}

/// Parses a calibrator from the text written by [`rentsim_calibrator_to_text`].
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rentsim_calibrator_from_text(
    text: *const c_char,
    out: *mut *mut RentsimCalibrator,
) -> RentsimStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Failure(RentsimStatus::InvalidArgument, "text is not UTF-8".into()))?;
        let fitted = CalibratorFn::from_text(text)?;
        write(
            out,
            Box::into_raw(Box::new(RentsimCalibrator(fitted))),
            "out",
        )
    })
}

/// Releases a calibrator; null is ignored.
///
/// # Safety
/// `calibrator` must come from a `rentsim_calibrator_*` constructor and not
/// be used again.
#[no_mangle]
pub unsafe extern "C" fn rentsim_calibrator_free(calibrator: *mut RentsimCalibrator) {
    if !calibrator.is_null() {
        drop(Box::from_raw(calibrator));
    }
}

/// Maps `n` scores to probabilities.
///
/// # Safety
/// `calibrator` must be a live handle, `scores` must hold `n` values and
/// `out` must have room for `n`.
#[no_mangle]
pub unsafe extern "C" fn rentsim_calibrator_apply(
    calibrator: *const RentsimCalibrator,
    scores: *const f64,
    n: usize,
    out: *mut f64,
) -> RentsimStatus {
    guard(|| {
        let cal = self::calibrator(calibrator)?;
        let s = input(scores, n, "scores")?;
        if s.iter().any(|x| !x.is_finite()) {
            return Err(Failure(
                RentsimStatus::InvalidArgument,
                "scores must be finite".into(),
            ));
        }
        output(out, n, "out")?.copy_from_slice(&cal.apply_all(s));
        Ok(())
    })
}

/// Serializes a calibrator. The string is owned by the caller and must be
/// released with [`rentsim_string_free`].
///
/// # Safety
/// `calibrator` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rentsim_calibrator_to_text(
    calibrator: *const RentsimCalibrator,
    out: *mut *mut c_char,
) -> RentsimStatus {
    guard(|| {
        let text = CString::new(self::calibrator(calibrator)?.to_text())
            .map_err(|_| Failure(RentsimStatus::Data, "calibrator text contains NUL".into()))?;
        write(out, text.into_raw(), "out")
    })
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn rentsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
