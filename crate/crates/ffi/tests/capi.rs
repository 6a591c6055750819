use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use rentsim_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(rentsim_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn distances_and_normalizers() {
    let a = [1usize, 2, 3, 4];
    let b = [4usize, 3, 2, 1];
    let mut d = 0u64;
    unsafe {
        assert_eq!(
            rentsim_kendall_tau(a.as_ptr(), b.as_ptr(), 4, &mut d),
            RentsimStatus::Ok
        );
        assert_eq!(d, 6);
        assert_eq!(
            rentsim_spearman_footrule(a.as_ptr(), b.as_ptr(), 4, &mut d),
            RentsimStatus::Ok
        );
        assert_eq!(d, 8);
    }
    let mut z = 0.0;
    unsafe {
        assert_eq!(
            rentsim_mallows_normalizer(3, 0.5, &mut z),
            RentsimStatus::Ok
        );
        // (1)(1 + .5)(1 + .5 + .25)
        assert!((z - 2.625).abs() < 1e-12);
        assert_eq!(
            rentsim_footrule_normalizer(3, 1.0, &mut z),
            RentsimStatus::Ok
        );
        assert!((z - 6.0).abs() < 1e-12);
        assert_eq!(
            rentsim_mallows_normalizer(3, -0.1, &mut z),
            RentsimStatus::InvalidArgument
        );
    }
    assert!(last_error().contains("phi"), "{}", last_error());
}

#[test]
fn bad_pointers_and_rankings_are_reported() {
    let a = [1usize, 1, 3];
    let mut d = 0u64;
    unsafe {
        assert_eq!(
            rentsim_kendall_tau(a.as_ptr(), a.as_ptr(), 3, &mut d),
            RentsimStatus::InvalidArgument
        );
        assert_eq!(
            rentsim_kendall_tau(ptr::null(), a.as_ptr(), 3, &mut d),
            RentsimStatus::NullPointer
        );
        let id = [1usize, 2, 3];
        assert_eq!(
            rentsim_kendall_tau(id.as_ptr(), id.as_ptr(), 3, ptr::null_mut()),
            RentsimStatus::NullPointer
        );
    }
    assert_eq!(last_error(), "out is null");
}

#[test]
fn sampling_is_seeded() {
    let center: Vec<usize> = (1..=20).collect();
    let (mut x, mut y) = (vec![0usize; 20], vec![0usize; 20]);
    unsafe {
        assert_eq!(
            rentsim_sample_mallows(center.as_ptr(), 20, 0.8, 7, x.as_mut_ptr()),
            RentsimStatus::Ok
        );
        assert_eq!(
            rentsim_sample_mallows(center.as_ptr(), 20, 0.8, 7, y.as_mut_ptr()),
            RentsimStatus::Ok
        );
    }
    assert_eq!(x, y);
    let mut sorted = x.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, center);
    unsafe {
        assert_eq!(
            rentsim_sample_mallows(center.as_ptr(), 20, 0.0, 1, x.as_mut_ptr()),
            RentsimStatus::Ok
        );
    }
    assert_eq!(x, center);
}

#[test]
fn city_handle_lifecycle() {
    let mut city: *mut RentsimCity = ptr::null_mut();
    unsafe {
        assert_eq!(
            rentsim_city_sample(30, 20, 0.2, 0.0, 3, &mut city),
            RentsimStatus::Ok
        );
        let (mut nb, mut total) = (0usize, 0usize);
        assert_eq!(
            rentsim_city_num_neighborhoods(city, &mut nb),
            RentsimStatus::Ok
        );
        assert_eq!(
            rentsim_city_total_properties(city, &mut total),
            RentsimStatus::Ok
        );
        assert_eq!((nb, total), (30, 600));

        let mut counts = vec![0usize; 30];
        assert_eq!(
            rentsim_city_high_risk_counts(city, counts.as_mut_ptr(), 29),
            RentsimStatus::BufferTooSmall
        );
        assert_eq!(
            rentsim_city_high_risk_counts(city, counts.as_mut_ptr(), 30),
            RentsimStatus::Ok
        );
        assert_eq!(counts.iter().sum::<usize>(), 120);
        assert_eq!(counts.iter().filter(|&&c| c == 20).count(), 6);

        let mut g = 0.0;
        assert_eq!(rentsim_city_gini(city, &mut g), RentsimStatus::Ok);
        assert_eq!(g, 0.8);

        let mut r = RentsimRent::default();
        assert_eq!(
            rentsim_city_rent(city, 4, 3.0, RentsimPolicy::Hpt, 1.0, 0.0, &mut r),
            RentsimStatus::Ok
        );
        assert!(r.rent_defined);
        assert_eq!(r.rent, 1.0);
        assert_eq!(
            rentsim_city_rent(city, 4, 3.0, RentsimPolicy::Tpt, 1.0, 0.0, &mut r),
            RentsimStatus::Ok
        );
        assert_eq!(r.rent, 1.0);
        assert_eq!(
            rentsim_city_rent(city, 31, 3.0, RentsimPolicy::Hpt, 1.0, 0.0, &mut r),
            RentsimStatus::InvalidArgument
        );
        rentsim_city_free(city);
        rentsim_city_free(ptr::null_mut());

        let mut g = 0.0;
        assert_eq!(
            rentsim_city_gini(ptr::null(), &mut g),
            RentsimStatus::NullPointer
        );
    }
}

#[test]
fn city_from_explicit_ranking() {
    // slots 1..=4 are neighborhood 0, 5..=6 neighborhood 1; the top 3 ranks are High-Risk
    let ranking = [4usize, 5, 6, 1, 2, 3];
    let sizes = [4usize, 2];
    let mut city: *mut RentsimCity = ptr::null_mut();
    unsafe {
        assert_eq!(
            rentsim_city_from_ranking(ranking.as_ptr(), 6, sizes.as_ptr(), 2, 0.5, &mut city),
            RentsimStatus::Ok
        );
        let mut counts = [0usize; 2];
        assert_eq!(
            rentsim_city_high_risk_counts(city, counts.as_mut_ptr(), 2),
            RentsimStatus::Ok
        );
        assert_eq!(counts, [1, 2]);
        let mut r = RentsimRent::default();
        assert_eq!(
            rentsim_city_rent(city, 1, 3.0, RentsimPolicy::Hpt, 0.0, 0.0, &mut r),
            RentsimStatus::Ok
        );
        assert!(!r.rent_defined && r.rent.is_nan());
        rentsim_city_free(city);
        let bad = [5usize];
        assert_eq!(
            rentsim_city_from_ranking(ranking.as_ptr(), 6, bad.as_ptr(), 1, 0.5, &mut city),
            RentsimStatus::InvalidArgument
        );
    }
}

#[test]
fn pav_pools_violators() {
    let v = [1.0, 3.0, 2.0, 4.0];
    let w = [1.0; 4];
    let mut out = [0.0; 4];
    unsafe {
        assert_eq!(
            rentsim_pav(v.as_ptr(), w.as_ptr(), 4, out.as_mut_ptr()),
            RentsimStatus::Ok
        );
        assert_eq!(out, [1.0, 2.5, 2.5, 4.0]);
        let zero = [1.0, 0.0, 1.0, 1.0];
        assert_eq!(
            rentsim_pav(v.as_ptr(), zero.as_ptr(), 4, out.as_mut_ptr()),
            RentsimStatus::InvalidArgument
        );
    }
}

#[test]
fn calibrator_round_trip() {
    let scores: Vec<f64> = (0..40).map(|i| i as f64 / 40.0).collect();
    let outcomes: Vec<u8> = (0..40).map(|i| u8::from(i % 3 == 0 || i > 30)).collect();
    for kind in [
        RentsimCalibratorKind::Platt,
        RentsimCalibratorKind::Isotonic,
    ] {
        let mut cal: *mut RentsimCalibrator = ptr::null_mut();
        unsafe {
            assert_eq!(
                rentsim_calibrator_fit(kind, scores.as_ptr(), outcomes.as_ptr(), 40, &mut cal),
                RentsimStatus::Ok
            );
            let mut probs = vec![0.0; 40];
            assert_eq!(
                rentsim_calibrator_apply(cal, scores.as_ptr(), 40, probs.as_mut_ptr()),
                RentsimStatus::Ok
            );
            assert!(probs.windows(2).all(|w| w[0] <= w[1] + 1e-15));
            assert!(probs.iter().all(|p| (0.0..=1.0).contains(p)));

            let mut text: *mut std::ffi::c_char = ptr::null_mut();
            assert_eq!(
                rentsim_calibrator_to_text(cal, &mut text),
                RentsimStatus::Ok
            );
            let mut back: *mut RentsimCalibrator = ptr::null_mut();
            assert_eq!(
                rentsim_calibrator_from_text(text, &mut back),
                RentsimStatus::Ok
            );
            let mut again = vec![0.0; 40];
            assert_eq!(
                rentsim_calibrator_apply(back, scores.as_ptr(), 40, again.as_mut_ptr()),
                RentsimStatus::Ok
            );
            assert_eq!(probs, again);
            rentsim_string_free(text);
            rentsim_calibrator_free(back);
            rentsim_calibrator_free(cal);
        }
    }
    let garbage = CString::new("kind=nonsense").unwrap();
    let mut cal: *mut RentsimCalibrator = ptr::null_mut();
    unsafe {
        assert_ne!(
            rentsim_calibrator_from_text(garbage.as_ptr(), &mut cal),
            RentsimStatus::Ok
        );
        assert!(cal.is_null());
        let all_zero = [0u8; 40];
        assert_ne!(
            rentsim_calibrator_fit(
                RentsimCalibratorKind::Platt,
                scores.as_ptr(),
                all_zero.as_ptr(),
                40,
                &mut cal
            ),
            RentsimStatus::Ok
        );
    }
    assert!(!last_error().is_empty());
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(rentsim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/rentsim.h");
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .output()
    else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
