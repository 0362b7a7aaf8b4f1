use proptest::prelude::*;
use tactag::patterngen::{pattern_triangles_mm, Pattern};
use tactag::shapemetrics::*;

fn library(count: usize, seed: u64) -> PatternLibrary<f64> {
    generate_library(
        LibraryConfig {
            seed,
            ..Default::default()
        },
        count,
    )
    .unwrap()
}

/// Hu invariants from raw moments, expanded to central moments by the
/// binomial theorem.
fn raw_moment_hu(mask: &Mask<f64>) -> [f64; 7] {
    let m = |p: i32, q: i32| -> f64 {
        mask.set_pixels()
            .map(|(x, y)| (x as f64).powi(p) * (y as f64).powi(q))
            .sum()
    };
    let m00 = m(0, 0);
    let (xb, yb) = (m(1, 0) / m00, m(0, 1) / m00);
    let mu20 = m(2, 0) - xb * m(1, 0);
    let mu02 = m(0, 2) - yb * m(0, 1);
    let mu11 = m(1, 1) - xb * m(0, 1);
    let mu30 = m(3, 0) - 3.0 * xb * m(2, 0) + 2.0 * xb * xb * m(1, 0);
    let mu03 = m(0, 3) - 3.0 * yb * m(0, 2) + 2.0 * yb * yb * m(0, 1);
    let mu21 = m(2, 1) - 2.0 * xb * m(1, 1) - yb * m(2, 0) + 2.0 * xb * xb * m(0, 1);
    let mu12 = m(1, 2) - 2.0 * yb * m(1, 1) - xb * m(0, 2) + 2.0 * yb * yb * m(1, 0);
    let n = |mu: f64, o: f64| mu / m00.powf(1.0 + o / 2.0);
    let (n20, n02, n11) = (n(mu20, 2.0), n(mu02, 2.0), n(mu11, 2.0));
    let (n30, n03, n21, n12) = (n(mu30, 3.0), n(mu03, 3.0), n(mu21, 3.0), n(mu12, 3.0));
    [
        n20 + n02,
        (n20 - n02).powi(2) + 4.0 * n11.powi(2),
        (n30 - 3.0 * n12).powi(2) + (3.0 * n21 - n03).powi(2),
        (n30 + n12).powi(2) + (n21 + n03).powi(2),
        (n30 - 3.0 * n12) * (n30 + n12) * ((n30 + n12).powi(2) - 3.0 * (n21 + n03).powi(2))
            + (3.0 * n21 - n03) * (n21 + n03) * (3.0 * (n30 + n12).powi(2) - (n21 + n03).powi(2)),
        (n20 - n02) * ((n30 + n12).powi(2) - (n21 + n03).powi(2))
            + 4.0 * n11 * (n30 + n12) * (n21 + n03),
        (3.0 * n21 - n03) * (n30 + n12) * ((n30 + n12).powi(2) - 3.0 * (n21 + n03).powi(2))
            - (n30 - 3.0 * n12) * (n21 + n03) * (3.0 * (n30 + n12).powi(2) - (n21 + n03).powi(2)),
    ]
}

fn reference_distance(a: &[f64; 7], b: &[f64; 7]) -> f64 {
    (0..7).map(|m| (a[m] - b[m]).abs() / a[m].abs()).sum()
}

#[test]
fn hu_matches_raw_moment_oracle() {
    let lib = library(5, 21);
    for e in &lib.entries {
        let ours = hu_moments(&e.mask).unwrap();
        let oracle = raw_moment_hu(&e.mask);
        for k in 0..7 {
            assert!(
                (ours[k] - oracle[k]).abs() <= 1e-6 * oracle[k].abs() + 1e-15,
                "h{k}: {} vs {}",
                ours[k],
                oracle[k]
            );
        }
    }
}

#[test]
fn square_and_disc_differ() {
    let side = 200;
    let mut sq = Mask::new(side, side, 0.05f64, [0.0, 0.0]).unwrap();
    let mut disc = sq.clone();
    let a = 80;
    let r = (a as f64 * a as f64 / std::f64::consts::PI).sqrt();
    for y in 0..side {
        for x in 0..side {
            if (60..60 + a).contains(&x) && (60..60 + a).contains(&y) {
                sq.set(x, y, true);
            }
            if ((x as f64 - 100.0).powi(2) + (y as f64 - 100.0).powi(2)).sqrt() <= r {
                disc.set(x, y, true);
            }
        }
    }
    let (hs, hd) = (raw_moment_hu(&sq), raw_moment_hu(&disc));
    let (ss, sd) = (hu_signature(&sq).unwrap(), hu_signature(&disc).unwrap());
    assert!((hs[0] - hu_moments(&sq).unwrap()[0]).abs() < 1e-12);
    assert!((hd[0] - hu_moments(&disc).unwrap()[0]).abs() < 1e-12);
    assert!(hu_distance(&ss, &sd) > 0.0);
    // The square's first invariant is 1/6 of unit area, the disc's 1/(2 pi).
    assert!((hs[0] - 1.0 / 6.0).abs() < 1e-3 && (hd[0] - 0.5 / std::f64::consts::PI).abs() < 1e-3);
}

#[test]
fn hu_distance_matches_duplicate_formula() {
    let lib = library(12, 2);
    for a in &lib.entries {
        for b in &lib.entries {
            let d = hu_distance(&a.hu, &b.hu);
            let detail = hu_distance_detailed(&a.hu, &b.hu);
            assert_eq!(detail.skipped_terms, 0);
            assert!(
                (d - reference_distance(&a.hu.h, &b.hu.h)).abs() <= 1e-12,
                "{d}"
            );
        }
    }
    let one = HuSignature { h: [1.0; 7] };
    let two = HuSignature {
        h: [2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
    };
    assert_eq!(hu_distance(&one, &two), 1.0);
}

fn shifted(m: &Mask<f64>, dx: usize, dy: usize) -> Mask<f64> {
    let mut out = Mask::new(m.width + dx, m.height + dy, m.pitch, m.origin).unwrap();
    for (x, y) in m.set_pixels() {
        out.set(x + dx, y + dy, true);
    }
    out
}

#[test]
fn hu_is_translation_invariant() {
    for e in &library(6, 30).entries {
        let moved = hu_signature(&shifted(&e.mask, 5, 7)).unwrap();
        assert!(hu_distance(&e.hu, &moved) < 1e-3);
    }
}

#[test]
fn hu_is_rotation_invariant_at_high_resolution() {
    let lib = library(6, 31);
    let pitch = 5.0 / 256.0;
    for e in &lib.entries {
        let tris = pattern_triangles_mm(&e.pattern, &lib.grid, 5.0).unwrap();
        let rot: Vec<_> = tris.iter().map(|t| t.map(|p| [-p[1], p[0]])).collect();
        let raster = |ts: &[[[f64; 2]; 3]]| {
            let mut m = Mask::centered(300, 300, pitch).unwrap();
            rasterize_triangles(ts, &mut m);
            hu_signature(&m).unwrap()
        };
        let d = hu_distance(&raster(&tris), &raster(&rot));
        assert!(d < 1e-2, "rotated distance {d}");
    }
}

#[test]
fn every_entry_classifies_as_itself() {
    let lib = library(100, 40);
    for (k, e) in lib.entries.iter().enumerate() {
        let r = classify(&e.template.mask, &lib).unwrap();
        assert_eq!(r.index, k);
        assert_eq!(r.loss, 0.0);
        let r = classify(&dilate(&e.mask, 2), &lib).unwrap();
        assert_eq!(r.label, e.label);
    }
}

#[test]
fn classification_is_permutation_covariant() {
    let lib = library(30, 41);
    let mut rev = lib.clone();
    rev.entries.reverse();
    for e in lib.entries.iter().step_by(3) {
        let probe = dilate(&e.mask, 1);
        let (a, b) = (
            classify(&probe, &lib).unwrap(),
            classify(&probe, &rev).unwrap(),
        );
        assert_eq!(a.loss, b.loss);
        assert_eq!(a.label, b.label);
    }
}

#[test]
fn library_admission_keeps_dispersion() {
    let mut lib = PatternLibrary::new(LibraryConfig::<f64>::default()).unwrap();
    let donor = library(40, 50);
    for e in &donor.entries {
        lib.admit(e.pattern.clone()).unwrap();
        let p = Pattern::new(e.pattern.triangle_ids().to_vec(), &lib.grid).unwrap();
        assert!(!lib.admit(p).unwrap());
    }
    for i in 0..lib.len() {
        for j in 0..lib.len() {
            if i != j {
                assert!(symmetric_hu_distance(&lib.entries[i].hu, &lib.entries[j].hu) > 0.1);
            }
        }
    }
}

fn mask_strategy() -> impl Strategy<Value = (Mask<f64>, Mask<f64>)> {
    (
        prop::collection::vec(any::<bool>(), 64),
        prop::collection::vec(any::<bool>(), 64),
    )
        .prop_map(|(a, b)| {
            (
                Mask::from_bits(8, 8, 1.0, [0.0, 0.0], a).unwrap(),
                Mask::from_bits(8, 8, 1.0, [0.0, 0.0], b).unwrap(),
            )
        })
}

proptest! {
    #[test]
    fn iou_loss_properties((a, b) in mask_strategy()) {
        let ab = iou_loss(&a, &b).unwrap();
        let ba = iou_loss(&b, &a).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab.loss));
        prop_assert_eq!(ab, ba);
        let aa = iou_loss(&a, &a).unwrap();
        if a.is_empty() {
            prop_assert!(aa.empty_union && aa.loss == 1.0);
        } else {
            prop_assert_eq!(aa.loss, 0.0);
        }
        let inter = a.bits.iter().zip(&b.bits).filter(|(x, y)| **x && **y).count();
        let union = a.bits.iter().zip(&b.bits).filter(|(x, y)| **x || **y).count();
        if union > 0 {
            prop_assert!((ab.loss - (1.0 - inter as f64 / union as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn dilation_is_extensive((a, _) in mask_strategy(), r in 1usize..3) {
        let d = dilate(&a, r);
        prop_assert!(a.bits.iter().zip(&d.bits).all(|(x, y)| !*x || *y));
        let dd = dilate(&d, r);
        prop_assert!(d.bits.iter().zip(&dd.bits).all(|(x, y)| !*x || *y));
    }
}
