mod common;

use dvd_core::metrics::{shape_bias, PredictionRecord};
use dvd_core::schedules::{AgeMonths, EpochClock, ScheduleSet};
use dvd_core::spectral::{apply_amplitude_threshold, forward_transform, inverse_transform};
use dvd_core::transforms::{
    apply_acuity_blur, apply_chromatic_fidelity, apply_contrast_limit, REC601_LUMA,
};
use dvd_core::Image;
use proptest::prelude::*;

fn image_strategy() -> impl Strategy<Value = Image> {
    (2usize..12, 2usize..12, any::<u64>())
        .prop_map(|(w, h, seed)| common::random_image(seed, w, h))
}

fn age() -> impl Strategy<Value = AgeMonths> {
    (0.0f64..=300.0).prop_map(|t| AgeMonths::new(t).unwrap())
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval_holds(img in image_strategy()) {
        let spec = forward_transform(&img).unwrap();
        let n = img.pixel_count() as f64;
        for ch in 0..3 {
            let energy: f64 = img.channel(ch).iter().map(|v| v * v).sum();
            let spectral: f64 = spec.channel(ch).iter().map(|z| z.norm_sqr()).sum();
            prop_assert!((spectral - n * energy).abs() <= 1e-9 * (1.0 + n * energy));
        }
    }

    #[test]
    fn transform_round_trips(img in image_strategy()) {
        let back = inverse_transform(&forward_transform(&img).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&img) < 1e-12);
    }

    #[test]
    fn transform_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let x = common::random_image(seed, 7, 5);
        let y = common::random_image(seed.wrapping_add(1), 7, 5);
        let mix: Vec<f64> = x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect();
        let z = Image::new(7, 5, mix).unwrap();
        let (fx, fy, fz) = (
            forward_transform(&x).unwrap(),
            forward_transform(&y).unwrap(),
            forward_transform(&z).unwrap(),
        );
        for ch in 0..3 {
            for ((p, q), r) in fx.channel(ch).iter().zip(fy.channel(ch)).zip(fz.channel(ch)) {
                prop_assert!((p * a + q * b - r).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn higher_threshold_keeps_fewer_coefficients(img in image_strategy(), lo in 0.0f64..50.0, extra in 0.0f64..50.0) {
        let spec = forward_transform(&img).unwrap();
        let a = apply_amplitude_threshold(&spec, lo).unwrap();
        let b = apply_amplitude_threshold(&spec, lo + extra).unwrap();
        prop_assert!(b.nonzero_count() <= a.nonzero_count());
        prop_assert_eq!(apply_amplitude_threshold(&a, lo).unwrap(), a);
    }

    #[test]
    fn dc_survives_any_threshold(img in image_strategy(), t in 0.0f64..1e12) {
        let spec = forward_transform(&img).unwrap();
        let kept = apply_amplitude_threshold(&spec, t).unwrap();
        for ch in 0..3 {
            prop_assert_eq!(kept.coefficient(ch, 0, 0), spec.coefficient(ch, 0, 0));
        }
    }

    #[test]
    fn contrast_limit_stays_in_range(img in image_strategy(), t in age(), c in 0.0f64..=1.0, beta in 1e-5f64..1.0) {
        let out = apply_contrast_limit(&img, t, c, beta, 100.0).unwrap();
        prop_assert!(out.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn blur_preserves_mean(img in image_strategy(), sigma in 0.05f64..4.0) {
        let out = apply_acuity_blur(&img, sigma);
        prop_assert!((out.mean() - img.mean()).abs() < 1e-12);
        prop_assert!(out.data().iter().all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
    }

    #[test]
    fn blur_of_constant_is_constant(v in 0.0f64..=1.0, sigma in 0.05f64..6.0) {
        let img = Image::filled(9, 6, v).unwrap();
        prop_assert!(apply_acuity_blur(&img, sigma).max_abs_diff(&img) < 1e-12);
    }

    #[test]
    fn chroma_is_affine(img in image_strategy(), s in 0.0f64..=1.0) {
        let gray = apply_chromatic_fidelity(&img, 0.0, REC601_LUMA);
        let out = apply_chromatic_fidelity(&img, s, REC601_LUMA);
        let want: Vec<f64> = gray.data().iter().zip(img.data()).map(|(g, c)| (1.0 - s) * g + s * c).collect();
        prop_assert!(max_abs(out.data(), &want) < 1e-12);
    }

    #[test]
    fn schedules_are_monotone(a in 0.0f64..=400.0, b in 0.0f64..=400.0) {
        let s = ScheduleSet::builtin();
        let (lo, hi) = (AgeMonths::new(a.min(b)).unwrap(), AgeMonths::new(a.max(b)).unwrap());
        prop_assert!(s.acuity_at(hi) <= s.acuity_at(lo));
        prop_assert!(s.contrast_sensitivity_at(hi) >= s.contrast_sensitivity_at(lo));
        prop_assert!(s.chromatic_sensitivity_at(hi) >= s.chromatic_sensitivity_at(lo));
    }

    #[test]
    fn clock_is_additive_below_maturity(alpha in 0.5f64..8.0, e1 in 0u64..40, e2 in 0u64..40) {
        let c = EpochClock::new(alpha).unwrap();
        let sum = c.epoch_to_age(e1).value() + c.epoch_to_age(e2).value();
        let whole = c.epoch_to_age(e1 + e2).value();
        prop_assert!((whole - sum.min(300.0)).abs() < 1e-9);
    }

    #[test]
    fn shape_bias_ignores_record_order(
        outcomes in prop::collection::vec((0usize..4, 0usize..3), 1..60),
        seed in any::<u64>(),
    ) {
        let cats = ["cat", "dog", "car", "boat"];
        let recs: Vec<PredictionRecord> = outcomes
            .iter()
            .enumerate()
            .map(|(i, &(c, o))| {
                let shape = cats[c];
                let texture = cats[(c + 1) % 4];
                let pred = [shape, texture, "clock"][o];
                PredictionRecord::new(&i.to_string(), pred, shape).with_texture(texture)
            })
            .collect();
        let mut shuffled = recs.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed.wrapping_mul(i as u64 + 7) % (i as u64 + 1)) as usize);
        }
        match (shape_bias(&recs), shape_bias(&shuffled)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a.per_category, &b.per_category);
                prop_assert_eq!(a.overall_median, b.overall_median);
                let total: usize = a.per_category.iter().map(|c| c.n_shape + c.n_texture + c.n_neither).sum();
                prop_assert_eq!(total, n);
                prop_assert!((0.0..=1.0).contains(&a.overall_median));
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "order changed success"),
        }
    }
}
