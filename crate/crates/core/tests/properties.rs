use loadaudit_core::encoder::{EncoderConfig, EncoderParams};
use loadaudit_core::fidelity::{correlation_score, discriminative_score, frechet_distance};
use loadaudit_core::linalg::Matrix;
use loadaudit_core::privacy::{mmd2_unbiased, mmd_three_sample_test_with_bandwidth, nndr, roc_curve, AttackScoreSet};
use loadaudit_core::seed::rng;
use loadaudit_core::surrogate::{generate_split, synthetic_stations, SurrogateConfig, TemperatureModel};
use loadaudit_core::thermo::{degree_day, thermo_gradient};
use loadaudit_core::transforms::{acf, daily_profile, feature_vector, stats8, weekly_profile, DayFilter};
use loadaudit_core::utility::{forecast_repeat_week, knn_classify, mae, mse};
use loadaudit_core::{partition_by_category, validate, Category, ContractedPower, LoadCurve, TimeOfUse, Timestamp};
use proptest::prelude::*;

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(|x| x.as_slice()).collect()
}

fn points(n: std::ops::Range<usize>, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, d), n)
}

fn series(days: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..5.0, days * 48)
}

fn curve(id: &str, values: Vec<f64>, start: Timestamp) -> LoadCurve {
    LoadCurve { meter_id: id.into(), start, values, power: ContractedPower::Kva9, tou: TimeOfUse::Night, station_id: "S".into() }
}

fn surrogate_split(n: usize, seed: u64) -> [loadaudit_core::AlignedDataset; 3] {
    let cfg = SurrogateConfig { n_curves: n, n_days: 14, seed, ..Default::default() };
    let temps = synthetic_stations(2, cfg.window(), &TemperatureModel::default(), seed);
    let (a, b, c) = generate_split(&cfg, &temps).unwrap();
    [a, b, c]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn surrogate_datasets_validate_and_partition_losslessly(seed in 0u64..10_000, n in 1usize..40) {
        for ds in surrogate_split(n, seed) {
            prop_assert!(validate(&ds).is_empty());
            let parts = partition_by_category(&ds);
            prop_assert_eq!(parts[&Category::ALL].len(), ds.len());
            let mut ids: Vec<String> = parts
                .iter()
                .filter(|(c, _)| !c.is_all())
                .flat_map(|(c, p)| p.curves.iter().inspect(move |cv| assert!(c.contains(cv))).map(|cv| cv.meter_id.clone()))
                .collect();
            ids.sort();
            let mut expected: Vec<String> = ds.curves.iter().map(|c| c.meter_id.clone()).collect();
            expected.sort();
            prop_assert_eq!(ids, expected);
            let again = partition_by_category(&parts[&Category::ALL]);
            prop_assert_eq!(again.keys().collect::<Vec<_>>(), parts.keys().collect::<Vec<_>>());
        }
    }

    #[test]
    fn profiles_are_linear(a in series(7), b in series(7), s in -3.0f64..3.0) {
        let start = Timestamp::midnight(2023, 2, 6);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
        let (pa, pb, pm) = (
            daily_profile(&a, start, DayFilter::All).unwrap(),
            daily_profile(&b, start, DayFilter::All).unwrap(),
            daily_profile(&mix, start, DayFilter::All).unwrap(),
        );
        for i in 0..48 {
            prop_assert!((pm.0[i] - (pa.0[i] + s * pb.0[i])).abs() < 1e-9);
        }
        let (wa, wb, wm) = (weekly_profile(&[&a]).unwrap(), weekly_profile(&[&b]).unwrap(), weekly_profile(&[&mix]).unwrap());
        for i in 0..wa.len() {
            prop_assert!((wm[i] - (wa[i] + s * wb[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn acf_is_affine_invariant(x in prop::collection::vec(-5.0f64..5.0, 20..200), a in 0.1f64..20.0, b in -50.0f64..50.0) {
        prop_assume!(x.iter().any(|v| (v - x[0]).abs() > 1e-3));
        let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let (ax, ay) = (acf(&x, 10).unwrap(), acf(&y, 10).unwrap());
        for (p, q) in ax.iter().zip(&ay) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn stats8_quantiles_are_ordered(x in series(3)) {
        let s = stats8(&x);
        prop_assert!(s.min <= s.q10 && s.q10 <= s.median && s.median <= s.q90 && s.q90 <= s.max);
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert!(s.peak_slot_mode < 48);
    }

    #[test]
    fn feature_vector_has_104_dimensions(x in series(8), month in 1u8..=12) {
        let c = curve("m", x, Timestamp::midnight(2022, month, 1));
        prop_assert_eq!(feature_vector(&c).len(), 104);
    }

    #[test]
    fn encoder_is_causal_deterministic_and_fixed_width(seed in 0u64..1000, len in 2usize..60, t in 0usize..60) {
        let cfg = EncoderConfig { layers: 3, channels: 3, out_channels: 4, latent_dim: 5, ..EncoderConfig::desk() };
        let p = EncoderParams::init(&cfg, &mut rng(seed));
        prop_assert_eq!(p.to_flat(), EncoderParams::init(&cfg, &mut rng(seed)).to_flat());
        let x: Vec<f64> = (0..len).map(|i| ((i as f64) * 0.37 + seed as f64).sin()).collect();
        prop_assert_eq!(p.encode(&x).len(), 5);
        let t = t % len;
        let mut y = x.clone();
        y[t] += 2.5;
        for (a, b) in p.feature_maps(&x).iter().zip(&p.feature_maps(&y)) {
            prop_assert_eq!(&a[..t], &b[..t]);
        }
    }

    #[test]
    fn frechet_symmetric_and_zero_on_equal_moments(a in points(3..12, 3), b in points(3..12, 3)) {
        let moments = |p: &[Vec<f64>]| loadaudit_core::encoder::embedding_moments(p).unwrap();
        let ((ma, sa), (mb, sb)) = (moments(&a), moments(&b));
        let ab = frechet_distance(&ma, &sa, &mb, &sb).unwrap();
        let ba = frechet_distance(&mb, &sb, &ma, &sa).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * ab.max(1.0));
        prop_assert!(frechet_distance(&ma, &sa, &ma, &sa).unwrap() < 1e-9);
        prop_assert!(ab >= 0.0);
        let m2 = Matrix::from_rows(1, 1, vec![2.0]);
        prop_assert!(frechet_distance(&[1.0], &m2, &[1.0], &m2).unwrap() < 1e-12);
    }

    #[test]
    fn discriminative_score_bounds(a in points(4..30, 4), seed in 0u64..100, shift in 0.0f64..3.0) {
        let b: Vec<Vec<f64>> = a.iter().rev().map(|v| v.iter().map(|x| x * 0.5 + shift).collect()).collect();
        let s = discriminative_score(&refs(&a), &refs(&b), seed).unwrap();
        prop_assert!((0.0..=0.5).contains(&s));
        // Separated by far more than either diameter.
        let far: Vec<Vec<f64>> = a.iter().map(|v| v.iter().map(|x| x + 1e4).collect()).collect();
        prop_assert_eq!(discriminative_score(&refs(&a), &refs(&far), seed).unwrap(), 0.5);
    }

    #[test]
    fn correlation_score_ignores_positive_affine_maps(a in points(2..5, 60), b in points(2..5, 60), s in 0.1f64..10.0, c in -5.0f64..5.0) {
        let scaled: Vec<Vec<f64>> = b.iter().map(|v| v.iter().map(|x| s * x + c).collect()).collect();
        let x = correlation_score(&refs(&a), &refs(&b), 12).unwrap();
        let y = correlation_score(&refs(&a), &refs(&scaled), 12).unwrap();
        prop_assert!((x - y).abs() < 1e-9);
    }

    #[test]
    fn thermo_gradient_scales_and_ignores_offsets(x in series(21), t in prop::collection::vec(-5.0f64..20.0, 21), a in 0.1f64..10.0, c in 0.0f64..3.0) {
        let temps: Vec<f64> = t.iter().flat_map(|v| vec![*v; 48]).collect();
        let start = Timestamp::midnight(2023, 1, 2);
        let Ok(g) = thermo_gradient(&curve("m", x.clone(), start), &temps, 16.0) else {
            return Ok(());
        };
        let scaled = thermo_gradient(&curve("m", x.iter().map(|v| a * v).collect(), start), &temps, 16.0).unwrap().gradient;
        let shifted = thermo_gradient(&curve("m", x.iter().map(|v| v + c).collect(), start), &temps, 16.0).unwrap().gradient;
        prop_assert!((scaled - a * g.gradient).abs() < 1e-9 * (1.0 + scaled.abs()));
        prop_assert!((shifted - g.gradient).abs() < 1e-9 * (1.0 + g.gradient.abs()));
    }

    #[test]
    fn degree_day_non_negative_and_non_increasing(t1 in -40.0f64..40.0, t2 in -40.0f64..40.0, th in 14.5f64..18.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(degree_day(lo, th) >= degree_day(hi, th));
        prop_assert!(degree_day(hi, th) >= 0.0);
    }

    #[test]
    fn errors_are_non_negative(p in prop::collection::vec(-5.0f64..5.0, 1..50)) {
        let shifted: Vec<f64> = p.iter().map(|v| v + 0.25).collect();
        prop_assert_eq!(mse(&p, &p), 0.0);
        prop_assert!(mse(&p, &shifted) > 0.0);
        prop_assert!(mae(&p, &shifted) >= 0.0);
    }

    #[test]
    fn knn_ignores_training_order(train in points(6..20, 2), test in points(1..8, 2), rot in 0usize..20, k in 1usize..6) {
        let labels: Vec<u8> = (0..train.len()).map(|i| (i % 3) as u8).collect();
        let truth: Vec<u8> = (0..test.len()).map(|i| (i % 3) as u8).collect();
        let k = k.min(train.len());
        let base = knn_classify(&refs(&train), &labels, &refs(&test), &truth, k).unwrap();
        let r = rot % train.len();
        let (mut tx, mut ty) = (train.clone(), labels.clone());
        tx.rotate_left(r);
        ty.rotate_left(r);
        let rotated = knn_classify(&refs(&tx), &ty, &refs(&test), &truth, k).unwrap();
        // Continuous coordinates make distance ties vanishingly unlikely.
        prop_assert_eq!(base.predictions, rotated.predictions);
    }

    #[test]
    fn repeat_week_reads_one_week_back(h in prop::collection::vec(-5.0f64..5.0, 336..700), horizon in 1usize..=336, i in 0usize..336, bump in 0.5f64..3.0) {
        let i = i % horizon;
        let base = forecast_repeat_week(&h, horizon).unwrap();
        let idx = h.len() - 336 + i;
        let mut g = h.clone();
        g[idx] += bump;
        let moved = forecast_repeat_week(&g, horizon).unwrap();
        for j in 0..horizon {
            prop_assert_eq!(moved[j] != base[j], j == i);
        }
    }

    #[test]
    fn roc_is_monotone_with_bounded_auc(m in prop::collection::vec(0u8..30, 1..60), n in prop::collection::vec(0u8..30, 1..60)) {
        let set = AttackScoreSet::from_scores(
            &m.iter().map(|v| *v as f64).collect::<Vec<_>>(),
            &n.iter().map(|v| *v as f64).collect::<Vec<_>>(),
        );
        let roc = roc_curve(&set).unwrap();
        for w in roc.points.windows(2) {
            prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
        }
        prop_assert!((0.0..=1.0).contains(&roc.auc));
    }

    #[test]
    fn mmd_symmetric_and_three_sample_antisymmetric(x in points(4..10, 3), y in points(4..10, 3), z in points(4..10, 3), bw in 0.5f64..20.0) {
        let xy = mmd2_unbiased(&refs(&x), &refs(&y), bw).unwrap();
        let yx = mmd2_unbiased(&refs(&y), &refs(&x), bw).unwrap();
        prop_assert!((xy - yx).abs() < 1e-12);
        let mut xr = x.clone();
        xr.reverse();
        prop_assert!((mmd2_unbiased(&refs(&xr), &refs(&y), bw).unwrap() - xy).abs() < 1e-12);
        let a = mmd_three_sample_test_with_bandwidth(&refs(&x), &refs(&y), &refs(&z), bw).unwrap();
        let b = mmd_three_sample_test_with_bandwidth(&refs(&x), &refs(&z), &refs(&y), bw).unwrap();
        prop_assert!((a.statistic + b.statistic).abs() < 1e-12);
    }

    #[test]
    fn nndr_in_unit_interval(t in points(1..20, 2), s in points(2..20, 2)) {
        for r in nndr(&refs(&t), &refs(&s)).unwrap() {
            prop_assert!((0.0..=1.0).contains(&r));
        }
    }
}
