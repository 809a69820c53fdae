use std::collections::BTreeMap;

use editboard_core::alignment::{generate_pairs, matching_rate, pearson, Choice, ComparisonGroup, ComparisonVote, VideoRef};
use editboard_core::embedding_metrics::{execution_from_similarities, temporal_consistency};
use editboard_core::fidelity::{flow_angle_score, ff_beta_with_flows, semantic_score};
use editboard_core::mock::MockBackend;
use editboard_core::transcript::{BackendIds, MetricOutcome};
use editboard_core::warp::{backward_warp, validity_mask};
use editboard_core::{
    aggregate_transcript, CaseResult, Direction, EmbeddingVector, FlowField, FrameSequence, ImageTextEmbedder,
    MaskSequence, Metric, MetricConfig, RgbImage, TaskCategory, Transcript,
};
use editboard_core::frame::BinaryMap;
use proptest::prelude::*;

fn image(w: usize, h: usize) -> impl Strategy<Value = RgbImage> {
    proptest::collection::vec(any::<u8>(), w * h * 3).prop_map(move |d| RgbImage::new(w, h, d).unwrap())
}

fn flow(w: usize, h: usize, range: f32) -> impl Strategy<Value = FlowField> {
    (
        proptest::collection::vec(-range..range, w * h),
        proptest::collection::vec(-range..range, w * h),
    )
        .prop_map(move |(u, v)| FlowField::new(w, h, u, v).unwrap())
}

fn case(id: String, task: TaskCategory, values: [Option<f64>; 9]) -> CaseResult {
    let metrics = Metric::ALL
        .iter()
        .zip(values)
        .map(|(m, v)| {
            (
                *m,
                match v {
                    Some(value) => MetricOutcome::Ok { value },
                    None => MetricOutcome::NotApplicable,
                },
            )
        })
        .collect();
    CaseResult {
        case_id: id,
        model_name: "m".into(),
        task,
        metrics,
        fidelity: None,
        semantic: None,
        execution: None,
        backend_ids: BackendIds::default(),
        config: MetricConfig::default(),
    }
}

fn cases() -> impl Strategy<Value = Vec<CaseResult>> {
    proptest::collection::vec(
        (
            0usize..4,
            proptest::array::uniform9(proptest::option::of(-1.0e3f64..1.0e3)),
        ),
        1..12,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (t, v))| case(format!("case-{i:03}"), TaskCategory::ALL[t], v))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_flow_warp_is_identity(img in image(7, 5)) {
        let r = backward_warp(&img, &FlowField::zeros(7, 5)).unwrap();
        prop_assert_eq!(r.warped.quantize(), img);
        prop_assert_eq!(r.in_bounds.count_ones(), 35);
    }

    #[test]
    fn warped_values_stay_in_range(img in image(6, 6), f in flow(6, 6, 8.0)) {
        let r = backward_warp(&img, &f).unwrap();
        prop_assert!(r.warped.as_raw().iter().all(|v| (0.0..=255.0).contains(v)));
    }

    #[test]
    fn validity_mask_monotone_in_theta(
        a in image(6, 6),
        b in image(6, 6),
        f in flow(6, 6, 3.0),
        t1 in 0.5f64..254.0,
        dt in 0.0f64..100.0,
    ) {
        let t2 = (t1 + dt).min(254.5);
        let r = backward_warp(&b, &f).unwrap();
        let m1 = validity_mask(&r.warped, &a, &r.in_bounds, t1).unwrap();
        let m2 = validity_mask(&r.warped, &a, &r.in_bounds, t2).unwrap();
        for (x, y) in m1.map().bits().iter().zip(m2.map().bits()) {
            prop_assert!(!x || *y);
        }
    }

    #[test]
    fn angle_score_in_range(
        a in (-20.0f32..20.0, -20.0f32..20.0),
        b in (-20.0f32..20.0, -20.0f32..20.0),
        eps in 0.001f64..1.0,
    ) {
        let s = flow_angle_score(a, b, eps);
        prop_assert!((0.0..=2.0).contains(&s));
    }

    #[test]
    fn ff_beta_in_range(fo in flow(5, 4, 4.0), fe in flow(5, 4, 4.0)) {
        let r = ff_beta_with_flows(&[fo.clone(), fo], &[fe.clone(), fe], 0.05).unwrap();
        prop_assert!((0.0..=2.0).contains(&r.value));
        for v in r.per_frame.iter().flatten() {
            prop_assert!((0.0..=2.0).contains(v));
        }
    }

    #[test]
    fn semantic_score_ignores_masked_region(
        o in proptest::collection::vec(image(6, 6), 2..4),
        noise in proptest::collection::vec(any::<u8>(), 6 * 6 * 3 * 4),
        mask_bits in proptest::collection::vec(any::<bool>(), 36),
    ) {
        let mut mask_bits = mask_bits;
        mask_bits[0] = false;
        let n = o.len();
        let original = FrameSequence::new(o.clone()).unwrap();
        let mask = BinaryMap::new(6, 6, mask_bits).unwrap();
        let masks = MaskSequence::new(vec![mask.clone(); n]).unwrap();
        let tampered: Vec<RgbImage> = o
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let mut g = f.clone();
                for y in 0..6 {
                    for x in 0..6 {
                        if mask.get(x, y) {
                            let k = ((i * 36 + y * 6 + x) * 3) % noise.len();
                            g.set_pixel(x, y, [noise[k], noise[(k + 1) % noise.len()], noise[(k + 2) % noise.len()]]);
                        }
                    }
                }
                g
            })
            .collect();
        let tampered = FrameSequence::new(tampered).unwrap();
        prop_assert_eq!(semantic_score(&original, &original, &masks).unwrap().value, 0.0);
        prop_assert_eq!(semantic_score(&original, &tampered, &masks).unwrap().value, 0.0);
    }

    #[test]
    fn success_rate_is_flag_fraction(sims in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..20)) {
        let n = sims.len();
        let r = execution_from_similarities(sims);
        let count = r.per_frame_flags.iter().filter(|f| **f).count();
        prop_assert_eq!(r.success_rate, count as f64 / n as f64);
    }

    #[test]
    fn clamped_consistency_in_unit_range(seeds in proptest::collection::vec(any::<u8>(), 2..10)) {
        let m = MockBackend::default();
        let feats: Vec<EmbeddingVector> = seeds
            .iter()
            .map(|s| m.embed_image(&RgbImage::filled(2, 2, [*s, 0, 0])).unwrap())
            .collect();
        let c = temporal_consistency(&feats, true).unwrap();
        prop_assert!((0.0..=1.0).contains(&c));
    }

    #[test]
    fn mock_embeddings_are_unit_norm(img in image(4, 3), text in "[a-z][a-z ]{0,29}") {
        let m = MockBackend::default();
        prop_assert!((m.embed_image(&img).unwrap().norm() - 1.0).abs() < 1e-6);
        prop_assert!((m.embed_text(&text).unwrap().norm() - 1.0).abs() < 1e-6);
        prop_assert_eq!(m.embed_image(&img).unwrap(), m.embed_image(&img).unwrap());
    }

    #[test]
    fn aggregation_is_permutation_invariant(cs in cases(), seed in any::<u64>()) {
        let mut shuffled = cs.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(aggregate_transcript(&cs, "m"), aggregate_transcript(&shuffled, "m"));
    }

    #[test]
    fn transcript_json_round_trip(cs in cases()) {
        let t = aggregate_transcript(&cs, "m");
        let back: Transcript = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        prop_assert_eq!(&back, &t);
        for c in &cs {
            let back: CaseResult = serde_json::from_str(&serde_json::to_string(c).unwrap()).unwrap();
            prop_assert_eq!(&back, c);
        }
    }

    #[test]
    fn pearson_symmetric_and_affine_invariant(
        xy in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
        a in 0.1f64..10.0,
        b in -50.0f64..50.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        prop_assume!(pearson(&x, &y).is_ok());
        let r = pearson(&x, &y).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
        prop_assert!((r - pearson(&y, &x).unwrap()).abs() < 1e-12);
        let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((r - pearson(&xs, &y).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pair_count_matches_combinations(sizes in proptest::collection::vec(2usize..6, 1..8), dims in 1usize..4, seed in any::<u64>()) {
        let groups: Vec<ComparisonGroup> = sizes
            .iter()
            .enumerate()
            .map(|(g, &k)| ComparisonGroup {
                group_id: format!("G{g}"),
                videos: (0..k)
                    .map(|m| VideoRef { model_id: format!("m{m}"), case_id: format!("c{g}"), media: format!("m{m}/c{g}.mp4") })
                    .collect(),
            })
            .collect();
        let tasks = generate_pairs(&groups, &Metric::ALL[..dims], seed).unwrap();
        let expected: usize = sizes.iter().map(|k| k * (k - 1) / 2).sum::<usize>() * dims;
        prop_assert_eq!(tasks.len(), expected);
        for t in &tasks {
            prop_assert_ne!(&t.video_a, &t.video_b);
            prop_assert_eq!(&t.video_a.case_id, &t.video_b.case_id);
        }
    }

    #[test]
    fn indistinguishable_with_infinite_delta_always_matches(values in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..20)) {
        let mv: BTreeMap<String, (f64, f64)> = values.iter().enumerate().map(|(i, v)| (format!("c{i}"), *v)).collect();
        let votes: Vec<ComparisonVote> = (0..values.len())
            .map(|i| ComparisonVote { comparison_id: format!("c{i}"), annotator_id: "a".into(), choice: Choice::Indistinguishable, timestamp_ms: 0 })
            .collect();
        let s = matching_rate(&votes, &mv, Direction::HigherBetter, f64::INFINITY).unwrap();
        prop_assert_eq!(s.rate, 100.0);
    }
}
