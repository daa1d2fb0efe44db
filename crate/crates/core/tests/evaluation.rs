use earlywarn_core::data::LabelClass;
use earlywarn_core::eval::{confusion, metrics, ConfusionMatrix, EvaluationReport, MetricsRecord};
use earlywarn_core::numeric::RngStream;
use proptest::prelude::*;

/// Per-class (tp, fp, fn, tn) by walking every (true, predicted) pair.
fn enumerate_counts(t: &[LabelClass], p: &[LabelClass], c: LabelClass) -> [u64; 4] {
    let mut out = [0; 4];
    for (&ti, &pi) in t.iter().zip(p) {
        let slot = match (ti == c, pi == c) {
            (true, true) => 0,
            (false, true) => 1,
            (true, false) => 2,
            (false, false) => 3,
        };
        out[slot] += 1;
    }
    out
}

fn safe_div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

fn check_against_oracle(t: &[LabelClass], p: &[LabelClass]) {
    let cm = confusion(t, p).unwrap();
    let m = metrics(&cm);
    let n = t.len() as f64;
    let correct = t.iter().zip(p).filter(|(a, b)| a == b).count() as f64;
    assert!(close(m.accuracy, correct / n));

    let (mut macro_sum, mut present) = ([0.0; 3], 0.0);
    let mut weighted = [0.0; 3];
    for c in LabelClass::ALL {
        let [tp, fp, fn_, tn] = enumerate_counts(t, p, c);
        let b = cm.one_vs_rest(c);
        assert_eq!([b.tp, b.fp, b.fn_, b.tn], [tp, fp, fn_, tn]);
        let precision = safe_div(tp as f64, (tp + fp) as f64);
        let recall = safe_div(tp as f64, (tp + fn_) as f64);
        let f = safe_div(2.0 * precision * recall, precision + recall);
        let got = m.class(c);
        assert!(
            close(got.precision, precision) && close(got.recall, recall) && close(got.f_score, f)
        );
        let support = (tp + fn_) as f64;
        if support > 0.0 {
            present += 1.0;
            for (s, v) in macro_sum.iter_mut().zip([precision, recall, f]) {
                *s += v;
            }
        }
        for (s, v) in weighted.iter_mut().zip([precision, recall, f]) {
            *s += support * v / n;
        }
    }
    let mac = [
        m.macro_avg.precision,
        m.macro_avg.recall,
        m.macro_avg.f_score,
    ];
    let wei = [
        m.weighted_avg.precision,
        m.weighted_avg.recall,
        m.weighted_avg.f_score,
    ];
    for i in 0..3 {
        assert!(close(mac[i], macro_sum[i] / present));
        assert!(close(wei[i], weighted[i]));
    }
    assert!(close(m.weighted_avg.recall, m.accuracy));
}

fn random_labels(rng: &mut RngStream, n: usize) -> Vec<LabelClass> {
    (0..n).map(|_| LabelClass::ALL[rng.below(3)]).collect()
}

#[test]
fn thousand_random_instances_match_pair_enumeration() {
    let mut rng = RngStream::new(2024);
    for _ in 0..1000 {
        let n = 1 + rng.below(50);
        let t = random_labels(&mut rng, n);
        let p = random_labels(&mut rng, n);
        check_against_oracle(&t, &p);
    }
}

fn in_unit(m: &MetricsRecord) -> bool {
    let mut all = vec![m.accuracy];
    for pc in &m.per_class {
        all.extend([pc.values.precision, pc.values.recall, pc.values.f_score]);
    }
    for a in [&m.macro_avg, &m.weighted_avg] {
        all.extend([a.precision, a.recall, a.f_score]);
    }
    all.iter().all(|v| (0.0..=1.0).contains(v))
}

fn label() -> impl Strategy<Value = LabelClass> {
    (0usize..3).prop_map(|i| LabelClass::ALL[i])
}

proptest! {
    #[test]
    fn perfect_prediction_scores_one(y in prop::collection::vec(label(), 1..60)) {
        let m = metrics(&confusion(&y, &y).unwrap());
        prop_assert_eq!(m.accuracy, 1.0);
        for c in LabelClass::ALL {
            if y.contains(&c) {
                prop_assert_eq!(m.class(c).f_score, 1.0);
            }
        }
        prop_assert_eq!(m.macro_avg.recall, 1.0);
        prop_assert_eq!(m.weighted_avg.precision, 1.0);
    }

    #[test]
    fn weighted_recall_is_accuracy(counts in prop::array::uniform3(prop::array::uniform3(0u64..40))) {
        let cm = ConfusionMatrix { counts };
        prop_assume!(cm.total() > 0);
        let m = metrics(&cm);
        prop_assert!((m.weighted_avg.recall - m.accuracy).abs() < 1e-12);
        prop_assert!(in_unit(&m));
        for pc in &m.per_class {
            let (p, r, f) = (pc.values.precision, pc.values.recall, pc.values.f_score);
            if p > 0.0 && r > 0.0 {
                prop_assert!(f >= p.min(r) - 1e-15 && f <= p.max(r) + 1e-15);
            }
        }
    }

    #[test]
    fn report_round_trips(
        pairs in prop::collection::vec((label(), label()), 1..40),
        seed in any::<u64>(),
    ) {
        let (t, p): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let r = EvaluationReport::from_predictions("model", "data", seed, &t, p).unwrap();
        let back = EvaluationReport::from_json(&r.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, r);
    }
}
