use std::collections::BTreeMap;

use dtieval_core::metrics::Component;
use dtieval_core::scoring::{
    aggregate, normalize_metric, read_ratings, update_rating, AggregateOptions, ContextEntry, RatingRecord,
    ScoreInput, ScoringContext, WeightConfig,
};
use proptest::prelude::*;

fn input(name: &str, c: Component, s: Option<f64>) -> ScoreInput {
    ScoreInput { name: name.into(), component: c, raw: None, score: s.ok_or_else(|| "undefined".to_string()) }
}

fn tree_inputs() -> impl Strategy<Value = Vec<(usize, Option<f64>)>> {
    prop::collection::vec((0usize..3, prop::option::weighted(0.85, 0.0..=1.0f64)), 1..10)
}

fn build(spec: &[(usize, Option<f64>)]) -> Vec<ScoreInput> {
    spec.iter().enumerate().map(|(k, (c, s))| input(&format!("m{k}"), Component::ALL[*c], *s)).collect()
}

fn weights(inputs: &[ScoreInput], w: &[f64], cw: [f64; 3], scale_metrics: f64, scale_components: f64) -> WeightConfig {
    let mut mw: BTreeMap<Component, BTreeMap<String, f64>> = BTreeMap::new();
    for (inp, w) in inputs.iter().zip(w) {
        mw.entry(inp.component).or_default().insert(inp.name.clone(), w * scale_metrics);
    }
    let cw = Component::ALL.into_iter().zip(cw).map(|(c, w)| (c, w * scale_components)).collect();
    WeightConfig::new(mw, cw).unwrap()
}

fn scores(inputs: &[ScoreInput], w: &WeightConfig, zero: bool) -> Vec<Option<f64>> {
    let t = aggregate(inputs, w, AggregateOptions { treat_missing_as_zero: zero });
    std::iter::once(t.system).chain(t.components.iter().map(|c| c.score)).collect()
}

proptest! {
    #[test]
    fn normalization_is_clamped_and_monotone(worst in -100.0..100.0f64, span in 0.1..100.0f64, a in -300.0..300.0f64, b in -300.0..300.0f64) {
        let hb = ContextEntry::higher_better(worst, worst + span);
        let lb = ContextEntry::lower_better(worst + span, worst);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for e in [&hb, &lb] {
            let (sl, sh) = (normalize_metric(lo, e), normalize_metric(hi, e));
            prop_assert!((0.0..=1.0).contains(&sl) && (0.0..=1.0).contains(&sh));
            prop_assert_eq!(normalize_metric(e.worst, e), 0.0);
            prop_assert_eq!(normalize_metric(e.best, e), 1.0);
            if std::ptr::eq(e, &hb) { prop_assert!(sl <= sh) } else { prop_assert!(sl >= sh) }
        }
    }

    #[test]
    fn weight_scaling_changes_nothing(
        spec in tree_inputs(),
        w in prop::collection::vec(0.05..5.0f64, 10),
        cw in prop::array::uniform3(0.05..5.0f64),
        k in 0.01..100.0f64,
        zero in any::<bool>(),
    ) {
        let inputs = build(&spec);
        let base = scores(&inputs, &weights(&inputs, &w, cw, 1.0, 1.0), zero);
        for scaled in [weights(&inputs, &w, cw, k, 1.0), weights(&inputs, &w, cw, 1.0, k)] {
            for (a, b) in base.iter().zip(scores(&inputs, &scaled, zero)) {
                match (a, b) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                    (a, b) => prop_assert_eq!(*a, b),
                }
            }
        }
    }

    #[test]
    fn raising_a_score_never_lowers_an_aggregate(
        spec in tree_inputs(),
        w in prop::collection::vec(0.0..5.0f64, 10),
        pick in any::<prop::sample::Index>(),
        bump in 0.0..1.0f64,
    ) {
        let inputs = build(&spec);
        let mut w = w;
        w.iter_mut().for_each(|x| if *x < 0.1 { *x = 0.1 });
        let wc = weights(&inputs, &w, [1.0, 2.0, 3.0], 1.0, 1.0);
        let k = pick.index(inputs.len());
        let mut raised = inputs.clone();
        raised[k].score = Ok(match &inputs[k].score {
            Ok(s) => s + (1.0 - s) * bump,
            Err(_) => bump,
        });
        // Defining a missing metric only counts as raising under missing-as-zero.
        let zero = inputs[k].score.is_err() || bump > 0.5;
        for (a, b) in scores(&inputs, &wc, zero).iter().zip(scores(&raised, &wc, zero)) {
            if let (Some(a), Some(b)) = (a, b) {
                prop_assert!(b >= a - 1e-12);
            }
        }
    }
}

#[test]
fn missing_metrics_renormalize_or_count_as_zero() {
    let inputs = [
        input("a", Component::Detection, Some(0.9)),
        input("b", Component::Detection, Some(0.5)),
        input("c", Component::Detection, None),
    ];
    let mut mw = BTreeMap::new();
    mw.insert(Component::Detection, BTreeMap::from([("a".into(), 3.0), ("b".into(), 1.0), ("c".into(), 4.0)]));
    let w = WeightConfig::new(mw, BTreeMap::new()).unwrap();
    let t = aggregate(&inputs, &w, AggregateOptions::default());
    assert!((t.system.unwrap() - 0.8).abs() < 1e-12);
    assert!(t.annotations.iter().any(|a| a.target == "c"));
    let z = aggregate(&inputs, &w, AggregateOptions { treat_missing_as_zero: true });
    assert!((z.system.unwrap() - 0.4).abs() < 1e-12);
}

#[test]
fn default_context_covers_every_metric() {
    let ctx = ScoringContext::defaults();
    for name in dtieval_core::metrics::MetricRegistry::with_defaults().names() {
        assert!(ctx.get(name).is_some(), "{name}");
    }
}

#[test]
fn rating_store_appends_and_ranks() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("ratings.jsonl");
    let rec = |id: &str, s: f64| RatingRecord {
        dti_id: id.into(),
        trial_id: format!("{id}-{s}"),
        system: Some(s),
        components: Component::ALL.into_iter().map(|c| (c, Some(s))).collect(),
    };
    update_rating(&store, &rec("x", 0.2)).unwrap();
    update_rating(&store, &rec("y", 0.5)).unwrap();
    let table = update_rating(&store, &rec("x", 0.6)).unwrap();
    assert_eq!(table.rows[0].dti_id, "y");
    assert_eq!(table.rows[1].trials, 2);
    assert!((table.rows[1].mean_system.unwrap() - 0.4).abs() < 1e-12);

    let mut text = std::fs::read_to_string(&store).unwrap();
    text.push_str("{\"dti_id\":\"z\",\"tri");
    std::fs::write(&store, text).unwrap();
    assert_eq!(read_ratings(&store).unwrap().len(), 3);
}
