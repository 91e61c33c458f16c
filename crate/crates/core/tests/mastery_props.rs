use gatutor_core::graph::{parse_graph, BehaviorGraph, SkillParams};
use gatutor_core::mastery::updated_knowledge;
use gatutor_core::{init_mastery, select_next_problem, SkillMastery, MASTERY_THRESHOLD};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
}

fn params_with_sum_at_most_one() -> impl Strategy<Value = SkillParams> {
    (unit(), unit(), unit(), unit()).prop_map(|(p_init, p_transit, s, g)| {
        let (p_slip, p_guess) = if s + g > 1.0 { (s, 1.0 - s) } else { (s, g) };
        SkillParams {
            p_init,
            p_transit,
            p_slip,
            p_guess,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn knowledge_stays_in_unit_interval(
        p in (unit(), unit(), unit(), unit()),
        start in unit(),
        evidence in proptest::collection::vec(any::<bool>(), 0..30),
    ) {
        let params = SkillParams { p_init: start, p_transit: p.0, p_slip: p.1, p_guess: p.2 };
        let mut know = start;
        for correct in evidence {
            know = updated_knowledge(know, &params, correct).0;
            prop_assert!((0.0..=1.0).contains(&know));
        }
    }

    #[test]
    fn correct_evidence_never_lowers_knowledge(params in params_with_sum_at_most_one(), know in unit()) {
        let (after, _) = updated_knowledge(know, &params, true);
        prop_assert!(after >= know - 1e-12, "{} -> {}", know, after);
    }
}

fn two_skill_graph(id: &str, skills: &[&str], steps: usize) -> BehaviorGraph {
    let mut xml = format!(
        r#"<graph id="{id}" start="n0"><skill name="a"/><skill name="b"/><skill name="c"/>"#
    );
    for i in 0..=steps {
        xml += &format!(r#"<node id="n{i}"/>"#);
    }
    for i in 0..steps {
        let tag = skills
            .get(i % skills.len().max(1))
            .map(|s| format!(r#"<skill name="{s}"/>"#))
            .unwrap_or_default();
        xml += &format!(
            r#"<link id="l{i}" source="n{i}" target="n{}"><matcher selection="S" action="A"/><hint>h</hint>{tag}</link>"#,
            i + 1
        );
    }
    parse_graph(&(xml + "</graph>")).unwrap()
}

proptest! {
    #[test]
    fn evidence_updates_exactly_one_entry(skill in 0usize..3, correct in any::<bool>()) {
        let g = two_skill_graph("g", &["a", "b", "c"], 3);
        let m = init_mastery(&g);
        let name = ["a", "b", "c"][skill];
        let after = m.update_on_evidence(name, correct).unwrap().mastery;
        let changed = m.entries().zip(after.entries()).filter(|(x, y)| x != y).count();
        prop_assert_eq!(changed, 1);
    }

    #[test]
    fn selection_invariant_under_monotone_rescaling(
        evidence in proptest::collection::vec((0usize..3, any::<bool>()), 0..40),
        shift in 0.0..0.04f64,
    ) {
        let library = vec![
            two_skill_graph("p1", &["a"], 2),
            two_skill_graph("p2", &["a", "b"], 4),
            two_skill_graph("p3", &["c"], 1),
            two_skill_graph("p4", &["b", "c"], 3),
        ];
        let mut m = init_mastery(&library[0]);
        for (skill, correct) in evidence {
            m = m.update_on_evidence(["a", "b", "c"][skill], correct).unwrap().mastery;
        }
        // Strictly increasing map that keeps each value on its side of the threshold.
        let squash = |p: f64| if p >= MASTERY_THRESHOLD {
            MASTERY_THRESHOLD + (p - MASTERY_THRESHOLD) * 0.5
        } else {
            p * (1.0 - shift)
        };
        let rescaled: SkillMastery = serde_json::from_value({
            let mut v = serde_json::to_value(&m).unwrap();
            for (_, e) in v["entries"].as_object_mut().unwrap().iter_mut() {
                let p = e["p_know"].as_f64().unwrap();
                e["p_know"] = serde_json::json!(squash(p));
            }
            v
        }).unwrap();
        prop_assert_eq!(
            &select_next_problem(&m, &library).unwrap().id,
            &select_next_problem(&rescaled, &library).unwrap().id
        );
    }
}
