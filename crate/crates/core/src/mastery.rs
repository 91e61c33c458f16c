//! Bayesian knowledge tracing over the skills of a behavior graph.
//!
//! Each skill tracks the probability that the learner knows it. Evidence
//! from a step first conditions that probability on the observed outcome
//! (allowing for slips and guesses), then applies the chance of learning
//! the skill at this opportunity.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::graph::{BehaviorGraph, SkillParams};
use crate::tracer::{Verdict, VerdictKind};

/// p_know at or above this counts as mastered.
pub const MASTERY_THRESHOLD: f64 = 0.95;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MasteryError {
    #[error("unknown skill {0:?}")]
    UnknownSkill(String),
    #[error("problem library is empty")]
    EmptyLibrary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasteryEntry {
    pub params: SkillParams,
    pub p_know: f64,
    pub opportunities: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkillMastery {
    entries: BTreeMap<String, MasteryEntry>,
}

/// Result of one evidence update.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceUpdate {
    pub mastery: SkillMastery,
    /// The observation had zero probability under the current estimate; the
    /// prior was kept as the posterior.
    pub degenerate: bool,
}

/// Probability of knowing the skill given one observed outcome.
///
/// Returns `None` when the outcome is impossible under the estimate
/// (zero denominator).
pub fn posterior(p_know: f64, p_slip: f64, p_guess: f64, correct: bool) -> Option<f64> {
    let (num, den) = if correct {
        let num = p_know * (1.0 - p_slip);
        (num, num + (1.0 - p_know) * p_guess)
    } else {
        let num = p_know * p_slip;
        (num, num + (1.0 - p_know) * (1.0 - p_slip))
    };
    (den > 0.0).then(|| (num / den).clamp(0.0, 1.0))
}

/// One full update: condition on the outcome, then allow for learning.
pub fn updated_knowledge(p_know: f64, params: &SkillParams, correct: bool) -> (f64, bool) {
    let (post, degenerate) = match posterior(p_know, params.p_slip, params.p_guess, correct) {
        Some(p) => (p, false),
        None => (p_know, true),
    };
    (
        (post + (1.0 - post) * params.p_transit).clamp(0.0, 1.0),
        degenerate,
    )
}

pub fn init_mastery(graph: &BehaviorGraph) -> SkillMastery {
    SkillMastery {
        entries: graph
            .skills
            .iter()
            .map(|s| {
                (
                    s.name.clone(),
                    MasteryEntry {
                        params: s.params,
                        p_know: s.params.p_init,
                        opportunities: 0,
                    },
                )
            })
            .collect(),
    }
}

impl SkillMastery {
    pub fn get(&self, skill: &str) -> Option<&MasteryEntry> {
        self.entries.get(skill)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &MasteryEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_mastered(&self, skill: &str) -> bool {
        self.entries
            .get(skill)
            .is_some_and(|e| e.p_know >= MASTERY_THRESHOLD)
    }

    pub fn update_on_evidence(
        &self,
        skill: &str,
        correct: bool,
    ) -> Result<EvidenceUpdate, MasteryError> {
        let entry = self
            .entries
            .get(skill)
            .ok_or_else(|| MasteryError::UnknownSkill(skill.to_string()))?;
        let (p_know, degenerate) = updated_knowledge(entry.p_know, &entry.params, correct);
        if degenerate {
            tracing::warn!(
                skill,
                correct,
                p_know = entry.p_know,
                "evidence has zero likelihood; keeping prior"
            );
        }
        let mut mastery = self.clone();
        let slot = mastery.entries.get_mut(skill).expect("checked above");
        slot.p_know = p_know;
        slot.opportunities += 1;
        Ok(EvidenceUpdate {
            mastery,
            degenerate,
        })
    }

    /// Credits or debits the skills behind a verdict.
    ///
    /// `hint_target` is the link the tutor would hint at before the step;
    /// unmatched steps, and buggy steps whose link has no skill tags, count as
    /// errors on that link's skills.
    pub fn apply_verdict(
        &self,
        graph: &BehaviorGraph,
        verdict: &Verdict,
        hint_target: Option<&str>,
    ) -> Result<SkillMastery, MasteryError> {
        let (link_id, correct) = match (verdict.kind, verdict.matched_links.first()) {
            (VerdictKind::Correct, Some(first)) => (Some(first.as_str()), true),
            (VerdictKind::Correct, None) => (None, true),
            (VerdictKind::Incorrect, Some(first)) => (Some(first.as_str()), false),
            (VerdictKind::Incorrect, None) => (hint_target, false),
        };
        let mut link = link_id.and_then(|id| graph.link(id));
        // Untagged buggy links charge the step the learner was expected to take.
        if !correct && link.is_some_and(|l| l.skills.is_empty()) {
            link = hint_target.and_then(|id| graph.link(id));
        }
        let Some(link) = link else {
            return Ok(self.clone());
        };
        let mut mastery = self.clone();
        for skill in &link.skills {
            mastery = mastery.update_on_evidence(skill, correct)?.mastery;
        }
        Ok(mastery)
    }

    /// Tab-separated snapshot: `skill`, `p_know`, `opportunities`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("skill\tp_know\topportunities\n");
        for (name, e) in &self.entries {
            let _ = writeln!(out, "{name}\t{:.6}\t{}", e.p_know, e.opportunities);
        }
        out
    }
}

/// Picks the problem that exercises the most skills not yet mastered.
///
/// Ties go to the problem with fewer correct steps, then to the smaller id.
/// Skills missing from `mastery` count as unmastered.
pub fn select_next_problem<'a>(
    mastery: &SkillMastery,
    library: &'a [BehaviorGraph],
) -> Result<&'a BehaviorGraph, MasteryError> {
    library
        .iter()
        .min_by(|a, b| {
            let key = |g: &BehaviorGraph| {
                let open = g
                    .exercised_skills()
                    .into_iter()
                    .filter(|s| !mastery.is_mastered(s))
                    .count();
                (std::cmp::Reverse(open), g.step_count())
            };
            key(a).cmp(&key(b)).then_with(|| a.id.cmp(&b.id))
        })
        .ok_or(MasteryError::EmptyLibrary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;

    fn params(p_init: f64, p_transit: f64, p_slip: f64, p_guess: f64) -> SkillParams {
        SkillParams {
            p_init,
            p_transit,
            p_slip,
            p_guess,
        }
    }

    #[test]
    fn worked_correct_update() {
        // posterior 0.45 / 0.55, then + (1 - posterior) * 0.3
        let (p, degenerate) = updated_knowledge(0.5, &params(0.5, 0.3, 0.1, 0.2), true);
        assert!(!degenerate);
        assert!((p - 0.872_727_272_727_272_7).abs() < 1e-12, "{p}");
    }

    #[test]
    fn certain_knowledge_is_a_fixed_point() {
        for g in [0.0, 0.3, 1.0] {
            for t in [0.0, 0.5] {
                assert_eq!(updated_knowledge(1.0, &params(1.0, t, 0.0, g), true).0, 1.0);
            }
        }
    }

    #[test]
    fn zero_prior_without_learning_stays_zero() {
        let (p, degenerate) = updated_knowledge(0.0, &params(0.0, 0.0, 0.1, 0.2), true);
        assert_eq!(p, 0.0);
        assert!(!degenerate);
    }

    #[test]
    fn impossible_evidence_keeps_prior() {
        // L = 0 and g = 0: a correct answer cannot happen.
        let (p, degenerate) = updated_knowledge(0.0, &params(0.0, 0.2, 0.1, 0.0), true);
        assert!(degenerate);
        assert!((p - 0.2).abs() < 1e-15);
    }

    fn graph() -> BehaviorGraph {
        parse_graph(
            r#"<graph id="g" start="a">
  <skill name="select-file" p-init="0.3"/><skill name="process-files"/>
  <node id="a"/><node id="b"/><node id="c"/>
  <link id="l1" source="a" target="b"><matcher selection="X" action="A"/><hint>h</hint><skill name="select-file"/></link>
  <link id="l2" source="b" target="c"><matcher selection="Y" action="A"/><hint>h</hint><skill name="process-files"/></link>
  <link id="bad" source="a" target="a" evaluation="incorrect"><matcher selection="Y" action="A"/><skill name="process-files"/></link>
  <link id="plain" source="b" target="b" evaluation="incorrect"><matcher selection="Z" action="A"/></link>
</graph>"#,
        )
        .unwrap()
    }

    #[test]
    fn init_copies_priors() {
        let m = init_mastery(&graph());
        assert_eq!(m.len(), 2);
        assert_eq!(m.get("select-file").unwrap().p_know, 0.3);
        assert_eq!(m.get("process-files").unwrap().opportunities, 0);
        let empty = parse_graph(r#"<graph id="e" start="s"><node id="s"/></graph>"#).unwrap();
        assert!(init_mastery(&empty).is_empty());
    }

    #[test]
    fn evidence_touches_one_entry() {
        let m = init_mastery(&graph());
        let up = m.update_on_evidence("select-file", false).unwrap();
        assert_eq!(up.mastery.get("select-file").unwrap().opportunities, 1);
        assert_eq!(up.mastery.get("process-files"), m.get("process-files"));
        assert_eq!(
            m.update_on_evidence("nope", true).unwrap_err(),
            MasteryError::UnknownSkill("nope".into())
        );
    }

    #[test]
    fn verdicts_credit_the_right_skills() {
        let g = graph();
        let m = init_mastery(&g);
        let correct = Verdict {
            kind: VerdictKind::Correct,
            message: None,
            matched_links: vec!["l1".into()],
        };
        let after = m.apply_verdict(&g, &correct, Some("l1")).unwrap();
        assert!(after.get("select-file").unwrap().p_know > 0.3);
        assert_eq!(after.get("process-files"), m.get("process-files"));

        let generic = Verdict {
            kind: VerdictKind::Incorrect,
            message: None,
            matched_links: vec![],
        };
        let after = m.apply_verdict(&g, &generic, Some("l1")).unwrap();
        assert_eq!(after.get("select-file").unwrap().opportunities, 1);
        assert!(after.get("select-file").unwrap().p_know < 0.3 + 0.2);

        let buggy = Verdict {
            kind: VerdictKind::Incorrect,
            message: None,
            matched_links: vec!["bad".into()],
        };
        let after = m.apply_verdict(&g, &buggy, Some("l1")).unwrap();
        assert_eq!(after.get("process-files").unwrap().opportunities, 1);
        assert_eq!(after.get("select-file"), m.get("select-file"));

        let skill_less = Verdict {
            kind: VerdictKind::Incorrect,
            message: None,
            matched_links: vec!["plain".into()],
        };
        let after = m.apply_verdict(&g, &skill_less, Some("l2")).unwrap();
        assert_eq!(after.get("process-files").unwrap().opportunities, 1);
        assert_eq!(after.get("select-file"), m.get("select-file"));
        assert_eq!(m.apply_verdict(&g, &skill_less, None).unwrap(), m);
    }

    #[test]
    fn tsv_snapshot() {
        let m = init_mastery(&graph());
        assert_eq!(
            m.to_tsv(),
            "skill\tp_know\topportunities\nprocess-files\t0.250000\t0\nselect-file\t0.300000\t0\n"
        );
    }

    fn problem(id: &str, skills: &[&str], steps: usize) -> BehaviorGraph {
        let mut xml = format!(r#"<graph id="{id}" start="n0">"#);
        for s in skills {
            xml += &format!(r#"<skill name="{s}"/>"#);
        }
        for i in 0..=steps {
            xml += &format!(r#"<node id="n{i}"/>"#);
        }
        for i in 0..steps {
            xml += &format!(
                r#"<link id="l{i}" source="n{i}" target="n{}"><matcher selection="S{i}" action="A"/><hint>h</hint>{}</link>"#,
                i + 1,
                skills
                    .iter()
                    .map(|s| format!(r#"<skill name="{s}"/>"#))
                    .collect::<String>()
            );
        }
        xml += "</graph>";
        parse_graph(&xml).unwrap()
    }

    #[test]
    fn selection_prefers_coverage_then_length_then_id() {
        let m = SkillMastery::default();
        let lib = vec![problem("b", &["x"], 1), problem("a", &["x", "y"], 5)];
        assert_eq!(select_next_problem(&m, &lib).unwrap().id, "a");

        let lib = vec![problem("long", &["x"], 4), problem("short", &["y"], 2)];
        assert_eq!(select_next_problem(&m, &lib).unwrap().id, "short");

        let lib = vec![problem("zz", &["x"], 2), problem("aa", &["y"], 2)];
        assert_eq!(select_next_problem(&m, &lib).unwrap().id, "aa");

        assert_eq!(
            select_next_problem(&m, &[]).unwrap_err(),
            MasteryError::EmptyLibrary
        );
    }

    #[test]
    fn fully_mastered_library_falls_back_to_tie_breaks() {
        let lib = vec![
            problem("b", &["x"], 1),
            problem("c", &["x"], 3),
            problem("a", &["x"], 1),
        ];
        let mut m = init_mastery(&lib[0]);
        for _ in 0..40 {
            m = m.update_on_evidence("x", true).unwrap().mastery;
        }
        assert!(m.is_mastered("x"));
        assert_eq!(select_next_problem(&m, &lib).unwrap().id, "a");
    }
}
