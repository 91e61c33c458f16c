//! Behavior graphs: the authored tutoring problem.
//!
//! A graph is a set of problem states (nodes) joined by learner steps
//! (links). Each link carries a selection/action/input matcher, a
//! correctness label, a hint chain, optional error feedback and the skills
//! it exercises. Graphs are read from and written to a small XML dialect,
//! see [`parse_graph`] and [`serialize_graph`].

mod matcher;
mod validate;
mod xml;

use std::collections::{BTreeSet, HashMap};

pub use matcher::{MatchPattern, PatternError, PatternKind, StepMatcher};
pub use validate::{
    skill_matrix, validate_graph, Diagnostic, Severity, SkillMatrix, INTERPRETATION_CAP,
};
pub use xml::{parse_graph, serialize_graph, GraphError};

/// Default knowledge-tracing parameters applied when a skill omits them.
pub const DEFAULT_P_INIT: f64 = 0.25;
pub const DEFAULT_P_TRANSIT: f64 = 0.2;
pub const DEFAULT_P_SLIP: f64 = 0.1;
pub const DEFAULT_P_GUESS: f64 = 0.2;

/// Correctness label of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Evaluation {
    Correct,
    Incorrect,
    Suboptimal,
}

impl Evaluation {
    /// Correct and suboptimal steps both advance the problem state.
    pub fn advances(self) -> bool {
        !matches!(self, Evaluation::Incorrect)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Evaluation::Correct => "correct",
            Evaluation::Incorrect => "incorrect",
            Evaluation::Suboptimal => "suboptimal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "correct" => Some(Evaluation::Correct),
            "incorrect" => Some(Evaluation::Incorrect),
            "suboptimal" => Some(Evaluation::Suboptimal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphNode {
    pub id: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphLink {
    pub id: String,
    pub source: String,
    pub target: String,
    pub matcher: StepMatcher,
    pub evaluation: Evaluation,
    /// Hint chain, most general first. The last entry is the bottom-out hint.
    pub hints: Vec<String>,
    pub buggy_message: Option<String>,
    pub skills: Vec<String>,
    /// Rank of the link in file order.
    pub document_order: usize,
}

/// Knowledge-tracing parameters for one skill.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SkillParams {
    pub p_init: f64,
    pub p_transit: f64,
    pub p_slip: f64,
    pub p_guess: f64,
}

impl Default for SkillParams {
    fn default() -> Self {
        SkillParams {
            p_init: DEFAULT_P_INIT,
            p_transit: DEFAULT_P_TRANSIT,
            p_slip: DEFAULT_P_SLIP,
            p_guess: DEFAULT_P_GUESS,
        }
    }
}

impl SkillParams {
    pub fn in_unit_range(&self) -> bool {
        [self.p_init, self.p_transit, self.p_slip, self.p_guess]
            .iter()
            .all(|p| (0.0..=1.0).contains(p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkillDef {
    pub name: String,
    pub label: String,
    pub params: SkillParams,
}

/// An authored problem.
///
/// Fields are public so that graphs can be assembled in code; such graphs
/// are not checked until [`validate_graph`] runs. Graphs produced by
/// [`parse_graph`] always satisfy the structural invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorGraph {
    pub id: String,
    pub title: String,
    pub start_node: String,
    pub nodes: Vec<GraphNode>,
    pub links: Vec<GraphLink>,
    pub skills: Vec<SkillDef>,
    /// Sets of link ids whose steps may be taken in any order.
    pub unordered_groups: Vec<BTreeSet<String>>,
}

impl BehaviorGraph {
    pub fn node(&self, id: &str) -> Option<&GraphNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn link(&self, id: &str) -> Option<&GraphLink> {
        self.links.iter().find(|l| l.id == id)
    }

    pub fn skill(&self, name: &str) -> Option<&SkillDef> {
        self.skills.iter().find(|s| s.name == name)
    }

    /// Position of a node in document order.
    pub fn node_rank(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Links leaving `node`, in document order.
    pub fn outgoing<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a GraphLink> + 'a {
        let mut links: Vec<&GraphLink> = self.links.iter().filter(|l| l.source == node).collect();
        links.sort_by_key(|l| l.document_order);
        links.into_iter()
    }

    /// Number of correct steps; used as the length of the problem.
    pub fn step_count(&self) -> usize {
        self.links
            .iter()
            .filter(|l| l.evaluation == Evaluation::Correct)
            .count()
    }

    /// Skills referenced by any link, in declaration order.
    pub fn exercised_skills(&self) -> Vec<&str> {
        self.skills
            .iter()
            .filter(|s| self.links.iter().any(|l| l.skills.contains(&s.name)))
            .map(|s| s.name.as_str())
            .collect()
    }

    /// Group index of every grouped link.
    pub fn group_membership(&self) -> HashMap<&str, usize> {
        let mut out = HashMap::new();
        for (i, group) in self.unordered_groups.iter().enumerate() {
            for id in group {
                out.entry(id.as_str()).or_insert(i);
            }
        }
        out
    }

    /// Orders a group's links into a chain `n0 -l1-> n1 -l2-> ... -lk-> nk`.
    ///
    /// Returns `None` when the links do not form a simple path.
    pub fn group_chain(&self, group: &BTreeSet<String>) -> Option<Vec<&GraphLink>> {
        let links: Vec<&GraphLink> = group
            .iter()
            .map(|id| self.link(id))
            .collect::<Option<_>>()?;
        if links.is_empty() {
            return None;
        }
        let heads: Vec<&GraphLink> = links
            .iter()
            .copied()
            .filter(|l| !links.iter().any(|m| m.target == l.source))
            .collect();
        if heads.len() != 1 {
            return None;
        }
        let mut chain: Vec<&GraphLink> = vec![heads[0]];
        let mut visited: BTreeSet<&str> = BTreeSet::new();
        visited.insert(heads[0].source.as_str());
        visited.insert(heads[0].target.as_str());
        while chain.len() < links.len() {
            let last = chain[chain.len() - 1];
            let mut next = links.iter().filter(|l| l.source == last.target);
            let step: &GraphLink = next.next()?;
            if next.next().is_some() || !visited.insert(step.target.as_str()) {
                return None;
            }
            chain.push(step);
        }
        Some(chain)
    }
}
