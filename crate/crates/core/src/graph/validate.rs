use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use super::{BehaviorGraph, Evaluation, GraphLink};

/// Upper bound on simultaneous interpretations a graph may give rise to.
pub const INTERPRETATION_CAP: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

/// A finding about a graph's fitness for tutoring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// No sequence of steps from the start state reaches this node.
    Unreachable {
        node: String,
    },
    /// Reachable node from which no terminal state can be reached.
    NoPathToDone {
        node: String,
    },
    HintlessCorrectLink {
        link: String,
    },
    SkillNeverExercised {
        skill: String,
    },
    SlipGuessSumExceedsOne {
        skill: String,
    },
    ProbabilityOutOfRange {
        skill: String,
    },
    MissingStartNode {
        node: String,
    },
    DuplicateId {
        kind: &'static str,
        id: String,
    },
    DanglingReference {
        kind: &'static str,
        from: String,
        reference: String,
    },
    EmptyMatcherField {
        link: String,
    },
    IncorrectLinkAdvances {
        link: String,
    },
    DuplicateDocumentOrder {
        link: String,
    },
    LinkInSeveralGroups {
        link: String,
    },
    /// Group members must be correct links forming a simple path.
    MalformedGroup {
        group: usize,
        reason: &'static str,
    },
    InterpretationBoundExceeded {
        bound: usize,
    },
}

impl Diagnostic {
    pub fn severity(&self) -> Severity {
        match self {
            Diagnostic::Unreachable { .. }
            | Diagnostic::NoPathToDone { .. }
            | Diagnostic::SkillNeverExercised { .. } => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.severity())?;
        match self {
            Diagnostic::Unreachable { node } => write!(f, "node {node:?} is unreachable from the start node"),
            Diagnostic::NoPathToDone { node } => write!(f, "node {node:?} has no path to a terminal node"),
            Diagnostic::HintlessCorrectLink { link } => write!(f, "correct link {link:?} has no hints"),
            Diagnostic::SkillNeverExercised { skill } => write!(f, "skill {skill:?} is not used by any link"),
            Diagnostic::SlipGuessSumExceedsOne { skill } => write!(f, "skill {skill:?} has p-slip + p-guess > 1"),
            Diagnostic::ProbabilityOutOfRange { skill } => {
                write!(f, "skill {skill:?} has a parameter outside [0,1]")
            }
            Diagnostic::MissingStartNode { node } => write!(f, "start node {node:?} is not defined"),
            Diagnostic::DuplicateId { kind, id } => write!(f, "duplicate {kind} id {id:?}"),
            Diagnostic::DanglingReference { kind, from, reference } => {
                write!(f, "{from:?} references undefined {kind} {reference:?}")
            }
            Diagnostic::EmptyMatcherField { link } => {
                write!(f, "link {link:?} has an empty selection or action")
            }
            Diagnostic::IncorrectLinkAdvances { link } => {
                write!(f, "incorrect link {link:?} does not loop back to its source")
            }
            Diagnostic::DuplicateDocumentOrder { link } => {
                write!(f, "link {link:?} shares its document order with a sibling")
            }
            Diagnostic::LinkInSeveralGroups { link } => write!(f, "link {link:?} is in more than one group"),
            Diagnostic::MalformedGroup { group, reason } => write!(f, "group {}: {reason}", group + 1),
            Diagnostic::InterpretationBoundExceeded { bound } => write!(
                f,
                "unordered groups allow up to {bound} simultaneous interpretations (cap {INTERPRETATION_CAP})"
            ),
        }
    }
}

/// Checks a graph for tutoring readiness. An empty result means the graph
/// is ready; only [`Severity::Error`] findings block tracing.
pub fn validate_graph(graph: &BehaviorGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    structural(graph, &mut out);

    for link in &graph.links {
        if link.evaluation == Evaluation::Correct && link.hints.is_empty() {
            out.push(Diagnostic::HintlessCorrectLink {
                link: link.id.clone(),
            });
        }
    }
    for skill in &graph.skills {
        if !skill.params.in_unit_range() {
            out.push(Diagnostic::ProbabilityOutOfRange {
                skill: skill.name.clone(),
            });
        }
        if skill.params.p_slip + skill.params.p_guess > 1.0 {
            out.push(Diagnostic::SlipGuessSumExceedsOne {
                skill: skill.name.clone(),
            });
        }
        if !graph.links.iter().any(|l| l.skills.contains(&skill.name)) {
            out.push(Diagnostic::SkillNeverExercised {
                skill: skill.name.clone(),
            });
        }
    }

    groups(graph, &mut out);
    reachability(graph, &mut out);
    out
}

fn structural(graph: &BehaviorGraph, out: &mut Vec<Diagnostic>) {
    let mut seen = HashSet::new();
    for node in &graph.nodes {
        if !seen.insert(node.id.as_str()) {
            out.push(Diagnostic::DuplicateId {
                kind: "node",
                id: node.id.clone(),
            });
        }
    }
    if graph.node(&graph.start_node).is_none() {
        out.push(Diagnostic::MissingStartNode {
            node: graph.start_node.clone(),
        });
    }
    let mut seen = HashSet::new();
    let mut orders: HashMap<(&str, usize), &str> = HashMap::new();
    for link in &graph.links {
        if !seen.insert(link.id.as_str()) {
            out.push(Diagnostic::DuplicateId {
                kind: "link",
                id: link.id.clone(),
            });
        }
        for endpoint in [&link.source, &link.target] {
            if graph.node(endpoint).is_none() {
                out.push(Diagnostic::DanglingReference {
                    kind: "node",
                    from: link.id.clone(),
                    reference: endpoint.clone(),
                });
            }
        }
        for skill in &link.skills {
            if graph.skill(skill).is_none() {
                out.push(Diagnostic::DanglingReference {
                    kind: "skill",
                    from: link.id.clone(),
                    reference: skill.clone(),
                });
            }
        }
        if link.matcher.selection.is_empty() || link.matcher.action.is_empty() {
            out.push(Diagnostic::EmptyMatcherField {
                link: link.id.clone(),
            });
        }
        if link.evaluation == Evaluation::Incorrect && link.source != link.target {
            out.push(Diagnostic::IncorrectLinkAdvances {
                link: link.id.clone(),
            });
        }
        if orders
            .insert((link.source.as_str(), link.document_order), &link.id)
            .is_some()
        {
            out.push(Diagnostic::DuplicateDocumentOrder {
                link: link.id.clone(),
            });
        }
    }
    let mut seen = HashSet::new();
    for skill in &graph.skills {
        if !seen.insert(skill.name.as_str()) {
            out.push(Diagnostic::DuplicateId {
                kind: "skill",
                id: skill.name.clone(),
            });
        }
    }
}

fn groups(graph: &BehaviorGraph, out: &mut Vec<Diagnostic>) {
    let mut owner: HashMap<&str, usize> = HashMap::new();
    let mut bound = graph.nodes.len();
    for (gi, group) in graph.unordered_groups.iter().enumerate() {
        for id in group {
            if owner.insert(id.as_str(), gi).is_some() {
                out.push(Diagnostic::LinkInSeveralGroups { link: id.clone() });
            }
            if graph.link(id).is_none() {
                out.push(Diagnostic::DanglingReference {
                    kind: "link",
                    from: format!("group {}", gi + 1),
                    reference: id.clone(),
                });
            }
        }
        if group
            .iter()
            .filter_map(|id| graph.link(id))
            .any(|l| l.evaluation != Evaluation::Correct)
        {
            out.push(Diagnostic::MalformedGroup {
                group: gi,
                reason: "every member must be a correct link",
            });
        }
        match graph.group_chain(group) {
            None => out.push(Diagnostic::MalformedGroup {
                group: gi,
                reason: "members must form a simple path of steps",
            }),
            Some(chain) => {
                // Pending states per chain: subsets of the links past the
                // first missing one, for every possible entry point.
                let k = chain.len() as u32;
                bound = bound.saturating_add((1usize << k.min(60)).saturating_sub(1 + k as usize));
            }
        }
    }
    if bound > INTERPRETATION_CAP {
        out.push(Diagnostic::InterpretationBoundExceeded { bound });
    }
}

fn reachability(graph: &BehaviorGraph, out: &mut Vec<Diagnostic>) {
    if graph.node(&graph.start_node).is_none() {
        return;
    }
    let advancing: Vec<&GraphLink> = graph
        .links
        .iter()
        .filter(|l| l.evaluation.advances())
        .collect();

    let mut reached: HashSet<&str> = HashSet::new();
    let mut queue = VecDeque::from([graph.start_node.as_str()]);
    reached.insert(graph.start_node.as_str());
    while let Some(n) = queue.pop_front() {
        for l in advancing.iter().filter(|l| l.source == n) {
            if reached.insert(l.target.as_str()) {
                queue.push_back(l.target.as_str());
            }
        }
    }

    let terminal = |n: &str| {
        !graph
            .links
            .iter()
            .any(|l| l.source == n && l.evaluation == Evaluation::Correct)
    };
    let mut finishing: HashSet<&str> = graph
        .nodes
        .iter()
        .map(|n| n.id.as_str())
        .filter(|n| terminal(n))
        .collect();
    let mut queue: VecDeque<&str> = finishing.iter().copied().collect();
    while let Some(n) = queue.pop_front() {
        for l in advancing.iter().filter(|l| l.target == n) {
            if finishing.insert(l.source.as_str()) {
                queue.push_back(l.source.as_str());
            }
        }
    }

    for node in &graph.nodes {
        if !reached.contains(node.id.as_str()) {
            out.push(Diagnostic::Unreachable {
                node: node.id.clone(),
            });
        } else if !finishing.contains(node.id.as_str()) {
            out.push(Diagnostic::NoPathToDone {
                node: node.id.clone(),
            });
        }
    }
}

/// Binary step-by-skill table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkillMatrix {
    /// Correct link ids, in document order.
    pub rows: Vec<String>,
    /// Declared skill names, sorted.
    pub columns: Vec<String>,
    pub cells: Vec<Vec<u8>>,
}

impl SkillMatrix {
    pub fn get(&self, link: &str, skill: &str) -> Option<u8> {
        let r = self.rows.iter().position(|x| x == link)?;
        let c = self.columns.iter().position(|x| x == skill)?;
        Some(self.cells[r][c])
    }
}

impl fmt::Display for SkillMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "link")?;
        for c in &self.columns {
            write!(f, "\t{c}")?;
        }
        writeln!(f)?;
        for (row, cells) in self.rows.iter().zip(&self.cells) {
            write!(f, "{row}")?;
            for cell in cells {
                write!(f, "\t{cell}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn skill_matrix(graph: &BehaviorGraph) -> SkillMatrix {
    let mut links: Vec<&GraphLink> = graph
        .links
        .iter()
        .filter(|l| l.evaluation == Evaluation::Correct)
        .collect();
    links.sort_by_key(|l| l.document_order);
    let mut columns: Vec<String> = graph.skills.iter().map(|s| s.name.clone()).collect();
    columns.sort();
    let cells = links
        .iter()
        .map(|l| {
            columns
                .iter()
                .map(|c| u8::from(l.skills.contains(c)))
                .collect()
        })
        .collect();
    SkillMatrix {
        rows: links.iter().map(|l| l.id.clone()).collect(),
        columns,
        cells,
    }
}
