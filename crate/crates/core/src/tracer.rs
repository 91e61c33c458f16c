//! Example tracing: matching learner transactions against a behavior graph.
//!
//! The tracer keeps every interpretation of the learner's steps that is
//! consistent with the graph. Links in an unordered group may be taken in
//! any order; while a group is only partly done out of order, the
//! interpretation records the missing chain position and the positions
//! already consumed past it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::graph::{validate_graph, BehaviorGraph, Diagnostic, Evaluation, GraphLink, Severity};

/// Feedback for a step that matches no link.
pub const GENERIC_INCORRECT: &str = "That step doesn't match. Try HINT.";
/// Feedback attached to a step matched only by suboptimal links.
pub const SUBOPTIMAL_NOTE: &str = "That works, but there is a better step here.";
/// Feedback for any step taken after the problem is finished.
pub const ALREADY_COMPLETE: &str = "The problem is already complete.";

/// One learner action.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub selection: String,
    pub action: String,
    #[serde(default)]
    pub input: String,
    /// Milliseconds since the Unix epoch.
    #[serde(default)]
    pub timestamp: u64,
}

impl Transaction {
    pub fn new(
        selection: impl Into<String>,
        action: impl Into<String>,
        input: impl Into<String>,
    ) -> Self {
        Transaction {
            selection: selection.into(),
            action: action.into(),
            input: input.into(),
            timestamp: 0,
        }
    }

    pub fn accepted_by(&self, link: &GraphLink) -> bool {
        link.matcher
            .accepts(&self.selection, &self.action, &self.input)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub message: Option<String>,
    /// Matched link ids in document order.
    pub matched_links: Vec<String>,
}

impl Verdict {
    pub fn is_correct(&self) -> bool {
        self.kind == VerdictKind::Correct
    }

    fn incorrect(message: &str, matched_links: Vec<String>) -> Self {
        Verdict {
            kind: VerdictKind::Incorrect,
            message: Some(message.to_string()),
            matched_links,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HintResponse {
    pub target_link: String,
    pub level: usize,
    pub message: String,
    pub is_bottom_out: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("graph is not ready for tutoring: {}", summarize(.0))]
    InvalidGraph(Vec<Diagnostic>),
    #[error("the problem is already complete")]
    AlreadyDone,
}

fn summarize(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .filter(|d| d.severity() == Severity::Error)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// An unordered group taken partly out of order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct OpenRun {
    group: usize,
    /// Chain position of the first link not yet taken.
    missing: usize,
    /// Chain positions past `missing` already taken.
    taken: BTreeSet<usize>,
}

/// One hypothesis about the path the learner is following.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    /// Matched link ids, in the order the learner took them.
    pub path: Vec<String>,
    /// Last problem state known to be reached.
    pub frontier: String,
    open: Option<OpenRun>,
}

impl Interpretation {
    /// True while an unordered group is partly done out of order.
    pub fn is_pending(&self) -> bool {
        self.open.is_some()
    }

    fn key(&self) -> (&str, Option<&OpenRun>) {
        (self.frontier.as_str(), self.open.as_ref())
    }
}

/// Graph plus the lookup tables the tracer needs.
#[derive(Debug)]
struct Prepared {
    graph: BehaviorGraph,
    /// Group chains as link indices, in walk order.
    chains: Vec<Vec<usize>>,
    /// Link index to (group, chain position).
    chain_pos: HashMap<usize, (usize, usize)>,
    /// Link indices leaving each node, in document order.
    outgoing: HashMap<String, Vec<usize>>,
    by_id: HashMap<String, usize>,
}

impl Prepared {
    fn new(graph: BehaviorGraph) -> Self {
        let by_id: HashMap<String, usize> = graph
            .links
            .iter()
            .enumerate()
            .map(|(i, l)| (l.id.clone(), i))
            .collect();
        let mut outgoing: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, l) in graph.links.iter().enumerate() {
            outgoing.entry(l.source.clone()).or_default().push(i);
        }
        for list in outgoing.values_mut() {
            list.sort_by_key(|&i| graph.links[i].document_order);
        }
        let mut chains = Vec::new();
        let mut chain_pos = HashMap::new();
        for (g, group) in graph.unordered_groups.iter().enumerate() {
            let chain: Vec<usize> = graph
                .group_chain(group)
                .expect("validated groups are chains")
                .into_iter()
                .map(|l| by_id[&l.id])
                .collect();
            for (p, &li) in chain.iter().enumerate() {
                chain_pos.insert(li, (g, p));
            }
            chains.push(chain);
        }
        Prepared {
            graph,
            chains,
            chain_pos,
            outgoing,
            by_id,
        }
    }

    fn link(&self, i: usize) -> &GraphLink {
        &self.graph.links[i]
    }

    fn outgoing(&self, node: &str) -> &[usize] {
        self.outgoing.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    fn is_terminal(&self, node: &str) -> bool {
        !self
            .outgoing(node)
            .iter()
            .any(|&i| self.link(i).evaluation == Evaluation::Correct)
    }

    /// Node reached once the first `pos` links of a chain are taken.
    fn chain_node(&self, group: usize, pos: usize) -> &str {
        let chain = &self.chains[group];
        if pos == chain.len() {
            &self.link(chain[pos - 1]).target
        } else {
            &self.link(chain[pos]).source
        }
    }

    /// Every legal next step from `interp` as (link index, resulting state).
    fn moves(&self, interp: &Interpretation) -> Vec<(usize, String, Option<OpenRun>)> {
        let mut out = Vec::new();
        match &interp.open {
            None => {
                for &li in self.outgoing(&interp.frontier) {
                    let link = self.link(li);
                    if link.evaluation.advances() {
                        out.push((li, link.target.clone(), None));
                    }
                }
                // Out-of-order entry into any chain passing through the frontier.
                for &li in self.outgoing(&interp.frontier) {
                    let Some(&(group, entry)) = self.chain_pos.get(&li) else {
                        continue;
                    };
                    for pos in entry + 1..self.chains[group].len() {
                        let run = OpenRun {
                            group,
                            missing: entry,
                            taken: BTreeSet::from([pos]),
                        };
                        out.push((self.chains[group][pos], interp.frontier.clone(), Some(run)));
                    }
                }
            }
            Some(run) => {
                let chain = &self.chains[run.group];
                for pos in run.missing..chain.len() {
                    if run.taken.contains(&pos) {
                        continue;
                    }
                    let mut next = run.clone();
                    next.taken.insert(pos);
                    while next.taken.remove(&next.missing) {
                        next.missing += 1;
                    }
                    let frontier = self.chain_node(run.group, next.missing).to_string();
                    let open = (!next.taken.is_empty()).then_some(next);
                    out.push((chain[pos], frontier, open));
                }
            }
        }
        out.sort_by_key(|(li, _, _)| self.link(*li).document_order);
        out
    }

    /// Links a hint may point at from `interp`: the correct steps leaving
    /// its frontier that are legal now.
    fn hint_candidates(&self, interp: &Interpretation) -> Vec<usize> {
        match &interp.open {
            None => self
                .outgoing(&interp.frontier)
                .iter()
                .copied()
                .filter(|&i| self.link(i).evaluation == Evaluation::Correct)
                .collect(),
            Some(run) => vec![self.chains[run.group][run.missing]],
        }
    }
}

/// The learner's progress through one problem.
///
/// A value type: [`trace`](TraceState::trace) and
/// [`request_hint`](TraceState::request_hint) return new states.
#[derive(Debug, Clone)]
pub struct TraceState {
    prepared: Arc<Prepared>,
    interpretations: Vec<Interpretation>,
    history: Vec<(Transaction, Verdict)>,
    hint_levels: BTreeMap<String, usize>,
}

/// Starts tracing a graph. Fails when validation reports any error.
pub fn start_trace(graph: BehaviorGraph) -> Result<TraceState, TraceError> {
    let diags = validate_graph(&graph);
    if diags.iter().any(|d| d.severity() == Severity::Error) {
        return Err(TraceError::InvalidGraph(diags));
    }
    let start = graph.start_node.clone();
    let hint_levels = graph
        .links
        .iter()
        .filter(|l| l.evaluation == Evaluation::Correct)
        .map(|l| (l.id.clone(), 0))
        .collect();
    Ok(TraceState {
        prepared: Arc::new(Prepared::new(graph)),
        interpretations: vec![Interpretation {
            path: Vec::new(),
            frontier: start,
            open: None,
        }],
        history: Vec::new(),
        hint_levels,
    })
}

/// Runs `txns` through a fresh trace and returns the verdicts.
pub fn replay(graph: BehaviorGraph, txns: &[Transaction]) -> Result<Vec<Verdict>, TraceError> {
    let mut state = start_trace(graph)?;
    let mut verdicts = Vec::with_capacity(txns.len());
    for txn in txns {
        let (next, verdict) = state.trace(txn.clone());
        state = next;
        verdicts.push(verdict);
    }
    Ok(verdicts)
}

impl TraceState {
    pub fn graph(&self) -> &BehaviorGraph {
        &self.prepared.graph
    }

    pub fn interpretations(&self) -> &[Interpretation] {
        &self.interpretations
    }

    pub fn history(&self) -> &[(Transaction, Verdict)] {
        &self.history
    }

    /// Next hint level for every correct link.
    pub fn hint_levels(&self) -> &BTreeMap<String, usize> {
        &self.hint_levels
    }

    /// Link ids taken out of order and not yet reconciled, per interpretation.
    pub fn pending_links(&self, interp: &Interpretation) -> Vec<&str> {
        match &interp.open {
            None => Vec::new(),
            Some(run) => run
                .taken
                .iter()
                .map(|&p| {
                    self.prepared
                        .link(self.prepared.chains[run.group][p])
                        .id
                        .as_str()
                })
                .collect(),
        }
    }

    /// True once some interpretation rests on a state with no correct step left.
    pub fn is_done(&self) -> bool {
        self.interpretations
            .iter()
            .any(|i| i.open.is_none() && self.prepared.is_terminal(&i.frontier))
    }

    /// Judges one transaction and returns the successor state.
    pub fn trace(&self, txn: Transaction) -> (TraceState, Verdict) {
        let mut next = self.clone();
        let verdict = next.apply(&txn);
        next.history.push((txn, verdict.clone()));
        (next, verdict)
    }

    fn apply(&mut self, txn: &Transaction) -> Verdict {
        if self.is_done() {
            return Verdict::incorrect(ALREADY_COMPLETE, Vec::new());
        }
        let prepared = Arc::clone(&self.prepared);

        let mut matched: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut extended: Vec<Interpretation> = Vec::new();
        for interp in &self.interpretations {
            for (li, frontier, open) in prepared.moves(interp) {
                let link = prepared.link(li);
                if !txn.accepted_by(link) {
                    continue;
                }
                matched.insert((link.document_order, li));
                if extended
                    .iter()
                    .any(|e| e.key() == (frontier.as_str(), open.as_ref()))
                {
                    continue;
                }
                let mut path = interp.path.clone();
                path.push(link.id.clone());
                extended.push(Interpretation {
                    path,
                    frontier,
                    open,
                });
            }
        }
        if !extended.is_empty() {
            self.interpretations = extended;
            let links: Vec<&GraphLink> = matched.iter().map(|&(_, li)| prepared.link(li)).collect();
            let message = (!links.iter().any(|l| l.evaluation == Evaluation::Correct))
                .then(|| SUBOPTIMAL_NOTE.to_string());
            return Verdict {
                kind: VerdictKind::Correct,
                message,
                matched_links: links.iter().map(|l| l.id.clone()).collect(),
            };
        }

        let mut buggy: BTreeSet<(usize, usize)> = BTreeSet::new();
        for interp in &self.interpretations {
            for &li in prepared.outgoing(&interp.frontier) {
                let link = prepared.link(li);
                if link.evaluation == Evaluation::Incorrect && txn.accepted_by(link) {
                    buggy.insert((link.document_order, li));
                }
            }
        }
        match buggy.first() {
            None => Verdict::incorrect(GENERIC_INCORRECT, Vec::new()),
            Some(&(_, first)) => {
                let message = prepared
                    .link(first)
                    .buggy_message
                    .as_deref()
                    .unwrap_or(GENERIC_INCORRECT);
                let ids = buggy
                    .iter()
                    .map(|&(_, li)| prepared.link(li).id.clone())
                    .collect();
                Verdict::incorrect(message, ids)
            }
        }
    }

    /// The correct link the next hint is about, if the problem is not done.
    ///
    /// Interpretations resting on the earliest node in document order win;
    /// among their candidate links the lowest document order wins.
    pub fn hint_target(&self) -> Option<&GraphLink> {
        if self.is_done() {
            return None;
        }
        let prepared = &self.prepared;
        let rank = |i: &Interpretation| prepared.graph.node_rank(&i.frontier).unwrap_or(usize::MAX);
        let best = self.interpretations.iter().map(rank).min()?;
        self.interpretations
            .iter()
            .filter(|i| rank(i) == best)
            .flat_map(|i| prepared.hint_candidates(i))
            .map(|li| prepared.link(li))
            .min_by_key(|l| l.document_order)
    }

    /// Returns the next hint for the current step and escalates its level.
    pub fn request_hint(&self) -> Result<(TraceState, HintResponse), TraceError> {
        let link = self.hint_target().ok_or(TraceError::AlreadyDone)?;
        let last = link.hints.len().saturating_sub(1);
        let level = self
            .hint_levels
            .get(&link.id)
            .copied()
            .unwrap_or(0)
            .min(last);
        let response = HintResponse {
            target_link: link.id.clone(),
            level,
            message: link.hints.get(level).cloned().unwrap_or_default(),
            is_bottom_out: level == last,
        };
        let mut next = self.clone();
        next.hint_levels
            .insert(link.id.clone(), (level + 1).min(last));
        Ok((next, response))
    }

    /// Looks up a link by id in the traced graph.
    pub fn link(&self, id: &str) -> Option<&GraphLink> {
        self.prepared.by_id.get(id).map(|&i| self.prepared.link(i))
    }
}
