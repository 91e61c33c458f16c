//! Walk-enumeration oracle for the example tracer.
//!
//! A learner's accepted steps are legal when they can be laid over some walk
//! from the start node such that, inside each maximal run of links from the
//! same unordered group, steps may be taken in any order; only the final run
//! may still be incomplete. The oracle enumerates such walks directly and
//! checks every way of assigning steps to walk positions.

use std::collections::BTreeSet;

use gatutor_core::graph::{BehaviorGraph, Evaluation, GraphLink};
use gatutor_core::tracer::{ALREADY_COMPLETE, GENERIC_INCORRECT, SUBOPTIMAL_NOTE};
use gatutor_core::{Transaction, Verdict, VerdictKind};

/// One way to lay the learner's steps over a walk.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// Link indices of the walk.
    pub walk: Vec<usize>,
    /// Walk position of each learner step.
    pub slot: Vec<usize>,
}

pub struct Oracle<'g> {
    g: &'g BehaviorGraph,
    group_of: Vec<Option<usize>>,
}

impl<'g> Oracle<'g> {
    pub fn new(g: &'g BehaviorGraph) -> Self {
        let group_of = g
            .links
            .iter()
            .map(|l| {
                g.unordered_groups
                    .iter()
                    .position(|grp| grp.contains(&l.id))
            })
            .collect();
        Oracle { g, group_of }
    }

    fn link(&self, i: usize) -> &GraphLink {
        &self.g.links[i]
    }

    fn end_node(&self, walk: &[usize]) -> &str {
        walk.last()
            .map(|&i| self.link(i).target.as_str())
            .unwrap_or(&self.g.start_node)
    }

    fn same_run(&self, a: usize, b: usize) -> bool {
        matches!((self.group_of[a], self.group_of[b]), (Some(x), Some(y)) if x == y)
    }

    /// All embeddings of `m` learner steps, where `fits(step, link)` says
    /// whether a link may stand for a step.
    pub fn embeddings(&self, m: usize, fits: &dyn Fn(usize, usize) -> bool) -> Vec<Embedding> {
        let mut out = Vec::new();
        let mut walk = Vec::new();
        self.dfs(m, fits, &mut walk, &mut out);
        out
    }

    fn run_start(&self, walk: &[usize]) -> usize {
        let mut a = walk.len();
        while a > 1 && self.same_run(walk[a - 2], walk[a - 1]) {
            a -= 1;
        }
        a.saturating_sub(1)
    }

    fn dfs(
        &self,
        m: usize,
        fits: &dyn Fn(usize, usize) -> bool,
        walk: &mut Vec<usize>,
        out: &mut Vec<Embedding>,
    ) {
        let len = walk.len();
        if len >= m {
            let a = if len == 0 { 0 } else { self.run_start(walk) };
            if len == 0 || a < m {
                for assignment in assignments(a, m, len, &|step, pos| fits(step, walk[pos])) {
                    let mut slot: Vec<usize> = (0..a).collect();
                    slot.extend(assignment);
                    out.push(Embedding {
                        walk: walk.clone(),
                        slot,
                    });
                }
            }
            // The final run may extend past the learner's last step.
            if let Some(&last) = walk.last() {
                if self.group_of[last].is_some() {
                    for (i, l) in self.g.links.iter().enumerate() {
                        if l.source == self.link(last).target
                            && self.same_run(last, i)
                            && l.evaluation.advances()
                        {
                            walk.push(i);
                            self.dfs(m, fits, walk, out);
                            walk.pop();
                        }
                    }
                }
            }
            return;
        }
        let node = self.end_node(walk).to_string();
        for (i, l) in self.g.links.iter().enumerate() {
            if l.source != node || !l.evaluation.advances() {
                continue;
            }
            let continues = walk.last().is_some_and(|&last| self.same_run(last, i));
            if !continues && !walk.is_empty() {
                // The previous run closes here and must be fully covered.
                let a = self.run_start(walk);
                if assignments(a, len, len, &|step, pos| fits(step, walk[pos])).is_empty() {
                    continue;
                }
            }
            walk.push(i);
            self.dfs(m, fits, walk, out);
            walk.pop();
        }
    }

    fn is_terminal(&self, node: &str) -> bool {
        !self
            .g
            .links
            .iter()
            .any(|l| l.source == node && l.evaluation == Evaluation::Correct)
    }

    /// Verdicts the tracer must produce for `txns`.
    pub fn verdicts(&self, txns: &[Transaction]) -> Vec<Verdict> {
        let mut accepted: Vec<&Transaction> = Vec::new();
        let mut out = Vec::new();
        for txn in txns {
            let k = accepted.len();
            let prior =
                self.embeddings(k, &|step, link| accepted[step].accepted_by(self.link(link)));
            let done = prior
                .iter()
                .any(|e| e.walk.len() == k && self.is_terminal(self.end_node(&e.walk)));
            if done {
                out.push(Verdict {
                    kind: VerdictKind::Incorrect,
                    message: Some(ALREADY_COMPLETE.into()),
                    matched_links: vec![],
                });
                continue;
            }

            let extended = self.embeddings(k + 1, &|step, link| {
                let t = if step == k { txn } else { accepted[step] };
                t.accepted_by(self.link(link))
            });
            let matched: BTreeSet<(usize, usize)> = extended
                .iter()
                .map(|e| {
                    let li = e.walk[e.slot[k]];
                    (self.link(li).document_order, li)
                })
                .collect();
            if !matched.is_empty() {
                let any_correct = matched
                    .iter()
                    .any(|&(_, li)| self.link(li).evaluation == Evaluation::Correct);
                out.push(Verdict {
                    kind: VerdictKind::Correct,
                    message: (!any_correct).then(|| SUBOPTIMAL_NOTE.to_string()),
                    matched_links: matched
                        .iter()
                        .map(|&(_, li)| self.link(li).id.clone())
                        .collect(),
                });
                accepted.push(txn);
                continue;
            }

            let frontiers = self.frontiers(&prior);
            let buggy: BTreeSet<(usize, usize)> = self
                .g
                .links
                .iter()
                .enumerate()
                .filter(|(_, l)| {
                    l.evaluation == Evaluation::Incorrect
                        && frontiers.contains(l.source.as_str())
                        && txn.accepted_by(l)
                })
                .map(|(i, l)| (l.document_order, i))
                .collect();
            let message = buggy
                .first()
                .and_then(|&(_, li)| self.link(li).buggy_message.clone())
                .unwrap_or_else(|| GENERIC_INCORRECT.to_string());
            out.push(Verdict {
                kind: VerdictKind::Incorrect,
                message: Some(message),
                matched_links: buggy
                    .iter()
                    .map(|&(_, li)| self.link(li).id.clone())
                    .collect(),
            });
        }
        out
    }

    /// Node before the first walk position no learner step covers.
    pub fn frontiers<'a>(&'a self, embeddings: &[Embedding]) -> BTreeSet<&'a str> {
        embeddings
            .iter()
            .map(|e| {
                let covered: BTreeSet<usize> = e.slot.iter().copied().collect();
                match (0..e.walk.len()).find(|p| !covered.contains(p)) {
                    Some(p) => self.link(e.walk[p]).source.as_str(),
                    None => self.end_node(&e.walk),
                }
            })
            .map(|n| self.g.node(n).map(|x| x.id.as_str()).unwrap_or(""))
            .collect()
    }

    /// Whether `path` (links in the learner's order) is realizable for `txns`.
    pub fn path_is_legal(&self, txns: &[&Transaction], path: &[String]) -> bool {
        path.len() == txns.len()
            && !self
                .embeddings(path.len(), &|step, link| {
                    self.link(link).id == path[step] && txns[step].accepted_by(self.link(link))
                })
                .is_empty()
    }

    /// Frontier nodes after the accepted steps among `txns`.
    pub fn frontier_set(&self, accepted: &[&Transaction]) -> BTreeSet<String> {
        let emb = self.embeddings(accepted.len(), &|step, link| {
            accepted[step].accepted_by(self.link(link))
        });
        self.frontiers(&emb)
            .into_iter()
            .map(str::to_string)
            .collect()
    }
}

/// Injective maps from steps `a..m` to walk positions `a..len` that satisfy
/// `ok(step, pos)`; each map lists the position of steps `a, a+1, ...`.
fn assignments(
    a: usize,
    m: usize,
    len: usize,
    ok: &dyn Fn(usize, usize) -> bool,
) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    let mut used = vec![false; len];
    fn go(
        step: usize,
        a: usize,
        m: usize,
        len: usize,
        ok: &dyn Fn(usize, usize) -> bool,
        used: &mut Vec<bool>,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if step == m {
            out.push(current.clone());
            return;
        }
        for pos in a..len {
            if !used[pos] && ok(step, pos) {
                used[pos] = true;
                current.push(pos);
                go(step + 1, a, m, len, ok, used, current, out);
                current.pop();
                used[pos] = false;
            }
        }
    }
    go(a, a, m, len, ok, &mut used, &mut current, &mut out);
    out
}
