//! Random behavior graphs and transaction sequences.

use std::collections::BTreeSet;

use gatutor_core::graph::{
    validate_graph, BehaviorGraph, Evaluation, GraphLink, GraphNode, MatchPattern, Severity,
    SkillDef, SkillParams, StepMatcher,
};
use gatutor_core::Transaction;
use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

const SELECTIONS: [&str; 3] = ["A", "B", "C"];
const ACTIONS: [&str; 2] = ["Press", "Enter"];
const INPUTS: [&str; 5] = ["", "x", "y", "xy", "yx"];

fn random_pattern(rng: &mut StdRng) -> MatchPattern {
    match rng.random_range(0..4) {
        0 | 1 => MatchPattern::exact(*INPUTS.choose(rng).unwrap()),
        2 => MatchPattern::wildcard(*["*", "x*", "?", "*x"].choose(rng).unwrap()),
        _ => MatchPattern::regex(*["x|y", "x+", "(xy)*"].choose(rng).unwrap()).unwrap(),
    }
}

/// A random graph with at most `max_nodes` nodes and `max_links` links that
/// passes validation without errors. Up to two unordered groups are added
/// along chains of correct links.
pub fn random_graph(rng: &mut StdRng, max_nodes: usize, max_links: usize) -> BehaviorGraph {
    loop {
        let g = try_graph(rng, max_nodes, max_links);
        if !validate_graph(&g)
            .iter()
            .any(|d| d.severity() == Severity::Error)
        {
            return g;
        }
    }
}

fn try_graph(rng: &mut StdRng, max_nodes: usize, max_links: usize) -> BehaviorGraph {
    let n = rng.random_range(1..=max_nodes);
    let nodes: Vec<GraphNode> = (0..n)
        .map(|i| GraphNode {
            id: format!("n{i}"),
            label: format!("state {i}"),
        })
        .collect();
    let skill_names = ["s1", "s2"];
    let m = rng.random_range(0..=max_links);
    let mut links = Vec::with_capacity(m);
    let mut reached = vec![0usize];
    for i in 0..m {
        let source = if rng.random_bool(0.85) {
            *reached.choose(rng).unwrap()
        } else {
            rng.random_range(0..n)
        };
        let roll = rng.random_range(0..100);
        let evaluation = if roll < 60 {
            Evaluation::Correct
        } else if roll < 75 {
            Evaluation::Suboptimal
        } else {
            Evaluation::Incorrect
        };
        let target = if evaluation == Evaluation::Incorrect {
            source
        } else {
            rng.random_range(0..n)
        };
        if evaluation.advances() && !reached.contains(&target) {
            reached.push(target);
        }
        let hints = if evaluation == Evaluation::Correct || rng.random_bool(0.3) {
            (0..rng.random_range(1..=3))
                .map(|h| format!("hint {h} for l{i}"))
                .collect()
        } else {
            Vec::new()
        };
        let skills = skill_names
            .iter()
            .filter(|_| rng.random_bool(0.3))
            .map(|s| s.to_string())
            .collect();
        links.push(GraphLink {
            id: format!("l{i}"),
            source: format!("n{source}"),
            target: format!("n{target}"),
            matcher: StepMatcher::new(
                *SELECTIONS.choose(rng).unwrap(),
                *ACTIONS.choose(rng).unwrap(),
                random_pattern(rng),
            ),
            evaluation,
            hints,
            buggy_message: (evaluation == Evaluation::Incorrect && rng.random_bool(0.7))
                .then(|| format!("buggy l{i}")),
            skills,
            document_order: i,
        });
    }
    let mut graph = BehaviorGraph {
        id: format!("rand{}", rng.random::<u32>()),
        title: "random".into(),
        start_node: "n0".into(),
        nodes,
        links,
        skills: skill_names
            .iter()
            .map(|s| SkillDef {
                name: s.to_string(),
                label: s.to_uppercase(),
                params: SkillParams::default(),
            })
            .collect(),
        unordered_groups: Vec::new(),
    };
    let wanted = rng.random_range(0..=2);
    for _ in 0..wanted * 8 {
        if graph.unordered_groups.len() == wanted {
            break;
        }
        if let Some(group) = random_chain(rng, &graph) {
            graph.unordered_groups.push(group);
        }
    }
    graph
}

/// Walks correct, ungrouped links through distinct nodes.
fn random_chain(rng: &mut StdRng, g: &BehaviorGraph) -> Option<BTreeSet<String>> {
    let grouped: BTreeSet<&str> = g
        .unordered_groups
        .iter()
        .flatten()
        .map(String::as_str)
        .collect();
    let mut node = g.nodes.choose(rng)?.id.clone();
    let mut visited = BTreeSet::from([node.clone()]);
    let mut chain = BTreeSet::new();
    let want = rng.random_range(2..=3);
    while chain.len() < want {
        let options: Vec<&GraphLink> = g
            .links
            .iter()
            .filter(|l| {
                l.source == node
                    && l.evaluation == Evaluation::Correct
                    && !grouped.contains(l.id.as_str())
                    && !visited.contains(&l.target)
            })
            .collect();
        let step = options.choose(rng)?;
        visited.insert(step.target.clone());
        chain.insert(step.id.clone());
        node = step.target.clone();
    }
    (chain.len() >= 2).then_some(chain)
}

/// An input the pattern accepts, if one of a few candidates does.
fn sample_input(rng: &mut StdRng, pattern: &MatchPattern) -> String {
    let options: Vec<&str> = ["", "x", "y", "xy", "yx", "xx", "xyxy"]
        .into_iter()
        .filter(|c| pattern.matches(c))
        .collect();
    options
        .choose(rng)
        .map(|s| s.to_string())
        .unwrap_or_default()
}

fn random_txn(rng: &mut StdRng) -> Transaction {
    Transaction::new(
        *SELECTIONS.choose(rng).unwrap(),
        *ACTIONS.choose(rng).unwrap(),
        *INPUTS.choose(rng).unwrap(),
    )
}

/// Random transactions that mostly follow a random walk through the graph.
///
/// Runs of grouped links are shuffled and noise steps are mixed in, so the
/// sequence exercises correct, modeled-error and unmatched paths.
pub fn random_transactions(
    rng: &mut StdRng,
    graph: &BehaviorGraph,
    max_len: usize,
) -> Vec<Transaction> {
    let len = rng.random_range(0..=max_len);
    let mut walk: Vec<&GraphLink> = Vec::new();
    let mut node = graph.start_node.as_str();
    while walk.len() < len {
        let options: Vec<&GraphLink> = graph
            .links
            .iter()
            .filter(|l| l.source == node && l.evaluation.advances())
            .collect();
        let Some(step) = options.choose(rng) else {
            break;
        };
        walk.push(step);
        node = &step.target;
    }
    let group_of = |l: &GraphLink| {
        graph
            .unordered_groups
            .iter()
            .position(|g| g.contains(&l.id))
    };
    let mut i = 0;
    while i < walk.len() {
        let mut j = i + 1;
        while j < walk.len()
            && group_of(walk[i]).is_some()
            && group_of(walk[j]) == group_of(walk[i])
        {
            j += 1;
        }
        walk[i..j].shuffle(rng);
        i = j;
    }

    let mut out = Vec::with_capacity(len);
    let mut steps = walk.into_iter();
    while out.len() < len {
        let roll = rng.random_range(0..100);
        let txn = if roll < 15 {
            random_txn(rng)
        } else if roll < 30 {
            match graph.links.choose(rng) {
                Some(l) => Transaction::new(
                    l.matcher.selection.clone(),
                    l.matcher.action.clone(),
                    sample_input(rng, &l.matcher.input),
                ),
                None => random_txn(rng),
            }
        } else {
            match steps.next() {
                Some(l) => Transaction::new(
                    l.matcher.selection.clone(),
                    l.matcher.action.clone(),
                    sample_input(rng, &l.matcher.input),
                ),
                None => random_txn(rng),
            }
        };
        out.push(txn);
    }
    for (i, t) in out.iter_mut().enumerate() {
        t.timestamp = i as u64;
    }
    out
}
