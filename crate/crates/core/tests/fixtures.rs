use gatutor_core::adjacency::{
    analyze, export_report, InputFile, DEFAULT_GAP_THRESHOLD, DEFAULT_MIN_MATCH_LEN,
};
use gatutor_core::graph::GraphError;
use gatutor_core::mastery::updated_knowledge;
use gatutor_core::session::read_transaction_log;
use gatutor_core::{
    init_mastery, parse_graph, replay, skill_matrix, start_trace, validate_graph, BehaviorGraph,
    Transaction, VerdictKind,
};
use gatutor_testkit::read_fixture;

fn six_step() -> BehaviorGraph {
    parse_graph(&read_fixture("graphs/gene_adjacency.brd.xml")).unwrap()
}

fn golden_log() -> Vec<Transaction> {
    read_transaction_log(&read_fixture("logs/golden_session.jsonl")).unwrap()
}

#[test]
fn six_step_graph_shape() {
    let g = six_step();
    assert!(validate_graph(&g).is_empty(), "{:?}", validate_graph(&g));
    let m = skill_matrix(&g);
    assert_eq!(m.columns, vec!["process-files", "select-file"]);
    assert_eq!(
        m.rows,
        vec![
            "choose-file",
            "next",
            "process",
            "format",
            "download",
            "finish"
        ]
    );
    assert_eq!(m.get("choose-file", "select-file"), Some(1));
    assert_eq!(m.get("choose-file", "process-files"), Some(0));
    assert_eq!(m.get("process", "process-files"), Some(1));
    assert_eq!(init_mastery(&g).len(), 2);
}

#[test]
fn dangling_target_names_the_link() {
    match parse_graph(&read_fixture("graphs/invalid/dangling_target.brd.xml")) {
        Err(GraphError::DanglingReference { id, reference, .. }) => {
            assert_eq!(id, "lost");
            assert_eq!(reference, "nowhere");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn golden_walk_with_hints() {
    let state = start_trace(six_step()).unwrap();
    assert_eq!(state.interpretations().len(), 1);
    assert_eq!(state.interpretations()[0].frontier, "start");
    let expected = [
        "choose-file",
        "next",
        "process",
        "format",
        "download",
        "finish",
    ];
    let mut state = state;
    for (txn, link) in golden_log().into_iter().zip(expected) {
        let (hinted, hint) = state.request_hint().unwrap();
        assert_eq!(hint.target_link, link);
        assert_eq!(hint.level, 0);
        let (next, verdict) = hinted.trace(txn);
        assert!(verdict.is_correct());
        state = next;
    }
    assert!(state.is_done());
    assert!(replay(six_step(), &golden_log())
        .unwrap()
        .iter()
        .all(|v| v.kind == VerdictKind::Correct));
}

#[test]
fn early_processing_gets_buggy_message_and_debits_step_one() {
    let g = six_step();
    let state = start_trace(g.clone()).unwrap();
    let (_, v) = state.trace(Transaction::new("PROCESS FILES", "ButtonPressed", ""));
    assert_eq!(v.message.as_deref(), Some("Select a RefSeq file first"));
    let charged = init_mastery(&g)
        .apply_verdict(&g, &v, Some("choose-file"))
        .unwrap();
    assert_eq!(charged.get("select-file").unwrap().opportunities, 1);

    let (_, generic) = state.trace(Transaction::new("HELP", "ButtonPressed", ""));
    let target = state.hint_target().map(|l| l.id.clone());
    assert_eq!(target.as_deref(), Some("choose-file"));
    let m = init_mastery(&g)
        .apply_verdict(&g, &generic, target.as_deref())
        .unwrap();
    let expected = updated_knowledge(0.25, &g.skill("select-file").unwrap().params, false).0;
    assert_eq!(m.get("select-file").unwrap().p_know, expected);
    assert_eq!(m.get("process-files").unwrap().p_know, 0.25);
}

#[test]
fn golden_report_from_fixture() {
    let files = [InputFile {
        name: "genomeA.RefSeq.cds.tab".into(),
        text: read_fixture("genomes/genomeA.RefSeq.cds.tab"),
    }];
    let a = analyze(&files, DEFAULT_GAP_THRESHOLD, DEFAULT_MIN_MATCH_LEN).unwrap();
    assert_eq!(export_report(&a), read_fixture("golden/genomeA.report.txt"));
}
