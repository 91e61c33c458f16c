mod common;

use common::{data_dir, fixture, step_body, Server, GOLDEN_STEPS};
use reqwest::StatusCode;
use serde_json::{json, Value};

fn create(s: &Server, graph: &str) -> String {
    let r = s
        .client
        .post(s.url("/sessions"))
        .json(&json!({ "graph_id": graph }))
        .send()
        .unwrap();
    assert_eq!(r.status(), StatusCode::CREATED);
    r.json::<Value>().unwrap()["session_id"]
        .as_str()
        .unwrap()
        .to_string()
}

fn post(s: &Server, path: &str, body: Value) -> (StatusCode, Value) {
    let r = s.client.post(s.url(path)).json(&body).send().unwrap();
    (r.status(), r.json().unwrap())
}

fn upload(s: &Server, sid: &str, name: &str, bytes: Vec<u8>) -> (StatusCode, Value) {
    let r = s
        .client
        .post(s.url(&format!("/sessions/{sid}/files")))
        .query(&[("name", name)])
        .body(bytes)
        .send()
        .unwrap();
    (r.status(), r.json().unwrap())
}

fn genome_a() -> Vec<u8> {
    std::fs::read(fixture("genomes/genomeA.RefSeq.cds.tab")).unwrap()
}

#[test]
fn sessions_and_problems() {
    let dir = data_dir();
    let s = Server::start(dir.path());
    let problems: Value = s
        .client
        .get(s.url("/problems"))
        .send()
        .unwrap()
        .json()
        .unwrap();
    let ids: Vec<&str> = problems["problems"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"gene-adjacency"));
    assert!(!ids.contains(&"dangling"));

    let a = create(&s, "gene-adjacency");
    let b = create(&s, "gene-adjacency");
    assert_ne!(a, b);
    assert_eq!(a.len(), 32);

    let (status, body) = post(&s, "/sessions", json!({ "graph_id": "nope" }));
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownGraph");
    let r = s
        .client
        .get(s.url(&format!("/sessions/{}", "f".repeat(32))))
        .send()
        .unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
    let r = s
        .client
        .post(s.url("/sessions"))
        .body("not json")
        .send()
        .unwrap();
    assert_eq!(r.status().as_u16() / 100, 4);
}

#[test]
fn transactions_hints_and_done() {
    let dir = data_dir();
    let s = Server::start(dir.path());
    let sid = create(&s, "gene-adjacency");

    let (_, hint) = post(&s, &format!("/sessions/{sid}/hint"), json!({}));
    assert_eq!(hint["target_link"], "choose-file");
    assert_eq!(hint["level"], 0);
    for expected in [1, 2, 2] {
        let (_, h) = post(&s, &format!("/sessions/{sid}/hint"), json!({}));
        assert_eq!(h["level"], expected);
    }

    let events = dir.path().join("sessions").join(&sid).join("events.jsonl");
    let before = std::fs::read_to_string(&events).unwrap();
    let (status, wrong) = post(
        &s,
        &format!("/sessions/{sid}/transactions"),
        json!({"selection": "PROCESS FILES", "action": "ButtonPressed"}),
    );
    assert_eq!(status, StatusCode::OK);
    assert_eq!(wrong["verdict"]["kind"], "Incorrect");
    assert_eq!(wrong["verdict"]["message"], "Select a RefSeq file first");
    let after = std::fs::read_to_string(&events).unwrap();
    assert!(after.starts_with(&before) && after.lines().count() == before.lines().count() + 1);

    for i in 0..6 {
        let (status, out) = post(&s, &format!("/sessions/{sid}/transactions"), step_body(i));
        assert_eq!(status, StatusCode::OK);
        assert_eq!(out["verdict"]["kind"], "Correct", "step {i}");
        assert_eq!(out["verdict"]["matched_links"][0], GOLDEN_STEPS[i].0);
        assert_eq!(out["is_done"], i == 5);
    }
    let (status, body) = post(&s, &format!("/sessions/{sid}/transactions"), step_body(0));
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "SessionDone");
    let (status, body) = post(&s, &format!("/sessions/{sid}/hint"), json!({}));
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "AlreadyDone");
    assert!(
        std::fs::read_to_string(dir.path().join("sessions").join(&sid).join("audit.log"))
            .unwrap()
            .lines()
            .count()
            >= 2
    );
}

#[test]
fn skills_follow_knowledge_tracing() {
    let dir = data_dir();
    let s = Server::start(dir.path());
    let sid = create(&s, "gene-adjacency");
    let skills = |s: &Server| -> Value {
        s.client
            .get(s.url(&format!("/sessions/{sid}/skills")))
            .send()
            .unwrap()
            .json()
            .unwrap()
    };
    let fresh = skills(&s);
    for sk in fresh["skills"].as_array().unwrap() {
        assert_eq!(sk["p_know"], 0.25);
    }
    post(&s, &format!("/sessions/{sid}/transactions"), step_body(0));
    let after = skills(&s);
    let select = after["skills"]
        .as_array()
        .unwrap()
        .iter()
        .find(|k| k["name"] == "select-file")
        .unwrap();
    // 0.25 * 0.9 / (0.25 * 0.9 + 0.75 * 0.2), then transit 0.2
    let post_p = 0.225 / 0.375;
    let expected = post_p + (1.0 - post_p) * 0.2;
    assert!((select["p_know"].as_f64().unwrap() - expected).abs() < 1e-12);
    let other = after["skills"]
        .as_array()
        .unwrap()
        .iter()
        .find(|k| k["name"] == "process-files")
        .unwrap();
    assert_eq!(other["p_know"], 0.25);

    let tsv = s
        .client
        .get(s.url(&format!("/sessions/{sid}/skills?format=tsv")))
        .send()
        .unwrap()
        .text()
        .unwrap();
    assert!(tsv.starts_with("skill\tp_know\topportunities\n"));
    assert_eq!(tsv.lines().count(), 3);
    let r = s
        .client
        .get(s.url(&format!("/sessions/{}/skills", "0".repeat(32))))
        .send()
        .unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);
}

#[test]
fn files_processing_and_results() {
    let dir = data_dir();
    let s = Server::start(dir.path());
    let sid = create(&s, "gene-adjacency");

    let (status, body) = post(&s, &format!("/sessions/{sid}/process"), json!({}));
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "NoFiles");

    let (status, _) = upload(&s, &sid, "genomeA.RefSeq.cds.tab", genome_a());
    assert_eq!(status, StatusCode::CREATED);
    let (status, body) = upload(&s, &sid, "genomeA.RefSeq.cds.tab", genome_a());
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "DuplicateName");
    let bad = std::fs::read(fixture("genomes/bad_strand.cds.tab")).unwrap();
    let (status, body) = upload(&s, &sid, "bad_strand.cds.tab", bad);
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["line"], 3);

    let (status, body) = post(&s, &format!("/sessions/{sid}/process"), json!({}));
    assert_eq!(status, StatusCode::CREATED);
    let rid = body["result_id"].as_str().unwrap();
    let get = || {
        s.client
            .get(s.url(&format!("/results/{rid}")))
            .send()
            .unwrap()
            .bytes()
            .unwrap()
    };
    let first = get();
    assert_eq!(
        first,
        std::fs::read(fixture("golden/genomeA.report.txt")).unwrap()
    );
    assert_eq!(first, get());
    let r = s
        .client
        .get(s.url(&format!("/results/{}", "0".repeat(32))))
        .send()
        .unwrap();
    assert_eq!(r.status(), StatusCode::NOT_FOUND);

    let b = std::fs::read(fixture("genomes/genomeB.RefSeq.cds.tab")).unwrap();
    upload(&s, &sid, "genomeB.RefSeq.cds.tab", b);
    let (_, body) = post(
        &s,
        &format!("/sessions/{sid}/process"),
        json!({ "gap_threshold": 200 }),
    );
    let two = s
        .client
        .get(s.url(&format!("/results/{}", body["result_id"].as_str().unwrap())))
        .send()
        .unwrap()
        .text()
        .unwrap();
    assert_eq!(
        two,
        std::fs::read_to_string(fixture("golden/genomeA_genomeB.report.txt")).unwrap()
    );
    assert!(two.contains("== comparison NC_000913 vs NC_000964"));
}

#[test]
fn identical_requests_give_identical_bodies() {
    let run = || {
        let dir = data_dir();
        let s = Server::start(dir.path());
        let sid = create(&s, "gene-adjacency");
        let mut bodies = Vec::new();
        bodies.push(post(&s, &format!("/sessions/{sid}/hint"), json!({})).1);
        for i in 0..3 {
            bodies.push(post(&s, &format!("/sessions/{sid}/transactions"), step_body(i)).1);
        }
        let mut view: Value = s
            .client
            .get(s.url(&format!("/sessions/{sid}")))
            .send()
            .unwrap()
            .json()
            .unwrap();
        view["session_id"] = Value::Null;
        view["created_at"] = Value::Null;
        for step in view["steps"].as_array_mut().unwrap() {
            step["transaction"]["timestamp"] = Value::Null;
        }
        bodies.push(view);
        bodies
    };
    assert_eq!(run(), run());
}
