#![allow(dead_code)]

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use reqwest::blocking::Client;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gatutor"))
}

/// Fresh data directory with the fixture graphs as its problem library.
pub fn data_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().expect("temp dir");
    let problems = dir.path().join("problems");
    std::fs::create_dir_all(&problems).unwrap();
    for entry in std::fs::read_dir(fixtures().join("graphs")).unwrap() {
        let path = entry.unwrap().path();
        if path.is_file() {
            std::fs::copy(&path, problems.join(path.file_name().unwrap())).unwrap();
        }
    }
    dir
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

/// A running `gatutor serve`, killed on drop.
pub struct Server {
    child: Child,
    pub base: String,
    pub client: Client,
}

impl Server {
    pub fn start(data_dir: &Path) -> Server {
        for _ in 0..5 {
            let port = free_port();
            let child = bin()
                .args(["serve", "--port", &port.to_string(), "--data-dir"])
                .arg(data_dir)
                .env("GATUTOR_LOG", "warn")
                .stdout(Stdio::null())
                .stderr(Stdio::null())
                .spawn()
                .expect("spawning gatutor");
            let mut server = Server {
                child,
                base: format!("http://127.0.0.1:{port}"),
                client: Client::builder()
                    .timeout(Duration::from_secs(10))
                    .build()
                    .unwrap(),
            };
            if server.wait_ready() {
                return server;
            }
            server.kill();
        }
        panic!("service did not start");
    }

    fn wait_ready(&mut self) -> bool {
        let deadline = Instant::now() + Duration::from_secs(10);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return false;
            }
            if self
                .client
                .get(self.url("/problems"))
                .send()
                .is_ok_and(|r| r.status().is_success())
            {
                return true;
            }
            std::thread::sleep(Duration::from_millis(20));
        }
        false
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    /// SIGKILL, no chance to flush anything.
    pub fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.kill();
    }
}

/// The scripted first run: (expected link, selection, action, input).
pub const GOLDEN_STEPS: [(&str, &str, &str, &str); 6] = [
    (
        "choose-file",
        "CHOOSE FILE",
        "FileSelected",
        "genomeA.RefSeq.cds.tab",
    ),
    ("next", "NEXT", "ButtonPressed", ""),
    ("process", "PROCESS FILES", "ButtonPressed", ""),
    ("format", "RESULT FORMAT", "FormatSelected", "txt"),
    ("download", "DOWNLOAD", "ButtonPressed", ""),
    ("finish", "DONE", "ButtonPressed", ""),
];

pub fn step_body(i: usize) -> serde_json::Value {
    let (_, selection, action, input) = GOLDEN_STEPS[i];
    serde_json::json!({ "selection": selection, "action": action, "input": input })
}
