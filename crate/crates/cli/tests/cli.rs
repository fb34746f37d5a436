use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

fn gal() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gal"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const BLOBS: &str = r#"
[dataset]
source = "blobs"
n = 90
d = 6
k = 3
cluster_std = 2.0

[partition]
n_orgs = 3

[run]
n_trials = 2

[gal]
learner = "ridge:1"
loss = "cross_entropy"
t_max = 4
"#;

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn oracle_checks_pass() {
    let out = gal().arg("oracle").output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(
        text.lines().filter(|l| l.starts_with("PASS")).count(),
        5,
        "{text}"
    );
}

#[test]
fn run_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BLOBS);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let res = gal()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(res.status.success(), "{}", stderr(&res));
        assert!(stdout(&res).contains("accuracy"));
    }
    for name in [
        "report.json",
        "report.txt",
        "trial_0_history.csv",
        "trial_1_ensemble.json",
    ] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let history = std::fs::read_to_string(a.join("trial_0_history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(
        lines.next().unwrap(),
        "round,train_loss,test_metric,eta,w_1,w_2,w_3"
    );
    assert!(lines.count() <= 4);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BLOBS);
    let out = dir.path().join("o");
    let res = gal()
        .args(["run", "--kind", "alone", "--seed", "7", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", stderr(&res));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["kind"], "alone");
    assert_eq!(report["base_seed"], 7);
    assert_eq!(report["trials"][1]["seed"], 8);
}

#[test]
fn config_errors_are_listed_together_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[dataset]\nsource = \"csv\"\npath = \"missing.csv\"\nlabel = \"y\"\n[run]\nn_trials = 0\n",
    );
    let res = gal().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
    let err = stderr(&res);
    assert!(
        err.contains("missing.csv") && err.contains("n_trials"),
        "{err}"
    );

    let cfg = write_config(dir.path(), "[dataset]\nsource = \"blobs\"\nbogus = 1\n");
    let res = gal().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unreachable_daemon_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // Reserve a port and release it so nothing listens there.
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let body = format!(
        "{BLOBS}\n[transport]\nkind = \"tcp\"\ntimeout_secs = 2\naddresses = [\"127.0.0.1:{port}\", \"127.0.0.1:{port}\"]\n"
    );
    let cfg = write_config(dir.path(), &body);
    let res = gal().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(res.status.code(), Some(3), "{}", stderr(&res));
}

fn spawn_daemon(cfg: &Path, org: usize) -> (Child, String) {
    let mut child = gal()
        .args(["serve", "--bind", "127.0.0.1:0", "--org"])
        .arg(org.to_string())
        .arg("--config")
        .arg(cfg)
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.as_mut().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .strip_prefix("listening ")
        .expect("listening line")
        .to_string();
    (child, addr)
}

#[test]
fn separate_daemon_processes_match_in_process_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BLOBS);
    let local = dir.path().join("local");
    let res = gal()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&local)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", stderr(&res));

    let daemons: Vec<(Child, String)> = (2..=3).map(|org| spawn_daemon(&cfg, org)).collect();
    let addrs: Vec<String> = daemons.iter().map(|(_, a)| format!("\"{a}\"")).collect();
    let body = format!(
        "{BLOBS}\n[transport]\nkind = \"tcp\"\naddresses = [{}]\n",
        addrs.join(", ")
    );
    let tcp_cfg = dir.path().join("tcp.toml");
    std::fs::write(&tcp_cfg, body).unwrap();
    let remote = dir.path().join("remote");
    let res = gal()
        .args(["run", "--config"])
        .arg(&tcp_cfg)
        .arg("--out")
        .arg(&remote)
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", stderr(&res));

    for (child, _) in daemons {
        let out = child.wait_with_output().unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stderr(&out).contains("2 connections"), "{}", stderr(&out));
    }
    // Ensembles differ by design: a TCP run keeps handles to remote models.
    for name in ["report.json", "trial_0_history.csv", "trial_1_history.csv"] {
        assert_eq!(
            std::fs::read_to_string(local.join(name)).unwrap(),
            std::fs::read_to_string(remote.join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn daemon_answers_malformed_line_then_stops_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BLOBS);
    let (child, addr) = spawn_daemon(&cfg, 2);

    let mut conn = TcpStream::connect(&addr).unwrap();
    conn.write_all(b"{not json\n").unwrap();
    let mut reply = String::new();
    BufReader::new(conn.try_clone().unwrap())
        .read_line(&mut reply)
        .unwrap();
    assert!(
        reply.contains("\"type\":\"stop\"") && reply.contains("protocol error"),
        "{reply}"
    );

    let mut conn = TcpStream::connect(&addr).unwrap();
    conn.write_all(b"{\"type\":\"stop\",\"reason\":\"test\"}\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stderr(&out).contains("1 protocol errors"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn serve_rejects_label_holder_org() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BLOBS);
    let res = gal()
        .args(["serve", "--org", "1", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn inspect_summarizes_ensemble_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), BLOBS);
    let out = dir.path().join("o");
    assert!(gal()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap()
        .status
        .success());

    let res = gal()
        .arg("inspect")
        .arg(out.join("trial_0_ensemble.json"))
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", stderr(&res));
    let text = stdout(&res);
    assert!(
        text.contains("organizations: 3") && text.contains("round  eta"),
        "{text}"
    );

    let res = gal().arg("inspect").arg(&out).output().unwrap();
    assert_eq!(
        stdout(&res),
        std::fs::read_to_string(out.join("report.txt")).unwrap()
    );
}
