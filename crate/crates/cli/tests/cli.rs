use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_pip-forecast");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn train_tiny(dir: &Path, variant: &str) -> std::path::PathBuf {
    let ckpt = dir.join(format!("{variant}.safetensors"));
    let config = dir.join(format!("{variant}.toml"));
    std::fs::write(
        &config,
        format!(
            "dataset = \"synthetic-yield\"\nsource = \"seed=3,count=30\"\nvariant = \"{variant}\"\npreset = \"tiny\"\n\
             batch_size = 4\nmax_steps = 3\ncheckpoint = \"{}\"\n",
            ckpt.display()
        ),
    )
    .unwrap();
    let out = run(&["train", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("for 3 steps"));
    assert!(ckpt.exists());
    ckpt
}

#[test]
fn train_then_eval_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let pip = train_tiny(dir.path(), "pip");
    let noplan = train_tiny(dir.path(), "pip-noplan");
    let report = dir.path().join("out.json");
    let out = run(&[
        "eval",
        "--ckpt",
        pip.to_str().unwrap(),
        noplan.to_str().unwrap(),
        "--split",
        "test",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["split"], "test");
    let variants: Vec<_> = json["columns"].as_array().unwrap().iter().map(|e| e["variant"].as_str().unwrap()).collect();
    assert_eq!(variants, ["pip-noplan", "pip"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().count() >= 6, "{stdout}");
}

#[test]
fn bad_inputs_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "variant = \"nope\"\n").unwrap();
    let out = run(&["train", "--config", config.to_str().unwrap(), "--out", "x.safetensors"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));

    let out = run(&["eval", "--ckpt", dir.path().join("missing").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(!run(&["eval"]).status.success(), "--ckpt is required");
}

#[test]
fn manifest_lists_split_scenes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenes.jsonl");
    let out = run(&[
        "manifest",
        "--dataset",
        "synthetic-yield",
        "--source",
        "seed=2,count=60",
        "--limit",
        "3",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["dataset"], "synthetic-yield");
    }
}

struct Server(Child, u16);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn serve(scenes: &Path, ckpt: Option<&Path>) -> Server {
    let mut cmd = Command::new(BIN);
    cmd.args(["serve", "--scenes", scenes.to_str().unwrap()])
        .env("PIP_PORT", "0")
        .env("RUST_LOG", "warn")
        .env_remove("PIP_CKPT")
        .stdout(Stdio::piped());
    if let Some(ckpt) = ckpt {
        cmd.env("PIP_CKPT", ckpt);
    }
    let mut child = cmd.spawn().unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.as_mut().unwrap()).read_line(&mut line).unwrap();
    let addr = line.split("http://").nth(1).and_then(|s| s.split_whitespace().next()).expect(&line);
    let port = addr.rsplit(':').next().unwrap().parse().unwrap();
    Server(child, port)
}

fn request(port: u16, method: &str, path: &str, body: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).unwrap();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\n\
         Content-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    let status = response.split_whitespace().nth(1).unwrap().parse().unwrap();
    let body = response.split("\r\n\r\n").nth(1).unwrap_or_default().to_string();
    (status, body)
}

#[test]
fn serve_reads_port_and_checkpoint_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let scenes = dir.path().join("scenes.jsonl");
    let out = run(&[
        "manifest",
        "--dataset",
        "synthetic-yield",
        "--source",
        "seed=2,count=60",
        "--split",
        "train",
        "--out",
        scenes.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let ckpt = train_tiny(dir.path(), "pip");

    let server = serve(&scenes, Some(&ckpt));
    let (status, body) = request(server.1, "GET", "/health", "");
    assert_eq!(status, 200, "{body}");
    let health: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(health["model"]["variant"], "pip");
    assert!(health["scenes"].as_u64().unwrap() > 0);

    let (_, body) = request(server.1, "GET", "/scenes?limit=1", "");
    let list: serde_json::Value = serde_json::from_str(&body).unwrap();
    let id = list["scenes"][0]["scene_id"].as_str().unwrap().to_string();
    let (_, body) = request(server.1, "GET", &format!("/scenes/{id}"), "");
    let detail: serde_json::Value = serde_json::from_str(&body).unwrap();
    let plan = serde_json::json!({ "scene_id": id, "plan": detail["recorded_plan"] });
    let (status, body) = request(server.1, "POST", "/predict", &plan.to_string());
    assert_eq!(status, 200, "{body}");
    drop(server);

    let server = serve(&scenes, None);
    let (status, _) = request(server.1, "POST", "/predict", &plan.to_string());
    assert_eq!(status, 503);
}
