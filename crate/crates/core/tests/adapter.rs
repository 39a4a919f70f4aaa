use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use accent::model::{Adapter, AdapterConfig, CommentModel, ModelError, Transport};

fn exec(cmd: &str, timeout_ms: u64) -> Adapter {
    Adapter::connect(&AdapterConfig {
        transport: Transport::SubprocessStdio(cmd.to_string()),
        timeout_ms,
        max_in_flight: 4,
    })
    .unwrap()
}

fn python(script: &str) -> String {
    format!("python3 -u -c '{script}'")
}

#[test]
fn echo_server_over_stdio() {
    let cmd = format!(
        "{} serve --adapter builtin:echo",
        env!("CARGO_BIN_EXE_accent")
    );
    let a = exec(&cmd, 10_000);
    assert_eq!(
        a.generate("int add(int a, int b) { return a + b; }")
            .unwrap(),
        "int add(int a,"
    );
    assert_eq!(a.generate("x  y").unwrap(), "x y");
    assert_eq!(
        a.generate("line one\n\"quoted\" \\ back").unwrap(),
        "line one \"quoted\""
    );
}

#[test]
fn process_exiting_mid_stream_is_a_transport_error() {
    let a = exec("head -n 1 > /dev/null", 10_000);
    assert!(matches!(a.generate("a"), Err(ModelError::Transport(_))));
    // the connection stays dead
    assert!(matches!(a.generate("b"), Err(ModelError::Transport(_))));
}

#[test]
fn reply_for_unknown_id_is_a_protocol_error() {
    let a = exec(
        r#"read l; echo "{\"id\": 999, \"comment\": \"x\"}"; sleep 5"#,
        10_000,
    );
    assert!(matches!(a.generate("a"), Err(ModelError::Protocol(_))));
}

#[test]
fn reply_without_comment_is_malformed() {
    let a = exec(r#"read l; echo "{\"id\": 0}"; sleep 5"#, 10_000);
    assert!(matches!(a.generate("a"), Err(ModelError::Malformed(_))));
}

#[test]
fn timeout_retries_once_and_drops_the_late_reply() {
    // answers the first request only after the client gave up on it
    let script = python(
        "import sys, json, time
r = json.loads(sys.stdin.readline())
time.sleep(0.8)
print(json.dumps({\"id\": r[\"id\"], \"comment\": \"stale\"}))
r = json.loads(sys.stdin.readline())
print(json.dumps({\"id\": r[\"id\"], \"comment\": \"fresh\"}))
time.sleep(5)",
    );
    let a = exec(&script, 500);
    assert_eq!(a.generate("x").unwrap(), "fresh");
}

#[test]
fn second_timeout_is_reported() {
    let a = exec("cat > /dev/null", 100);
    assert!(matches!(a.generate("x"), Err(ModelError::Timeout { .. })));
}

/// Replies in reverse arrival order once `batch` requests are outstanding (or
/// the line goes quiet), recording the largest number outstanding at once.
fn scrambling_server(batch: usize) -> (String, Arc<Mutex<usize>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    let peak = Arc::new(Mutex::new(0));
    let seen = Arc::clone(&peak);
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        stream
            .set_read_timeout(Some(Duration::from_millis(50)))
            .unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut out = stream;
        let mut waiting: Vec<serde_json::Value> = Vec::new();
        loop {
            let mut line = String::new();
            let quiet = match reader.read_line(&mut line) {
                Ok(0) => return,
                Ok(_) => {
                    waiting.push(serde_json::from_str(&line).unwrap());
                    let mut p = seen.lock().unwrap();
                    *p = (*p).max(waiting.len());
                    false
                }
                Err(_) => true,
            };
            if waiting.len() >= batch || (quiet && !waiting.is_empty()) {
                for r in waiting.drain(..).rev() {
                    let code = r["code"].as_str().unwrap();
                    let reply = accent::model::adapter::response_line(
                        r["id"].as_u64().unwrap(),
                        &code.to_uppercase(),
                    );
                    out.write_all(reply.as_bytes()).unwrap();
                }
                out.flush().unwrap();
            }
        }
    });
    (addr, peak)
}

#[test]
fn concurrent_requests_respect_max_in_flight_and_match_ids() {
    let (addr, peak) = scrambling_server(4);
    let a = Adapter::connect(&AdapterConfig {
        transport: Transport::Tcp(addr),
        timeout_ms: 10_000,
        max_in_flight: 4,
    })
    .unwrap();
    let outputs: Vec<String> = thread::scope(|s| {
        let handles: Vec<_> = (0..100)
            .map(|i| {
                let a = &a;
                s.spawn(move || a.generate(&format!("request {i}")).unwrap())
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    for (i, out) in outputs.iter().enumerate() {
        assert_eq!(out, &format!("REQUEST {i}"));
    }
    let peak = *peak.lock().unwrap();
    assert!(peak <= 4, "{peak} requests in flight");
    assert!(peak >= 2, "requests were never concurrent");
}

#[test]
fn permuted_replies_reach_their_callers() {
    // every batch size permutes differently relative to the caller threads
    for batch in [2, 3, 5] {
        let (addr, _) = scrambling_server(batch);
        let a = Adapter::connect(&AdapterConfig {
            transport: Transport::Tcp(addr),
            timeout_ms: 10_000,
            max_in_flight: batch,
        })
        .unwrap();
        let got: HashSet<(usize, String)> = thread::scope(|s| {
            let hs: Vec<_> = (0..30)
                .map(|i| {
                    let a = &a;
                    s.spawn(move || (i, a.generate(&format!("c{i}")).unwrap()))
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let want: HashSet<(usize, String)> = (0..30).map(|i| (i, format!("C{i}"))).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn tcp_against_the_cli_server() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port();
    drop(listener);
    let mut child = std::process::Command::new(env!("CARGO_BIN_EXE_accent"))
        .args([
            "serve",
            "--adapter",
            "builtin:echo",
            "--listen",
            &format!("127.0.0.1:{port}"),
        ])
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let mut adapter = None;
    for _ in 0..100 {
        let cfg = AdapterConfig::new(Transport::Tcp(format!("127.0.0.1:{port}")));
        if let Ok(a) = Adapter::connect(&cfg) {
            adapter = Some(a);
            break;
        }
        thread::sleep(Duration::from_millis(50));
    }
    let a = adapter.expect("server came up");
    assert_eq!(a.generate("one two three four").unwrap(), "one two three");
    drop(a);
    child.kill().unwrap();
    child.wait().unwrap();
}
