//! A scripted annotator session against the HTTP API on an ephemeral port.

use std::sync::Arc;

use serde_json::{json, Value};
use textual_history::service::{self, AppState, Role, UserStore, DEFAULT_TOKEN_TTL};
use textual_history::{Store, StoreConfig};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut users = UserStore::default();
    users.add("annotator", "correct horse", Role::Annotator)?;
    let state = Arc::new(AppState::with_users(Store::in_memory(StoreConfig::default()), users, "demo-secret", DEFAULT_TOKEN_TTL));

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    let base = format!("http://{}", listener.local_addr()?);
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(service::serve(listener, Arc::clone(&state), async {
        let _ = stopped.await;
    }));

    let http = reqwest::Client::new();
    let login: Value = http
        .post(format!("{base}/api/login"))
        .json(&json!({ "username": "annotator", "password": "correct horse" }))
        .send()
        .await?
        .json()
        .await?;
    let token = login["token"].as_str().ok_or("no token")?.to_owned();

    let steps: Vec<(&str, String, Value)> = vec![
        ("POST", "/api/works".into(), json!({ "id": "KV", "title": "Kāśikāvṛtti", "script": "Deva" })),
        ("POST", "/api/works/KV/units".into(), json!({ "id": "2.1.22", "kind": "Sutra", "base_text": "तत्पुरुषः" })),
        ("POST", "/api/works/KV/units".into(), json!({ "id": "2.1.22.1", "kind": "IntroductionMeaning",
            "base_text": "तत्पुरुषः इति संज्ञा ऽधिक्रियते प्राग् बहुव्रीहेः।" })),
        ("POST", "/api/nodes/KV~2.1.22/layers".into(), json!({ "label": "Ny", "text": "" })),
        ("POST", "/api/nodes/KV~2.1.22~Ny/layers".into(), json!({ "label": "Tp", "text": "" })),
        ("PUT", "/api/layers/KV~2.1.22~Ny".into(), json!({ "text": "first draft", "expected_revision": 1 })),
        ("PUT", "/api/layers/KV~2.1.22~Ny".into(), json!({ "text": "stale draft", "expected_revision": 1 })),
        ("POST", "/api/layers/KV~2.1.22~Ny/evidence".into(), json!({ "target_unit": "2.1.22.1", "start": 0, "end": 3,
            "kind": "Direct", "subtype": "pratīka" })),
        ("POST", "/api/layers/KV~2.1.22~Ny/evidence".into(), json!({ "target_unit": "2.1.22.1", "start": 4, "end": 99,
            "kind": "Indirect" })),
    ];
    for (method, path, body) in steps {
        let request = match method {
            "PUT" => http.put(format!("{base}{path}")),
            _ => http.post(format!("{base}{path}")),
        };
        let response = request.bearer_auth(&token).json(&body).send().await?;
        let status = response.status();
        let body: Value = response.json().await?;
        let summary = body.get("code").or_else(|| body.get("seq")).cloned().unwrap_or(Value::Null);
        println!("{method:<4} {path:<36} {status} {summary}");
    }

    let report: Value = http
        .get(format!("{base}/api/works/KV/reports/support?units=2.1.22.1&layer=Ny"))
        .bearer_auth(&token)
        .send()
        .await?
        .json()
        .await?;
    println!("support: {}", report["summary"]);

    let anonymous = http.get(format!("{base}/api/works")).send().await?;
    println!("without a token: {}", anonymous.status());

    let _ = stop.send(());
    server.await??;
    println!("events logged: {}", state.with_store(|s| s.events().len()));
    Ok(())
}
