mod support;

use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};
use support::*;
use textual_history::service::{AppState, Role, UserStore};
use textual_history::{fixtures, Store, StoreConfig};

async fn kv_server() -> (TestServer, Api) {
    let server = TestServer::start(store_with(&fixtures::kv_1_1_1())).await;
    let api = server.login("annotator").await;
    (server, api)
}

fn events(server: &TestServer) -> Vec<(String, String)> {
    server.state.with_store(|s| s.events().iter().map(|e| (e.actor.clone(), e.command.action().to_owned())).collect())
}

#[tokio::test]
async fn login_failures_are_uniform() {
    let server = TestServer::start(Store::in_memory(StoreConfig::default())).await;
    let anon = server.anonymous();
    let (s1, b1) = anon.post("/api/login", json!({ "username": "annotator", "password": "nope" })).await;
    let (s2, b2) = anon.post("/api/login", json!({ "username": "nobody", "password": PASSWORD })).await;
    assert_eq!((s1, s2), (401, 401));
    assert_eq!(b1, b2);
    assert_eq!(b1["code"], "InvalidCredentials");

    let (status, body) = anon.post("/api/login", json!({ "username": "admin", "password": PASSWORD })).await;
    assert_eq!(status, 200);
    assert_eq!(body["role"], "Admin");
    server.stop().await;
}

#[tokio::test]
async fn every_route_but_login_needs_a_valid_token() {
    let (server, api) = kv_server().await;
    let anon = server.anonymous();
    for path in ["/api/works", "/api/works/KV", "/api/taxonomy", "/api/layers/KV~1.1.1~Ny/evidence"] {
        let (status, body) = anon.get(path).await;
        assert_eq!((status, body["code"].as_str()), (401, Some("MissingToken")), "{path}");
    }
    let (status, _) = anon.post("/api/works", json!({ "id": "X", "title": "x" })).await;
    assert_eq!(status, 401);

    let forged = Api { token: Some(format!("{}x", api.token.as_deref().unwrap())), ..server.anonymous() };
    let (status, body) = forged.get("/api/works").await;
    assert_eq!((status, body["code"].as_str()), (401, Some("InvalidToken")));
    assert!(events(&server).iter().all(|(actor, _)| actor == "fixture"));
    server.stop().await;
}

#[tokio::test]
async fn expired_tokens_are_rejected() {
    let mut users = UserStore::default();
    users.add("annotator", PASSWORD, Role::Annotator).unwrap();
    let state = Arc::new(AppState::with_users(Store::in_memory(StoreConfig::default()), users, SECRET, Duration::ZERO));
    let server = TestServer::with_state(state).await;
    let api = server.login("annotator").await;
    let (status, body) = api.get("/api/works").await;
    assert_eq!((status, body["code"].as_str()), (401, Some("AuthExpired")));
    server.stop().await;
}

#[tokio::test]
async fn commentaries_and_sub_commentaries() {
    let server = TestServer::start(Store::in_memory(StoreConfig::default())).await;
    let api = server.login("annotator").await;
    api.post("/api/works", json!({ "id": "KV", "title": "Kāśikāvṛtti", "script": "Deva" })).await;
    let (status, _) = api.post("/api/works/KV/units", json!({ "id": "1.1.1", "kind": "Sutra", "base_text": "वृद्धिः आत् ऐच्" })).await;
    assert_eq!(status, 201);

    let (status, body) = api.post("/api/nodes/KV~1.1.1/layers", json!({ "label": "Ny" })).await;
    assert_eq!((status, body["depth"].as_u64()), (201, Some(1)));
    assert_eq!(body["revision"], 1);
    let (status, body) = api.post("/api/nodes/KV~1.1.1~Ny/layers", json!({ "label": "Tp" })).await;
    assert_eq!((status, body["depth"].as_u64()), (201, Some(2)));
    assert_eq!(body["url_path"], "KV~1.1.1~Ny~Tp");

    // Replaying the same request never duplicates the node.
    let (status, body) = api.post("/api/nodes/KV~1.1.1~Ny/layers", json!({ "label": "Tp" })).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("DuplicateLabel")));

    let (status, body) = api.get("/api/nodes/KV~1.1.1~Ny").await;
    assert_eq!((status, body["type"].as_str()), (200, Some("layer")));
    assert_eq!(body["node"]["layers"][0]["label"], "Tp");

    let (status, body) = api.post("/api/nodes/KV~9.9.9/layers", json!({ "label": "Ny" })).await;
    assert_eq!((status, body["code"].as_str()), (404, Some("UnknownPath")));
    let (status, body) = api.post("/api/nodes/KV~1.1.1/layers", json!({ "label": "has space" })).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("MalformedLabel")));
    server.stop().await;
}

#[tokio::test]
async fn sibling_limit_is_reported_and_enforced() {
    let server = TestServer::start(Store::in_memory(StoreConfig { sibling_limit: 2 })).await;
    let api = server.login("annotator").await;
    let (_, config) = api.get("/api/config").await;
    assert_eq!(config["sibling_limit"], 2);
    api.post("/api/works", json!({ "id": "KV", "title": "k" })).await;
    api.post("/api/works/KV/units", json!({ "id": "1.1.1", "kind": "Sutra", "base_text": "a" })).await;
    for label in ["A", "B"] {
        assert_eq!(api.post("/api/nodes/KV~1.1.1/layers", json!({ "label": label })).await.0, 201);
    }
    let (status, body) = api.post("/api/nodes/KV~1.1.1/layers", json!({ "label": "C" })).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("SiblingLimitExceeded")));
    server.stop().await;
}

#[tokio::test]
async fn stale_edits_conflict_with_server_text() {
    let (server, api) = kv_server().await;
    let (status, body) = api.put("/api/layers/KV~1.1.1~Ny", json!({ "text": "mine", "expected_revision": 1 })).await;
    assert_eq!((status, body["revision"].as_u64()), (200, Some(2)));
    let (status, body) = api.put("/api/layers/KV~1.1.1~Ny", json!({ "text": "theirs", "expected_revision": 1 })).await;
    assert_eq!(status, 409);
    assert_eq!(body["code"], "RevisionConflict");
    assert_eq!(body["detail"]["current_revision"], 2);
    assert_eq!(body["detail"]["text"], "mine");

    let (_, body) = api.get("/api/layers/KV~1.1.1~Ny").await;
    assert_eq!((body["layer"]["text"].as_str(), body["layer"]["revision"].as_u64()), (Some("mine"), Some(2)));

    let (status, body) = api.put("/api/layers/KV~1.1.1", json!({ "text": "x", "expected_revision": 1 })).await;
    assert_eq!((status, body["code"].as_str()), (404, Some("UnknownPath")));
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_edits_have_one_winner() {
    let (server, api) = kv_server().await;
    let api = Arc::new(api);
    let tasks: Vec<_> = (0..8)
        .map(|i| {
            let api = Arc::clone(&api);
            tokio::spawn(async move {
                api.put("/api/layers/KV~1.1.1~Pm", json!({ "text": format!("draft {i}"), "expected_revision": 1 })).await
            })
        })
        .collect();
    let mut statuses = Vec::new();
    for t in tasks {
        statuses.push(t.await.unwrap().0);
    }
    assert_eq!(statuses.iter().filter(|&&s| s == 200).count(), 1, "{statuses:?}");
    assert_eq!(statuses.iter().filter(|&&s| s == 409).count(), 7, "{statuses:?}");
    server.stop().await;
}

#[tokio::test]
async fn evidence_round_trip() {
    let (server, api) = kv_server().await;
    let (status, list) = api.get("/api/layers/KV~1.1.1~Pm/evidence").await;
    assert_eq!(status, 200);
    assert_eq!(list.as_array().unwrap().len(), 3);

    let url = "/api/works/KV/reports/support?units=1.1.1.1,1.1.1.2&layer=Pm";
    assert_eq!(api.get(url).await.1["supported_count"], 12);
    let (status, body) = api
        .post("/api/layers/KV~1.1.1~Pm/evidence", json!({ "target_unit": "1.1.1.1", "start": 18, "end": 19, "kind": "Direct" }))
        .await;
    assert_eq!(status, 201);
    let id = body["annotation"]["id"].as_str().unwrap().to_owned();
    assert_eq!(api.get(url).await.1["supported_count"], 13);

    let (status, _) = api.delete(&format!("/api/layers/KV~1.1.1~Pm/evidence/{id}")).await;
    assert_eq!(status, 200);
    assert_eq!(api.get(url).await.1["supported_count"], 12);
    let (status, body) = api.delete(&format!("/api/layers/KV~1.1.1~Pm/evidence/{id}")).await;
    assert_eq!((status, body["code"].as_str()), (404, Some("UnknownAnnotation")));

    let (status, body) = api
        .post("/api/layers/KV~1.1.1~Pm/evidence", json!({ "target_unit": "1.1.1.2", "start": 0, "end": 7, "kind": "Direct" }))
        .await;
    assert_eq!((status, body["code"].as_str()), (422, Some("SpanOutOfRange")));
    let (status, body) = api
        .post("/api/layers/KV~1.1.1~Pm/evidence", json!({ "target_unit": "1.1.1.2", "start": 0, "end": 1, "kind": "Direct", "subtype": "gloss" }))
        .await;
    assert_eq!((status, body["code"].as_str()), (422, Some("SubtypeMismatch")));
    let (status, body) = api.post("/api/layers/KV~1.1.1~Pm/evidence", json!({ "target_unit": "1.1.1.2" })).await;
    assert_eq!((status, body["code"].as_str()), (400, Some("BadRequest")));
    server.stop().await;
}

#[tokio::test]
async fn witnesses_and_readings() {
    let (server, api) = kv_server().await;
    let (status, _) = api.post("/api/witnesses", json!({ "id": "ms-B", "siglum": "B", "kind": "Manuscript", "date": "1400/1500" })).await;
    assert_eq!(status, 201);
    let (status, body) = api.post("/api/witnesses", json!({ "id": "Ny2", "siglum": "N", "kind": "CommentaryDerived" })).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("ReservedWitnessKind")));
    let (status, body) = api.post("/api/witnesses", json!({ "id": "ms-C", "siglum": "C", "kind": "Manuscript", "date": "15th c." })).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("MalformedDate")));

    let (status, _) = api.post("/api/units/1.1.1/readings", json!({ "witness_id": "ms-B", "text": "वृद्धिः आत्" })).await;
    assert_eq!(status, 201);
    let (status, _) = api.post("/api/units/KV~1.1.1.1/readings", json!({ "witness_id": "ms-B", "text": "वृद्धिशब्दः" })).await;
    assert_eq!(status, 201);
    let (status, body) = api.post("/api/units/1.1.1/readings", json!({ "witness_id": "ms-B", "text": "again" })).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("DuplicateReading")));
    let (status, body) = api.post("/api/units/1.1.1/readings", json!({ "witness_id": "ms-Z", "text": "x" })).await;
    assert_eq!((status, body["code"].as_str()), (404, Some("UnknownWitness")));

    // A bare unit id that exists in two works is ambiguous.
    api.post("/api/works", json!({ "id": "MB", "title": "other" })).await;
    api.post("/api/works/MB/units", json!({ "id": "1.1.1", "kind": "Sutra", "base_text": "x" })).await;
    let (status, body) = api.post("/api/units/1.1.1/readings", json!({ "witness_id": "ms-A", "text": "x" })).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("AmbiguousUnit")));
    let (status, _) = api.post("/api/units/MB~1.1.1/readings", json!({ "witness_id": "ms-A", "text": "x" })).await;
    assert_eq!(status, 201);

    let (_, list) = api.get("/api/witnesses").await;
    assert_eq!(list.as_array().unwrap().len(), 2);
    server.stop().await;
}

#[tokio::test]
async fn reports_and_trees() {
    let server = TestServer::start(store_with(&fixtures::kv_stemma())).await;
    let api = server.login("annotator").await;
    let (status, body) = api.get("/api/works/KV/reports/support?units=1.1.1.1,1.1.1.2&layer=Ny").await;
    assert_eq!(status, 200);
    assert_eq!(body["summary"], "24/25 (96.0%)");
    assert!((body["percentage"].as_f64().unwrap() - 96.0).abs() < 1e-12);

    let (status, body) = api.get("/api/works/KV/reports/transmission?unit=2.1.22.3").await;
    assert_eq!(status, 200);
    assert_eq!(body["archetype_hints"], json!(["post-Ny", "post-Tp"]));

    let (status, body) = api.get("/api/works/KV/reports/support?units=1.1.1.1&layer=Zz").await;
    assert_eq!((status, body["code"].as_str()), (404, Some("UnknownLayerLabel")));
    let (status, _) = api.get("/api/works/KV/reports/support?layer=Ny").await;
    assert_eq!(status, 400);
    let (status, body) = api.get("/api/works/KV/reports/transmission?unit=1.x").await;
    assert_eq!((status, body["code"].as_str()), (400, Some("BadRequest")));

    let request = json!({ "sources": "both", "method": "nj", "units": ["1.1.1", "1.1.1.1", "1.1.1.2"] });
    let (status, body) = api.post("/api/works/KV/trees", request).await;
    assert_eq!(status, 200);
    let newick = body["newick"].as_str().unwrap();
    for taxon in ["ms-A", "ms-B", "ms-C", "ed-1", "Ny", "Pm"] {
        assert!(newick.contains(taxon), "{newick}");
    }
    assert_eq!(body["matrix"]["taxa"].as_array().unwrap().len(), 6);

    let (status, body) = api.post("/api/works/KV/trees", json!({ "sources": "commentaries" })).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("InsufficientOverlap")));
    assert!(body["detail"]["a"].is_string());
    let (status, _) = api.post("/api/works/KV/trees", json!({ "method": "parsimony" })).await;
    assert_eq!(status, 400);
    let (status, body) = api.post("/api/works/NOPE/trees", json!({})).await;
    assert_eq!((status, body["code"].as_str()), (404, Some("UnknownWork")));

    let (_, taxonomy) = api.get("/api/taxonomy").await;
    assert_eq!(taxonomy["Direct"], json!(["full-quotation", "pratīka"]));
    server.stop().await;
}

#[tokio::test]
async fn each_successful_mutation_is_one_event_by_the_caller() {
    let server = TestServer::start(Store::in_memory(StoreConfig::default())).await;
    let annotator = server.login("annotator").await;
    let admin = server.login("admin").await;
    let mut expected = Vec::new();
    for (i, cmd) in fixtures::kv_1_1_1().iter().enumerate() {
        let (api, who) = if i % 2 == 0 { (&annotator, "annotator") } else { (&admin, "admin") };
        let before = events(&server).len();
        let (status, body) = api.send(cmd).await;
        assert_eq!(status, 201, "{body}");
        assert_eq!(body["seq"].as_u64(), Some(before as u64 + 1));
        expected.push((who.to_owned(), cmd.action().to_owned()));
        // A failing repeat appends nothing.
        let (status, _) = api.send(cmd).await;
        if !matches!(cmd, textual_history::Command::Annotate(_)) {
            assert!(status >= 400);
        } else {
            expected.push((who.to_owned(), cmd.action().to_owned()));
        }
    }
    assert_eq!(events(&server), expected);
    server.stop().await;
}

#[tokio::test]
async fn works_listing_and_documents() {
    let (server, api) = kv_server().await;
    let (_, list) = api.get("/api/works").await;
    assert_eq!(list, json!([{ "id": "KV", "title": "Kāśikāvṛtti", "script": "Deva", "unit_count": 4 }]));
    let (_, work) = api.get("/api/works/KV").await;
    assert_eq!(work["units"][1]["token_count"], 19);
    let (status, body) = api.get("/api/works/XX").await;
    assert_eq!((status, body["code"].as_str()), (404, Some("UnknownWork")));
    let (status, body) = api.get("/api/nowhere").await;
    assert_eq!((status, body["code"].as_str()), (404, Some("UnknownRoute")));
    let (status, body) = api.post("/api/works/KV/units", json!({ "id": "1.1.1.2", "kind": "Examples", "base_text": "x" })).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("DuplicateId")));
    let (status, body) = api.post("/api/works/KV/units", json!({ "id": "1.1.5.2", "kind": "Sutra", "base_text": "x" })).await;
    assert_eq!((status, body["code"].as_str()), (422, Some("KindMismatch")));
    server.stop().await;
}

#[tokio::test]
async fn users_file_is_reread_on_login() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::init(dir.path(), StoreConfig::default()).unwrap();
    let state = Arc::new(AppState::new(store, SECRET, Duration::from_secs(60)).unwrap());
    let server = TestServer::with_state(state).await;
    let anon = server.anonymous();
    let (status, _) = anon.post("/api/login", json!({ "username": "late", "password": "pw" })).await;
    assert_eq!(status, 401);

    let path = dir.path().join(textual_history::store::USERS_FILE);
    let mut users = UserStore::load(&path).unwrap();
    users.add("late", "pw", Role::Annotator).unwrap();
    users.save(&path).unwrap();
    let (status, body) = anon.post("/api/login", json!({ "username": "late", "password": "pw" })).await;
    assert_eq!(status, 200);
    let api = Api { token: body["token"].as_str().map(String::from), ..server.anonymous() };
    let (status, body): (u16, Value) = api.post("/api/works", json!({ "id": "KV", "title": "k" })).await;
    assert_eq!(status, 201, "{body}");
    assert_eq!(events(&server).last().unwrap().0, "late");
    server.stop().await;
}
