//! Independent oracles and harnesses shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};
use textual_history::corpus::{Witness, WitnessKind};
use textual_history::evidence::{self, EvidenceKind, NewAnnotation};
use textual_history::phylogeny::{self, DistanceMatrix, PhyloTree, SourceSelector, TreeMethod, TreeRequest};
use textual_history::service::{self, AppState, Role, UserStore};
use textual_history::{Command, Corpus, NodePath, Store, StoreConfig, UnitId, UnitKind};

// ---------------------------------------------------------------------------
// Edit distance

/// Textbook exponential recursion.
pub fn naive_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = naive_edit_distance(ra, rb) + usize::from(x != y);
            let del = naive_edit_distance(ra, b) + 1;
            let ins = naive_edit_distance(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

/// Every sequence over `alphabet` with length at most `max_len`.
pub fn all_sequences(alphabet: &[&str], max_len: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::<String>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            for sym in alphabet {
                let mut s = seq.clone();
                s.push((*sym).to_owned());
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

// ---------------------------------------------------------------------------
// Trees

/// Unrooted tree as an edge list; leaves are nodes `0..n` labelled `t0..`.
#[derive(Debug, Clone)]
pub struct GenTree {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize, f64)>,
    pub node_count: usize,
}

/// Random unrooted binary tree on `n >= 3` leaves by stepwise edge
/// subdivision, branch lengths uniform in `[lo, hi]`.
pub fn random_tree(rng: &mut StdRng, n: usize, lo: f64, hi: f64) -> GenTree {
    assert!(n >= 3);
    let len = |rng: &mut StdRng| rng.gen_range(lo..=hi);
    let labels: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
    let center = n;
    let mut edges = vec![(0, center, len(rng)), (1, center, len(rng)), (2, center, len(rng))];
    let mut next = n + 1;
    for leaf in 3..n {
        let k = rng.gen_range(0..edges.len());
        let (u, v, _) = edges.swap_remove(k);
        let w = next;
        next += 1;
        edges.push((u, w, len(rng)));
        edges.push((w, v, len(rng)));
        edges.push((leaf, w, len(rng)));
    }
    GenTree { labels, edges, node_count: next }
}

impl GenTree {
    fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for &(u, v, l) in &self.edges {
            adj[u].push((v, l));
            adj[v].push((u, l));
        }
        adj
    }

    /// Path-length matrix over the leaves.
    pub fn distances(&self) -> DistanceMatrix {
        let adj = self.adjacency();
        let n = self.labels.len();
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            let mut dist = vec![f64::NAN; self.node_count];
            dist[i] = 0.0;
            let mut stack = vec![i];
            while let Some(u) = stack.pop() {
                for &(v, l) in &adj[u] {
                    if dist[v].is_nan() {
                        dist[v] = dist[u] + l;
                        stack.push(v);
                    }
                }
            }
            row.copy_from_slice(&dist[..n]);
        }
        // Sums along opposite directions may round differently.
        for i in 0..n {
            for j in 0..i {
                d[i][j] = d[j][i];
            }
        }
        DistanceMatrix::new(self.labels.clone(), d).expect("additive matrix is valid")
    }

    /// Split (normalized) to edge length.
    pub fn splits(&self) -> BTreeMap<BTreeSet<String>, f64> {
        let adj = self.adjacency();
        let all: BTreeSet<String> = self.labels.iter().cloned().collect();
        let mut out = BTreeMap::new();
        for &(u, v, l) in &self.edges {
            // Leaves reachable from v without crossing (u, v).
            let mut seen = vec![false; self.node_count];
            seen[u] = true;
            seen[v] = true;
            let mut stack = vec![v];
            let mut side = BTreeSet::new();
            while let Some(x) = stack.pop() {
                if x < self.labels.len() {
                    side.insert(self.labels[x].clone());
                }
                for &(y, _) in &adj[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            out.insert(normalize_split(side, &all), l);
        }
        out
    }
}

/// The side of a bipartition that excludes the smallest label.
pub fn normalize_split(side: BTreeSet<String>, all: &BTreeSet<String>) -> BTreeSet<String> {
    let first = all.iter().next().expect("non-empty").clone();
    if side.contains(&first) {
        all.difference(&side).cloned().collect()
    } else {
        side
    }
}

/// Split to branch length for a tree produced by the library. Root
/// children of a bifurcating root share one split, so their lengths add.
pub fn tree_splits(tree: &PhyloTree) -> BTreeMap<BTreeSet<String>, f64> {
    fn below(tree: &PhyloTree, id: usize, out: &mut Vec<(usize, BTreeSet<String>)>) -> BTreeSet<String> {
        let node = tree.node(id);
        let mut leaves = BTreeSet::new();
        if node.children.is_empty() {
            leaves.insert(node.label.clone().unwrap_or_default());
        }
        for &c in &node.children {
            leaves.extend(below(tree, c, out));
        }
        out.push((id, leaves.clone()));
        leaves
    }
    let mut sets = Vec::new();
    let all = below(tree, tree.root(), &mut sets);
    let mut out = BTreeMap::new();
    for (id, leaves) in sets {
        if id == tree.root() {
            continue;
        }
        let key = normalize_split(leaves, &all);
        *out.entry(key).or_insert(0.0) += tree.node(id).branch_length;
    }
    out
}

/// Random symmetric matrix with zero diagonal and entries in `(0, 10]`.
pub fn random_matrix(rng: &mut StdRng, n: usize) -> DistanceMatrix {
    let labels: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = rng.gen_range(0.01..=10.0);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    DistanceMatrix::new(labels, d).expect("random matrix is valid")
}

/// Same matrix with taxa reordered by `perm`.
pub fn permute(m: &DistanceMatrix, perm: &[usize]) -> DistanceMatrix {
    let taxa = perm.iter().map(|&i| m.taxa()[i].clone()).collect();
    let d = perm.iter().map(|&i| perm.iter().map(|&j| m.get(i, j)).collect()).collect();
    DistanceMatrix::new(taxa, d).expect("permutation keeps validity")
}

// ---------------------------------------------------------------------------
// Random operation logs

const WORDS: &[&str] = &["वृद्धिः", "आत्", "ऐच्", "इति", "च", "तत्", "अपि", "परः", "संज्ञा", "अ"];
const LABELS: &[&str] = &["Ny", "Pm", "Tp", "Bm", "Sv", "Ud", "Ka", "Ja", "Vy", "Ta"];
const WITNESSES: &[&str] = &["ms-A", "ms-B", "ms-C", "ed-1"];

fn random_text(rng: &mut StdRng, max: usize) -> String {
    let n = rng.gen_range(1..=max);
    (0..n).map(|_| *WORDS.choose(rng).expect("words")).collect::<Vec<_>>().join(" ")
}

/// A plausible next command for `corpus`; some are invalid on purpose.
pub fn random_command(rng: &mut StdRng, corpus: &Corpus) -> Command {
    let works: Vec<_> = corpus.works().collect();
    if works.is_empty() || rng.gen_ratio(1, 60) {
        let id = ["KV", "MB", "VP"].choose(rng).expect("ids");
        return Command::CreateWork { id: (*id).into(), title: format!("Work {id}"), script: "Deva".into() };
    }
    let work = *works.choose(rng).expect("works");
    let paths: Vec<NodePath> = corpus.all_paths().into_iter().filter(|p| p.work == work.id && p.unit.is_some()).collect();
    let layer_paths: Vec<&NodePath> = paths.iter().filter(|p| p.is_layer()).collect();

    match rng.gen_range(0..100) {
        0..=14 => {
            let a = rng.gen_range(1..=3);
            let b = rng.gen_range(1..=3);
            let c = rng.gen_range(1..=4);
            let (unit, kind) = match rng.gen_range(0..4) {
                0 => (format!("{a}.{b}.{c}"), UnitKind::Sutra),
                1 => (format!("{a}.{b}.{c}.1"), UnitKind::IntroductionMeaning),
                2 => (format!("{a}.{b}.{c}.2"), UnitKind::Examples),
                _ => (format!("{a}.{b}.{c}.3"), UnitKind::OtherOccurrences),
            };
            Command::AddUnit { work: work.id.clone(), unit, kind, base_text: random_text(rng, 8) }
        }
        15..=34 if !paths.is_empty() => {
            let parent = paths.choose(rng).expect("paths").clone();
            let label = *LABELS.choose(rng).expect("labels");
            Command::AddLayer { parent, label: label.into(), text: random_text(rng, 4) }
        }
        35..=49 if !layer_paths.is_empty() => {
            let path = (*layer_paths.choose(rng).expect("layers")).clone();
            let current = corpus.layer(&path).map(|l| l.revision).unwrap_or(1);
            let expected_revision = if rng.gen_ratio(4, 5) { current } else { current.saturating_sub(1).max(1) };
            Command::EditLayer { path, text: random_text(rng, 6), expected_revision }
        }
        50..=54 => {
            let id = *WITNESSES.choose(rng).expect("witnesses");
            let kind = if id.starts_with("ed") { WitnessKind::PrintedEdition } else { WitnessKind::Manuscript };
            Command::AddWitness(Witness { id: id.into(), siglum: id.to_uppercase(), kind, date: Some("1600".into()) })
        }
        55..=69 if !work.units.is_empty() => {
            let unit = work.units.choose(rng).expect("units");
            let witness = *WITNESSES.choose(rng).expect("witnesses");
            Command::RecordReading {
                work: work.id.clone(),
                unit: unit.id.clone(),
                witness: witness.into(),
                text: random_text(rng, 8),
            }
        }
        70..=94 if !layer_paths.is_empty() && !work.units.is_empty() => {
            let source = (*layer_paths.choose(rng).expect("layers")).clone();
            let unit = work.units.choose(rng).expect("units");
            let n = unit.token_count;
            let start = rng.gen_range(0..=n);
            let end = rng.gen_range(start..=n + 1);
            let kind = *[EvidenceKind::Direct, EvidenceKind::Indirect, EvidenceKind::Both, EvidenceKind::Default]
                .choose(rng)
                .expect("kinds");
            let mut a = NewAnnotation::new(source, unit.id.clone(), start, end, kind);
            let subtypes = corpus.taxonomy().subtypes(kind);
            if !subtypes.is_empty() && rng.gen_bool(0.5) {
                a = a.subtype(subtypes.choose(rng).expect("subtypes").clone());
            }
            if rng.gen_bool(0.5) {
                a = a.quoted(random_text(rng, 3));
            }
            Command::Annotate(a)
        }
        95..=99 if !layer_paths.is_empty() => {
            let source = (*layer_paths.choose(rng).expect("layers")).clone();
            let ids: Vec<String> = corpus.layer(&source).map(|l| l.annotations.iter().map(|a| a.id.clone()).collect()).unwrap_or_default();
            let id = ids.choose(rng).cloned().unwrap_or_else(|| "a0".into());
            Command::DeleteAnnotation { source, id }
        }
        _ => Command::CreateWork { id: work.id.clone(), title: "duplicate".into(), script: "Deva".into() },
    }
}

/// Executes random commands until `events` of them have been accepted.
/// Returns the number of rejected attempts.
pub fn drive_random(store: &mut Store, rng: &mut StdRng, events: usize) -> usize {
    let mut rejected = 0;
    while store.events().len() < events {
        let cmd = random_command(rng, &store.snapshot());
        if store.execute("fuzz", cmd).is_err() {
            rejected += 1;
        }
    }
    rejected
}

/// Every read the library offers, as one comparable document.
pub fn observe(corpus: &Corpus) -> Value {
    let mut out = serde_json::Map::new();
    for work in corpus.works() {
        let labels = work.layer_labels();
        for unit in &work.units {
            let one = std::slice::from_ref(&unit.id);
            for label in &labels {
                let key = format!("support {} {} {label}", work.id, unit.id);
                let v = match evidence::support_report(corpus, &work.id, one, label) {
                    Ok(s) => json!(s),
                    Err(e) => json!(e.code()),
                };
                out.insert(key, v);
            }
            let key = format!("transmission {} {}", work.id, unit.id);
            let v = match evidence::transmission_report(corpus, &work.id, &unit.id) {
                Ok(r) => json!(r),
                Err(e) => json!(e.code()),
            };
            out.insert(key, v);
        }
        for sources in [SourceSelector::ManuscriptsOnly, SourceSelector::ManuscriptsAndCommentaries] {
            for method in [TreeMethod::Upgma, TreeMethod::NeighborJoining] {
                let request = TreeRequest { sources, method, ..TreeRequest::default() };
                let key = format!("tree {} {} {}", work.id, sources.as_str(), method.as_str());
                let v = match phylogeny::build_tree(corpus, &work.id, &request) {
                    Ok(r) => json!({ "newick": r.newick, "matrix": r.matrix.to_csv() }),
                    Err(e) => json!(e.code()),
                };
                out.insert(key, v);
            }
        }
    }
    let paths: Vec<String> = corpus.all_paths().iter().map(|p| p.to_string()).collect();
    out.insert("paths".into(), json!(paths));
    Value::Object(out)
}

// ---------------------------------------------------------------------------
// HTTP

pub const SECRET: &str = "test-secret";
pub const PASSWORD: &str = "pa55word";

pub struct TestServer {
    pub base: String,
    pub state: Arc<AppState>,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    handle: Option<tokio::task::JoinHandle<std::io::Result<()>>>,
}

impl TestServer {
    pub async fn start(store: Store) -> Self {
        let mut users = UserStore::default();
        users.add("annotator", PASSWORD, Role::Annotator).unwrap();
        users.add("admin", PASSWORD, Role::Admin).unwrap();
        let state = Arc::new(AppState::with_users(store, users, SECRET, service::DEFAULT_TOKEN_TTL));
        Self::with_state(state).await
    }

    pub async fn with_state(state: Arc<AppState>) -> Self {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let handle = tokio::spawn(service::serve(listener, Arc::clone(&state), async {
            let _ = rx.await;
        }));
        TestServer { base, state, stop: Some(tx), handle: Some(handle) }
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(h) = self.handle.take() {
            h.await.unwrap().unwrap();
        }
    }

    pub async fn login(&self, username: &str) -> Api {
        let http = reqwest::Client::new();
        let res = http
            .post(format!("{}/api/login", self.base))
            .json(&json!({ "username": username, "password": PASSWORD }))
            .send()
            .await
            .unwrap();
        assert_eq!(res.status(), 200);
        let body: Value = res.json().await.unwrap();
        Api { http, base: self.base.clone(), token: Some(body["token"].as_str().unwrap().to_owned()) }
    }

    pub fn anonymous(&self) -> Api {
        Api { http: reqwest::Client::new(), base: self.base.clone(), token: None }
    }
}

pub struct Api {
    pub http: reqwest::Client,
    pub base: String,
    pub token: Option<String>,
}

impl Api {
    pub async fn call(&self, method: reqwest::Method, path: &str, body: Option<Value>) -> (u16, Value) {
        let mut req = self.http.request(method, format!("{}{}", self.base, path));
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        if let Some(b) = body {
            req = req.json(&b);
        }
        let res = req.send().await.unwrap();
        let status = res.status().as_u16();
        let text = res.text().await.unwrap();
        let value = serde_json::from_str(&text).unwrap_or(Value::String(text));
        (status, value)
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        self.call(reqwest::Method::GET, path, None).await
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        self.call(reqwest::Method::POST, path, Some(body)).await
    }

    pub async fn put(&self, path: &str, body: Value) -> (u16, Value) {
        self.call(reqwest::Method::PUT, path, Some(body)).await
    }

    pub async fn delete(&self, path: &str) -> (u16, Value) {
        self.call(reqwest::Method::DELETE, path, None).await
    }

    /// Issues the request that corresponds to `cmd`.
    pub async fn send(&self, cmd: &Command) -> (u16, Value) {
        match cmd {
            Command::CreateWork { id, title, script } => {
                self.post("/api/works", json!({ "id": id, "title": title, "script": script })).await
            }
            Command::AddUnit { work, unit, kind, base_text } => {
                self.post(&format!("/api/works/{work}/units"), json!({ "id": unit, "kind": kind, "base_text": base_text }))
                    .await
            }
            Command::AddLayer { parent, label, text } => {
                self.post(&format!("/api/nodes/{}/layers", parent.to_url_segment()), json!({ "label": label, "text": text }))
                    .await
            }
            Command::EditLayer { path, text, expected_revision } => {
                self.put(
                    &format!("/api/layers/{}", path.to_url_segment()),
                    json!({ "text": text, "expected_revision": expected_revision }),
                )
                .await
            }
            Command::AddWitness(w) => self.post("/api/witnesses", json!(w)).await,
            Command::RecordReading { work, unit, witness, text } => {
                self.post(&format!("/api/units/{work}~{unit}/readings"), json!({ "witness_id": witness, "text": text })).await
            }
            Command::Annotate(a) => {
                let mut body = json!(a);
                body.as_object_mut().unwrap().remove("source");
                self.post(&format!("/api/layers/{}/evidence", a.source.to_url_segment()), body).await
            }
            Command::DeleteAnnotation { source, id } => {
                self.delete(&format!("/api/layers/{}/evidence/{id}", source.to_url_segment())).await
            }
            Command::SetTaxonomy(_) | Command::Import(_) => panic!("{} has no HTTP route", cmd.action()),
        }
    }
}

pub fn unit_ids(list: &[&str]) -> Vec<UnitId> {
    list.iter().map(|s| s.parse().unwrap()).collect()
}

pub fn store_with(commands: &[Command]) -> Store {
    let mut store = Store::in_memory(StoreConfig::default());
    for c in commands {
        store.execute("fixture", c.clone()).unwrap();
    }
    store
}
