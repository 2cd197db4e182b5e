//! An in-process SPARQL endpoint over a fixed graph, answering with the
//! reference evaluator. Used by tests and examples in place of a real store.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Form, Router};
use tokio::sync::oneshot;

use crate::endpoint::RESULTS_JSON;
use crate::oracle::{evaluate, parse_sparql_subset};
use crate::rdf::Graph;

#[derive(Debug, Clone, PartialEq)]
pub enum MockBehavior {
    /// Evaluate the query over the graph.
    Serve,
    /// Answer every request with this status and a short text body.
    Fail(u16),
    /// Sleep before answering normally.
    Stall(Duration),
    /// Answer 200 with this body verbatim.
    Body(String),
}

struct Shared {
    graph: Graph,
    behavior: Mutex<MockBehavior>,
    requests: AtomicUsize,
    queries: Mutex<Vec<String>>,
}

pub struct MockEndpoint {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
}

impl MockEndpoint {
    /// Binds 127.0.0.1 on an ephemeral port and serves until dropped. Must
    /// be called inside a Tokio runtime.
    pub async fn start(graph: Graph) -> std::io::Result<Self> {
        let shared = Arc::new(Shared {
            graph,
            behavior: Mutex::new(MockBehavior::Serve),
            requests: AtomicUsize::new(0),
            queries: Mutex::new(Vec::new()),
        });
        let app = Router::new()
            .route("/sparql", get(on_get).post(on_post))
            .with_state(shared.clone());
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", 0)).await?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(MockEndpoint {
            addr,
            shared,
            shutdown: Some(tx),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}/sparql", self.addr)
    }

    pub fn set_behavior(&self, behavior: MockBehavior) {
        *self.shared.behavior.lock().expect("mock lock") = behavior;
    }

    pub fn request_count(&self) -> usize {
        self.shared.requests.load(Ordering::SeqCst)
    }

    /// Query texts received so far, in arrival order.
    pub fn queries(&self) -> Vec<String> {
        self.shared.queries.lock().expect("mock lock").clone()
    }
}

impl Drop for MockEndpoint {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

async fn on_get(State(shared): State<Arc<Shared>>, Query(params): Query<HashMap<String, String>>) -> Response {
    answer(shared, params.get("query").cloned()).await
}

async fn on_post(State(shared): State<Arc<Shared>>, Form(params): Form<HashMap<String, String>>) -> Response {
    answer(shared, params.get("query").cloned()).await
}

async fn answer(shared: Arc<Shared>, query: Option<String>) -> Response {
    shared.requests.fetch_add(1, Ordering::SeqCst);
    if let Some(q) = &query {
        shared.queries.lock().expect("mock lock").push(q.clone());
    }
    let behavior = shared.behavior.lock().expect("mock lock").clone();
    match behavior {
        MockBehavior::Fail(code) => {
            let status = StatusCode::from_u16(code).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            return (status, format!("mock failure {code}")).into_response();
        }
        MockBehavior::Body(body) => return ([(header::CONTENT_TYPE, RESULTS_JSON)], body).into_response(),
        MockBehavior::Stall(d) => tokio::time::sleep(d).await,
        MockBehavior::Serve => {}
    }
    let Some(query) = query else {
        return (StatusCode::BAD_REQUEST, "missing query parameter").into_response();
    };
    match parse_sparql_subset(&query) {
        Ok(ast) => {
            let table = evaluate(&ast, &shared.graph);
            ([(header::CONTENT_TYPE, RESULTS_JSON)], table.to_results_json().to_string()).into_response()
        }
        Err(e) => (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
    }
}
