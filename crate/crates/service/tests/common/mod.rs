#![allow(dead_code)]

use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::extract::State;
use axum::http::{Request, StatusCode};
use axum::middleware::{self, Next};
use axum::response::Response;
use axum::Router;
use http_body_util::BodyExt;
use ontoclean_core::check_all;
use ontoclean_service::api::{router, AppState};
use ontoclean_service::session::SessionStore;
use serde_json::Value;
use tower::ServiceExt;

/// After every request, recomputes each session's violations from scratch
/// and compares them with the cached list.
async fn verify_cache(State(store): State<Arc<SessionStore>>, req: Request<Body>, next: Next) -> Response {
    let response = next.run(req).await;
    for id in store.ids() {
        store
            .read(&id, |s| {
                let fresh = check_all(&s.taxonomy, &s.labeling).unwrap();
                assert_eq!(s.violations, fresh, "stale violations cache in session {id}");
                for class in s.labeling.classes() {
                    assert!(s.taxonomy.contains(class.as_str()));
                }
            })
            .unwrap();
    }
    response
}

pub struct TestApp {
    pub app: Router,
    pub state: AppState,
}

impl TestApp {
    pub fn new(data_dir: Option<std::path::PathBuf>) -> Self {
        let state = AppState::new(SessionStore::new(data_dir), None);
        let app = router(state.clone()).layer(middleware::from_fn_with_state(state.store.clone(), verify_cache));
        Self { app, state }
    }

    pub async fn send(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let response = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = response.status();
        let bytes = response.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, value)
    }

    pub async fn create(&self, body: Value) -> String {
        let (status, v) = self.send("POST", "/sessions", Some(body)).await;
        assert_eq!(status, StatusCode::CREATED, "{v}");
        v["id"].as_str().unwrap().to_owned()
    }
}

/// Scripted chat-completions endpoint that records the prompts it receives.
pub struct MockLlm {
    pub url: String,
    pub prompts: Arc<Mutex<Vec<String>>>,
}

impl MockLlm {
    pub async fn start(status: u16, content: &str) -> Self {
        let prompts = Arc::new(Mutex::new(Vec::new()));
        let log = prompts.clone();
        let content = content.to_owned();
        let app = Router::new().route(
            "/v1/chat/completions",
            axum::routing::post(move |axum::Json(body): axum::Json<Value>| {
                let log = log.clone();
                let content = content.clone();
                async move {
                    log.lock()
                        .unwrap()
                        .push(body["messages"][0]["content"].as_str().unwrap_or_default().to_owned());
                    let reply =
                        serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]});
                    (StatusCode::from_u16(status).unwrap(), axum::Json(reply))
                }
            }),
        );
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
        Self { url, prompts }
    }
}

pub fn fixtures_dir(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}
