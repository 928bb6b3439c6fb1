//! Synchronous driver for the HTTP router, without a socket.

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;
use umlpp_cli::api::{router, ApiState};
use umlpp_core::Session;

pub struct Client {
    rt: tokio::runtime::Runtime,
    app: Router,
    pub state: ApiState,
}

impl Client {
    pub fn new(session: Session) -> Self {
        let rt = tokio::runtime::Builder::new_current_thread().build().expect("runtime");
        let state = ApiState::new(session, None);
        Self { rt, app: router(state.clone()), state }
    }

    pub fn call(&self, method: Method, uri: &str, body: Option<&Value>) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
            .expect("request");
        self.rt.block_on(async {
            let resp = self.app.clone().oneshot(req).await.expect("infallible");
            let status = resp.status();
            let bytes = resp.into_body().collect().await.expect("body").to_bytes();
            let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).expect("json body") };
            (status, v)
        })
    }

    pub fn get(&self, uri: &str) -> Value {
        let (s, v) = self.call(Method::GET, uri, None);
        assert_eq!(s, StatusCode::OK, "GET {uri}");
        v
    }
}
