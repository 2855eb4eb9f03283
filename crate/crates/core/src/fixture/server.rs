use std::collections::HashMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use bytes::Bytes;
use http_body_util::Full;
use hyper::body::Incoming;
use hyper::server::conn::http1;
use hyper::service::service_fn;
use hyper::{header, Request, Response, StatusCode};
use hyper_util::rt::TokioIo;
use tokio::net::TcpListener;
use tokio::task::{JoinHandle, JoinSet};
use url::Url;

use super::{BodyKind, Corpus, FixtureError, PolicyBehavior};
use crate::driver::{normalize_domain, PanelPayload, PayloadEntry};
use crate::net::HostResolver;

/// Lists the host names served by the fixture, as a JSON array.
pub const HOSTS_PATH: &str = "/_fixture/hosts";

#[derive(Debug, Clone)]
enum Route {
    Page(String),
    Redirect(u16, String),
    Status(u16),
    Hang(Duration, String),
}

#[derive(Debug, Default)]
struct State {
    panels: HashMap<String, PanelPayload>,
    sites: HashMap<String, HashMap<String, Route>>,
    store_requests: AtomicU64,
    policy_requests: Mutex<HashMap<String, u64>>,
}

impl State {
    fn from_corpus(corpus: &Corpus) -> Self {
        let mut state = State::default();
        for app in &corpus.apps {
            let id = app.metadata.gizmo_id.to_string();
            state.panels.insert(
                id.clone(),
                PanelPayload {
                    gizmo_id: id,
                    entries: app
                        .entries
                        .iter()
                        .map(|e| PayloadEntry {
                            domain: e.domain.clone(),
                            privacy_policy: e.policy_url.clone(),
                        })
                        .collect(),
                },
            );
            for entry in &app.entries {
                let route = match &entry.behavior {
                    PolicyBehavior::Placeholder | PolicyBehavior::DnsFailure => continue,
                    PolicyBehavior::Ok {
                        body: BodyKind::DedicatedPolicy,
                    } => Route::Page(entry.policy_text.clone().unwrap_or_default()),
                    PolicyBehavior::Ok {
                        body: BodyKind::HomepageRedirect,
                    } => Route::Redirect(301, "/".into()),
                    PolicyBehavior::NotFound => Route::Status(404),
                    PolicyBehavior::ServerError => Route::Status(500),
                    PolicyBehavior::Hang { delay_ms } => Route::Hang(
                        Duration::from_millis(*delay_ms),
                        entry.policy_text.clone().unwrap_or_default(),
                    ),
                    PolicyBehavior::Redirect { status, location } => {
                        Route::Redirect(*status, location.clone())
                    }
                    PolicyBehavior::Status { status } => Route::Status(*status),
                };
                let Ok(url) = Url::parse(&entry.policy_url) else {
                    continue;
                };
                let Some(host) = url.host_str().and_then(|h| normalize_domain(h).ok()) else {
                    continue;
                };
                state
                    .sites
                    .entry(host)
                    .or_default()
                    .entry(url.path().to_owned())
                    .or_insert(route);
            }
        }
        state
    }
}

/// A running fixture. Dropping the handle stops the server.
pub struct FixtureHandle {
    addr: SocketAddr,
    state: Arc<State>,
    task: JoinHandle<()>,
}

impl FixtureHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL of the store endpoints.
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Host names served by the fixture, sorted.
    pub fn hosts(&self) -> Vec<String> {
        let mut hosts: Vec<String> = self.state.sites.keys().cloned().collect();
        hosts.sort();
        hosts
    }

    /// Strict resolver sending every fixture host to the listener; any other
    /// name fails to resolve.
    pub fn resolver(&self) -> HostResolver {
        HostResolver::strict(self.hosts().into_iter().map(|h| (h, self.addr)).collect())
    }

    pub fn store_requests(&self) -> u64 {
        self.state.store_requests.load(Ordering::SeqCst)
    }

    /// Requests received for `host` + `path` of a policy URL.
    pub fn policy_requests(&self, url: &str) -> u64 {
        let Ok(url) = Url::parse(url) else { return 0 };
        let key = format!("{}{}", url.host_str().unwrap_or_default(), url.path());
        self.state
            .policy_requests
            .lock()
            .expect("counter lock")
            .get(&key)
            .copied()
            .unwrap_or(0)
    }

    pub fn total_policy_requests(&self) -> u64 {
        self.state
            .policy_requests
            .lock()
            .expect("counter lock")
            .values()
            .sum()
    }

    /// Stops accepting and drops every open connection.
    pub fn kill(&self) {
        self.task.abort();
    }
}

impl Drop for FixtureHandle {
    fn drop(&mut self) {
        self.task.abort();
    }
}

/// Binds an ephemeral loopback port and serves `corpus`.
pub async fn serve(corpus: &Corpus) -> Result<FixtureHandle, FixtureError> {
    let listener = TcpListener::bind(("127.0.0.1", 0))
        .await
        .map_err(FixtureError::BindFailure)?;
    let addr = listener.local_addr().map_err(FixtureError::BindFailure)?;
    let state = Arc::new(State::from_corpus(corpus));
    let task = tokio::spawn(accept_loop(listener, state.clone()));
    Ok(FixtureHandle { addr, state, task })
}

async fn accept_loop(listener: TcpListener, state: Arc<State>) {
    let mut conns = JoinSet::new();
    loop {
        tokio::select! {
            accepted = listener.accept() => {
                let Ok((stream, _)) = accepted else { continue };
                let state = state.clone();
                conns.spawn(async move {
                    let service = service_fn(move |req| handle(state.clone(), req));
                    let _ = http1::Builder::new()
                        .serve_connection(TokioIo::new(stream), service)
                        .await;
                });
            }
            Some(_) = conns.join_next(), if !conns.is_empty() => {}
        }
    }
}

fn request_host(req: &Request<Incoming>) -> String {
    let raw = req
        .headers()
        .get(header::HOST)
        .and_then(|v| v.to_str().ok())
        .or_else(|| req.uri().host())
        .unwrap_or_default();
    let host = match raw.rsplit_once(':') {
        Some((h, port)) if port.chars().all(|c| c.is_ascii_digit()) => h,
        _ => raw,
    };
    host.trim_end_matches('.').to_ascii_lowercase()
}

fn html(status: StatusCode, body: String) -> Response<Full<Bytes>> {
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, "text/html; charset=utf-8")
        .body(Full::new(Bytes::from(body)))
        .expect("static response")
}

fn policy_page(text: &str) -> String {
    format!(
        "<!DOCTYPE html><html><head><title>Privacy Policy</title>\
         <style>body{{font-family:sans-serif}}</style></head>\
         <body><main><p>{}</p></main><script>window.analytics=[];</script></body></html>",
        html_escape::encode_text(text)
    )
}

fn homepage(host: &str) -> String {
    format!(
        "<!DOCTYPE html><html><head><title>{0}</title></head>\
         <body><h1>Welcome to {0}</h1><p>Build faster with our API.</p></body></html>",
        html_escape::encode_text(host)
    )
}

async fn handle(
    state: Arc<State>,
    req: Request<Incoming>,
) -> Result<Response<Full<Bytes>>, Infallible> {
    let host = request_host(&req);
    let path = req.uri().path().to_owned();

    if let Some(site) = state.sites.get(&host) {
        *state
            .policy_requests
            .lock()
            .expect("counter lock")
            .entry(format!("{host}{path}"))
            .or_default() += 1;
        let response = match site.get(&path) {
            Some(Route::Page(text)) => html(StatusCode::OK, policy_page(text)),
            Some(Route::Hang(delay, text)) => {
                tokio::time::sleep(*delay).await;
                html(StatusCode::OK, policy_page(text))
            }
            Some(Route::Redirect(status, location)) => Response::builder()
                .status(*status)
                .header(header::LOCATION, location.as_str())
                .body(Full::new(Bytes::new()))
                .expect("redirect response"),
            Some(Route::Status(status)) => {
                let status =
                    StatusCode::from_u16(*status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
                html(status, format!("<h1>{status}</h1>"))
            }
            None if path == "/" => html(StatusCode::OK, homepage(&host)),
            None => html(StatusCode::NOT_FOUND, "<h1>404 Not Found</h1>".into()),
        };
        return Ok(response);
    }

    state.store_requests.fetch_add(1, Ordering::SeqCst);
    if path == HOSTS_PATH {
        let mut hosts: Vec<&String> = state.sites.keys().collect();
        hosts.sort();
        return Ok(json(
            StatusCode::OK,
            serde_json::to_string(&hosts).expect("hosts serialize"),
        ));
    }
    let panel = path
        .strip_prefix("/g/g-")
        .and_then(|rest| rest.strip_suffix("/privacy"))
        .and_then(|id| state.panels.get(id));
    Ok(match panel {
        Some(p) => json(
            StatusCode::OK,
            serde_json::to_string(p).expect("panel serializes"),
        ),
        None => json(StatusCode::NOT_FOUND, r#"{"error":"not found"}"#.into()),
    })
}

fn json(status: StatusCode, body: String) -> Response<Full<Bytes>> {
    Response::builder()
        .status(status)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Full::new(Bytes::from(body)))
        .expect("static response")
}
