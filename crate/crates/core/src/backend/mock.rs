//! In-process HTTP server speaking the backend protocol.
//!
//! Used to replay recorded model responses and to script deterministic
//! backends in tests. Every request is counted per path, and the peak number
//! of concurrently open requests is tracked.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::{
    canonical_json, Capability, CompleteRequest, CompleteResponse, HealthResponse, QaRequest, QaResponse,
    SimilarityRequest, SimilarityResponse, VqaRequest, VqaResponse,
};

#[derive(Debug, Clone)]
pub struct MockRequest {
    pub method: String,
    pub path: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockResponse {
    pub status: u16,
    pub body: String,
}

impl MockResponse {
    pub fn json<T: Serialize>(value: &T) -> Self {
        MockResponse {
            status: 200,
            body: serde_json::to_string(value).expect("serializable"),
        }
    }

    pub fn status(status: u16, body: impl Into<String>) -> Self {
        MockResponse {
            status,
            body: body.into(),
        }
    }
}

type Handler = dyn Fn(&MockRequest) -> MockResponse + Send + Sync;

#[derive(Default)]
struct Stats {
    by_path: Mutex<HashMap<String, usize>>,
    total: AtomicUsize,
    posts: AtomicUsize,
    current: AtomicUsize,
    peak: AtomicUsize,
}

pub struct MockServer {
    addr: SocketAddr,
    stats: Arc<Stats>,
    shutdown: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(handler: impl Fn(&MockRequest) -> MockResponse + Send + Sync + 'static) -> io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let stats = Arc::new(Stats::default());
        let shutdown = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);

        let accept_thread = {
            let stats = stats.clone();
            let shutdown = shutdown.clone();
            thread::spawn(move || {
                for conn in listener.incoming() {
                    if shutdown.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = conn else { continue };
                    let handler = handler.clone();
                    let stats = stats.clone();
                    thread::spawn(move || {
                        let _ = serve_connection(stream, &*handler, &stats);
                    });
                }
            })
        };
        Ok(MockServer {
            addr,
            stats,
            shutdown,
            accept_thread: Some(accept_thread),
        })
    }

    /// Replays recorded `(path, request, response)` triples, matching request
    /// bodies canonically. Unrecorded requests get a 404.
    pub fn replay(
        model_id: &str,
        capabilities: &[Capability],
        transcript: Vec<(String, Value, Value)>,
    ) -> io::Result<Self> {
        let health = HealthResponse {
            status: "ok".into(),
            model_id: model_id.into(),
            capabilities: capabilities.to_vec(),
        };
        let table: HashMap<(String, String), String> = transcript
            .into_iter()
            .map(|(path, req, resp)| ((path, canonical_json(&req)), resp.to_string()))
            .collect();
        MockServer::start(move |req| {
            if req.method == "GET" && req.path == "/v1/health" {
                return MockResponse::json(&health);
            }
            let Ok(body) = serde_json::from_str::<Value>(&req.body) else {
                return MockResponse::status(400, "request body is not JSON");
            };
            match table.get(&(req.path.clone(), canonical_json(&body))) {
                Some(resp) => MockResponse::status(200, resp.clone()),
                None => MockResponse::status(404, "no recorded response"),
            }
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> usize {
        self.stats.total.load(Ordering::SeqCst)
    }

    /// POST requests, i.e. inference calls.
    pub fn inference_requests(&self) -> usize {
        self.stats.posts.load(Ordering::SeqCst)
    }

    pub fn requests_to(&self, path: &str) -> usize {
        self.stats.by_path.lock().unwrap().get(path).copied().unwrap_or(0)
    }

    /// Highest number of requests being handled at the same time.
    pub fn peak_concurrency(&self) -> usize {
        self.stats.peak.load(Ordering::SeqCst)
    }

    pub fn reset_counters(&self) {
        self.stats.by_path.lock().unwrap().clear();
        self.stats.total.store(0, Ordering::SeqCst);
        self.stats.posts.store(0, Ordering::SeqCst);
        self.stats.peak.store(0, Ordering::SeqCst);
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(t) = self.accept_thread.take() {
            let _ = t.join();
        }
    }
}

fn serve_connection(stream: TcpStream, handler: &Handler, stats: &Stats) -> io::Result<()> {
    stream.set_read_timeout(Some(Duration::from_secs(30)))?;
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_string();
    let path = parts.next().unwrap_or_default().to_string();
    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("content-length") {
                content_length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let now = stats.current.fetch_add(1, Ordering::SeqCst) + 1;
    stats.peak.fetch_max(now, Ordering::SeqCst);
    stats.total.fetch_add(1, Ordering::SeqCst);
    if method == "POST" {
        stats.posts.fetch_add(1, Ordering::SeqCst);
    }
    *stats.by_path.lock().unwrap().entry(path.clone()).or_insert(0) += 1;

    let req = MockRequest {
        method,
        path,
        body: String::from_utf8_lossy(&body).into_owned(),
    };
    let resp = handler(&req);
    stats.current.fetch_sub(1, Ordering::SeqCst);

    let reason = match resp.status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        422 => "Unprocessable Entity",
        503 => "Service Unavailable",
        _ => "Status",
    };
    // One write per response; split writes stall on delayed ACKs.
    let mut buf = format!(
        "HTTP/1.1 {} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        resp.status,
        resp.body.len()
    )
    .into_bytes();
    buf.extend_from_slice(resp.body.as_bytes());
    let mut out = stream;
    out.write_all(&buf)?;
    out.flush()
}

type Typed<Req, Resp> = Box<dyn Fn(&Req) -> Resp + Send + Sync>;

/// Scripted backend with typed handlers per endpoint.
///
/// Capabilities are derived from the handlers that are set; VQA handlers
/// advertise `vqa_mc` only when [`MockBackend::multiple_choice`] is on.
pub struct MockBackend {
    model_id: String,
    complete: Option<Typed<CompleteRequest, CompleteResponse>>,
    qa: Option<Typed<QaRequest, QaResponse>>,
    vqa: Option<Typed<VqaRequest, VqaResponse>>,
    similarity: Option<Typed<SimilarityRequest, SimilarityResponse>>,
    multiple_choice: bool,
    latency: Duration,
    fail_first: usize,
}

impl MockBackend {
    pub fn new(model_id: impl Into<String>) -> Self {
        MockBackend {
            model_id: model_id.into(),
            complete: None,
            qa: None,
            vqa: None,
            similarity: None,
            multiple_choice: false,
            latency: Duration::ZERO,
            fail_first: 0,
        }
    }

    pub fn on_complete(mut self, f: impl Fn(&CompleteRequest) -> CompleteResponse + Send + Sync + 'static) -> Self {
        self.complete = Some(Box::new(f));
        self
    }

    pub fn on_qa(mut self, f: impl Fn(&QaRequest) -> QaResponse + Send + Sync + 'static) -> Self {
        self.qa = Some(Box::new(f));
        self
    }

    pub fn on_vqa(mut self, f: impl Fn(&VqaRequest) -> VqaResponse + Send + Sync + 'static) -> Self {
        self.vqa = Some(Box::new(f));
        self
    }

    pub fn on_similarity(
        mut self,
        f: impl Fn(&SimilarityRequest) -> SimilarityResponse + Send + Sync + 'static,
    ) -> Self {
        self.similarity = Some(Box::new(f));
        self
    }

    pub fn multiple_choice(mut self, on: bool) -> Self {
        self.multiple_choice = on;
        self
    }

    /// Sleeps this long inside every inference request.
    pub fn latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    /// Answers the first `n` inference requests with HTTP 503.
    pub fn fail_first(mut self, n: usize) -> Self {
        self.fail_first = n;
        self
    }

    pub fn capabilities(&self) -> Vec<Capability> {
        let mut caps = Vec::new();
        if self.complete.is_some() {
            caps.push(Capability::Complete);
        }
        if self.qa.is_some() {
            caps.push(Capability::Qa);
        }
        if self.vqa.is_some() {
            caps.push(Capability::Vqa);
            if self.multiple_choice {
                caps.push(Capability::VqaMc);
            }
        }
        if self.similarity.is_some() {
            caps.push(Capability::Similarity);
        }
        caps
    }

    pub fn start(self) -> io::Result<MockServer> {
        let health = HealthResponse {
            status: "ok".into(),
            model_id: self.model_id.clone(),
            capabilities: self.capabilities(),
        };
        let failures = AtomicUsize::new(0);
        MockServer::start(move |req| {
            if req.method == "GET" && req.path == "/v1/health" {
                return MockResponse::json(&health);
            }
            if failures.fetch_add(1, Ordering::SeqCst) < self.fail_first {
                return MockResponse::status(503, "warming up");
            }
            if !self.latency.is_zero() {
                thread::sleep(self.latency);
            }
            match req.path.as_str() {
                "/v1/complete" => dispatch(&self.complete, req),
                "/v1/qa" => dispatch(&self.qa, req),
                "/v1/vqa" => dispatch(&self.vqa, req),
                "/v1/similarity" => dispatch(&self.similarity, req),
                _ => MockResponse::status(404, "unknown endpoint"),
            }
        })
    }
}

fn dispatch<Req: DeserializeOwned, Resp: Serialize>(
    handler: &Option<Typed<Req, Resp>>,
    req: &MockRequest,
) -> MockResponse {
    let Some(h) = handler else {
        return MockResponse::status(404, "capability not served");
    };
    match serde_json::from_str::<Req>(&req.body) {
        Ok(r) => MockResponse::json(&h(&r)),
        Err(e) => MockResponse::status(400, e.to_string()),
    }
}
