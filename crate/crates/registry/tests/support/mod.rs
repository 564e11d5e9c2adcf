#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::Path;
use std::sync::{mpsc, Arc};
use std::time::Duration;

use serde_json::Value;
use vobe_registry::config::Config;
use vobe_registry::service::Service;

/// Two roles, each needing a Polish organization.
pub const PAIR_SPEC: &str = r#"{
  "id": "pair",
  "processModel": [
    {"activity": "system development", "role": "developer"},
    {"activity": "software testing", "role": "tester"}
  ],
  "roles": {
    "developer": {"classText": "class Dev { organization:profile:localization = \"Poland\" }"},
    "tester": {"classText": "class Test { organization:profile:localization = \"Poland\" }"}
  },
  "preferences": {"allowMultiRoleOrg": false}
}"#;

/// The pair roles bound to SoftwareDev and HolidaySoft by name.
pub const NAMED_PAIR_SPEC: &str = r#"{
  "id": "pair",
  "processModel": [
    {"activity": "system development", "role": "developer"},
    {"activity": "software testing", "role": "tester"}
  ],
  "roles": {
    "developer": {"classText": "class Dev { organization:profile:name = \"SoftwareDev\" }"},
    "tester": {"classText": "class Test { organization:profile:name = \"HolidaySoft\" }"}
  }
}"#;

/// One role played by the holiday contractor fixture.
pub const HOLIDAY_SPEC: &str = r#"{
  "id": "holiday",
  "processModel": [
    {"activity": "system development", "role": "developer"},
    {"activity": "software testing", "role": "developer"}
  ],
  "roles": {
    "developer": {"classText": "class D { organization:profile:name = \"HolidaySoft\" }"}
  }
}"#;

pub struct Response {
    pub status: u16,
    pub body: String,
}

impl Response {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("not JSON ({e}): {}", self.body))
    }
}

pub fn encode_path(path: &str) -> String {
    path.replace(' ', "%20")
}

/// Minimal HTTP/1.1 client: one request per connection.
pub fn request(addr: SocketAddr, method: &str, path: &str, body: Option<&str>) -> Response {
    let mut stream = TcpStream::connect(addr).expect("connect");
    stream.set_read_timeout(Some(Duration::from_secs(120))).unwrap();
    let body = body.unwrap_or("");
    write!(
        stream,
        "{method} {} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
        encode_path(path),
        body.len()
    )
    .unwrap();
    let mut reader = BufReader::new(stream);
    let mut status_line = String::new();
    reader.read_line(&mut status_line).unwrap();
    let status: u16 = status_line
        .split_whitespace()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| panic!("bad status line `{status_line}`"));
    let mut chunked = false;
    let mut length = None;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        let (name, value) = line.split_once(':').unwrap();
        match name.to_ascii_lowercase().as_str() {
            "transfer-encoding" => chunked = value.trim().eq_ignore_ascii_case("chunked"),
            "content-length" => length = value.trim().parse::<usize>().ok(),
            _ => {}
        }
    }
    let mut bytes = Vec::new();
    if chunked {
        loop {
            let mut size = String::new();
            reader.read_line(&mut size).unwrap();
            let size = usize::from_str_radix(size.trim(), 16).unwrap();
            let mut chunk = vec![0; size + 2];
            reader.read_exact(&mut chunk).unwrap();
            if size == 0 {
                break;
            }
            bytes.extend_from_slice(&chunk[..size]);
        }
    } else if let Some(n) = length {
        bytes.resize(n, 0);
        reader.read_exact(&mut bytes).unwrap();
    } else {
        reader.read_to_end(&mut bytes).unwrap();
    }
    Response {
        status,
        body: String::from_utf8(bytes).unwrap(),
    }
}

pub struct TestServer {
    pub addr: SocketAddr,
    pub service: Arc<Service>,
}

impl TestServer {
    pub fn start(dir: &Path, config: Config) -> TestServer {
        let service = Service::open(dir, config).unwrap();
        let (tx, rx) = mpsc::channel();
        let shared = service.clone();
        std::thread::spawn(move || {
            let runtime = tokio::runtime::Runtime::new().unwrap();
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, vobe_registry::http::router(shared)).await.unwrap();
            });
        });
        TestServer {
            addr: rx.recv().unwrap(),
            service,
        }
    }

    pub fn get(&self, path: &str) -> Response {
        request(self.addr, "GET", path, None)
    }

    pub fn put(&self, path: &str, body: &str) -> Response {
        request(self.addr, "PUT", path, Some(body))
    }

    pub fn post(&self, path: &str, body: &str) -> Response {
        request(self.addr, "POST", path, Some(body))
    }
}

/// `n` random documents: mostly records (often revising an earlier
/// organization), plus class files, networks and specifications.
pub fn random_documents(rng: &mut vobe_core::testkit::TestRng, n: usize) -> Vec<(vobe_registry::service::DocumentKind, String)> {
    use rand::Rng;
    use vobe_core::dsl::print_class;
    use vobe_core::model::OrgId;
    use vobe_core::testkit;
    use vobe_registry::service::DocumentKind;

    let orgs: Vec<OrgId> = (0..12).map(|k| OrgId::from(format!("org-{k}"))).collect();
    (0..n)
        .map(|k| match rng.random_range(0..10) {
            0..=5 => {
                let id = format!("org-{}", rng.random_range(0..orgs.len()));
                let record = testkit::random_record(rng, &id);
                (DocumentKind::Record, serde_json::to_string(&record).unwrap())
            }
            6 | 7 => (DocumentKind::Classfile, print_class(&testkit::random_class(rng))),
            8 => {
                let density = rng.random_range(0.0..0.5);
                let network = testkit::random_network(rng, &orgs, density);
                (DocumentKind::Network, serde_json::to_string(&network).unwrap())
            }
            _ => {
                let mut spec: Value = serde_json::from_str(PAIR_SPEC).unwrap();
                spec["id"] = serde_json::json!(format!("spec-{k}"));
                (DocumentKind::Spec, spec.to_string())
            }
        })
        .collect()
}

/// Percent-encodes one path segment.
pub fn segment(text: &str) -> String {
    let mut out = String::new();
    for b in text.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

/// The request that stores `text` over HTTP.
pub fn ingest_request(kind: vobe_registry::service::DocumentKind, text: &str) -> (&'static str, String) {
    use vobe_registry::service::DocumentKind;
    let value = || serde_json::from_str::<Value>(text).unwrap();
    match kind {
        DocumentKind::Record => {
            let id = value()["organizationProfile"]["id"].as_str().unwrap().to_string();
            ("PUT", format!("/organizations/{}", segment(&id)))
        }
        DocumentKind::Classfile => {
            let class = vobe_core::dsl::parse_class(text).unwrap();
            ("PUT", format!("/classes/{}", segment(&class.name)))
        }
        DocumentKind::Network => ("PUT", "/network".into()),
        DocumentKind::Spec => {
            let id = value()["id"].as_str().unwrap().to_string();
            ("PUT", format!("/specs/{}", segment(&id)))
        }
    }
}
