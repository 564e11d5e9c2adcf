mod support;

use std::time::Duration;

use serde_json::{json, Value};
use support::{TestServer, HOLIDAY_SPEC, PAIR_SPEC};
use vobe_core::fixtures;
use vobe_registry::config::Config;

fn server() -> (tempfile::TempDir, TestServer) {
    let dir = tempfile::tempdir().unwrap();
    let server = TestServer::start(dir.path(), Config::default());
    (dir, server)
}

fn with_records(server: &TestServer) {
    for text in [fixtures::SOFTWARE_DEV_JSON, fixtures::SOFTIS_JSON, fixtures::HOLIDAY_CONTRACTOR_JSON] {
        let record: Value = serde_json::from_str(text).unwrap();
        let id = record["organizationProfile"]["id"].as_str().unwrap();
        assert_eq!(server.put(&format!("/organizations/{id}"), text).status, 201);
    }
}

#[test]
fn records_are_versioned() {
    let (_dir, server) = server();
    let created = server.put("/organizations/SoftwareDev", fixtures::SOFTWARE_DEV_JSON);
    assert_eq!(created.status, 201);
    assert_eq!(created.json()["version"], 1);

    let same = server.put("/organizations/SoftwareDev", fixtures::SOFTWARE_DEV_JSON);
    assert_eq!(same.status, 200);
    assert_eq!(same.json()["changed"], false);

    let mut changed: Value = serde_json::from_str(fixtures::SOFTWARE_DEV_JSON).unwrap();
    changed["organizationProfile"]["numberOfEmployees"] = json!(99);
    let revised = server.put("/organizations/SoftwareDev?expectedVersion=1", &changed.to_string());
    assert_eq!(revised.status, 200);
    assert_eq!(revised.json()["version"], 2);

    let current = server.get("/organizations/SoftwareDev").json();
    assert_eq!(current["organizationProfile"]["numberOfEmployees"], 99);
    assert_eq!(current["organizationProfile"]["version"], 2);
    let first = server.get("/organizations/SoftwareDev/versions/1").json();
    assert_ne!(first["organizationProfile"]["numberOfEmployees"], 99);
    assert_eq!(server.get("/organizations/SoftwareDev/versions/3").status, 404);
    assert_eq!(server.get("/organizations/Nobody").status, 404);
}

#[test]
fn stale_version_conflicts() {
    let (_dir, server) = server();
    server.put("/organizations/SoftwareDev", fixtures::SOFTWARE_DEV_JSON);
    let mut changed: Value = serde_json::from_str(fixtures::SOFTWARE_DEV_JSON).unwrap();
    changed["organizationProfile"]["contact"] = json!("office@example.org");
    let r = server.put("/organizations/SoftwareDev?expectedVersion=0", &changed.to_string());
    assert_eq!(r.status, 409);
    assert_eq!(r.json()["currentVersion"], 1);
    assert_eq!(server.get("/organizations/SoftwareDev").json()["organizationProfile"]["version"], 1);
}

#[test]
fn invalid_records_list_violations() {
    let (_dir, server) = server();
    let mut record: Value = serde_json::from_str(fixtures::SOFTWARE_DEV_JSON).unwrap();
    record["services"] = json!([]);
    let r = server.put("/organizations/SoftwareDev", &record.to_string());
    assert_eq!(r.status, 400);
    let body = r.json();
    assert_eq!(body["error"], "validation");
    assert!(body["violations"].as_array().unwrap().iter().any(|v| v["rule"].is_string()));
    assert_eq!(server.get("/organizations/SoftwareDev").status, 404);

    let r = server.put("/organizations/SoftwareDev", "{\"organizationProfile\": 3}");
    assert_eq!(r.status, 400);
    assert_eq!(r.json()["violations"][0]["path"], "organizationProfile");

    let r = server.put("/organizations/Other", fixtures::SOFTWARE_DEV_JSON);
    assert_eq!(r.status, 400);
}

#[test]
fn classes_and_search() {
    let (_dir, server) = server();
    with_records(&server);
    let r = server.put("/classes/Polish Software Company", fixtures::POLISH_SOFTWARE_COMPANY_OCLS);
    assert_eq!(r.status, 200, "{}", r.body);
    let class = server.get("/classes/Polish Software Company").json();
    assert!(class["text"].as_str().unwrap().contains("Server administration"));
    assert_eq!(server.put("/classes/Other", fixtures::POLISH_SOFTWARE_COMPANY_OCLS).status, 400);
    let bad = server.put("/classes/X", &json!({ "text": "class X { organization:profile:name =" }).to_string());
    assert_eq!(bad.status, 400);
    assert!(bad.json()["violations"][0]["path"].is_string());

    let ranking = server.post("/search", &json!({ "class": "Polish Software Company" }).to_string()).json();
    let ranking = ranking["ranking"].as_array().unwrap();
    assert_eq!(ranking[0]["orgId"], "SoftwareDev");
    assert_eq!(ranking[0]["score"], 1.0);
    assert_eq!(ranking[0]["isInstance"], true);
    let softis = ranking.iter().find(|r| r["orgId"] == "Softis").unwrap();
    assert_eq!(softis["isInstance"], false);

    let inline = json!({
        "classText": "class L { organization:profile:localization = \"Germany\" organization:profile:name exists }",
        "weights": [3.0, 1.0]
    });
    let ranking = server.post("/search", &inline.to_string()).json();
    assert_eq!(ranking["ranking"][0]["orgId"], "Softis");
    assert_eq!(ranking["ranking"][1]["score"], 0.25);
    assert_eq!(server.post("/search", "{}").status, 400);
}

#[test]
fn planning_and_inception() {
    let (_dir, server) = server();
    with_records(&server);
    assert_eq!(server.put("/specs/pair", PAIR_SPEC).status, 200);
    assert_eq!(server.get("/specs/pair").json()["id"], "pair");
    assert_eq!(server.put("/specs/other", PAIR_SPEC).status, 400);

    let candidates = server.post("/specs/pair/candidates", "").json();
    let developers: Vec<&str> = candidates["candidates"]["developer"]["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["orgId"].as_str().unwrap())
        .collect();
    assert_eq!(developers, ["HolidaySoft", "SoftwareDev"]);

    let plan = server.post("/specs/pair/variants", "{}").json();
    let variants = plan["variants"].as_array().unwrap();
    assert_eq!(variants.len(), 2);
    assert!(variants[0]["totalCost"]["amount"].as_f64() <= variants[1]["totalCost"]["amount"].as_f64());

    let vo = server.post("/specs/pair/incept", &json!({ "variant": variants[0] }).to_string());
    assert_eq!(vo.status, 201);
    let vo = vo.json();
    assert_eq!(vo["id"], "vo-1");
    assert_eq!(server.get("/vos/vo-1").json()["specId"], "pair");

    let network = server.get("/network").json();
    let edges = network["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 1);
    assert_eq!(edges[0]["type"], "pastCollaboration");
    assert_eq!(edges[0]["weight"], 1.0);

    let again = server.post("/specs/pair/incept", &json!({ "index": 1 }).to_string()).json();
    assert_eq!(again["id"], "vo-2");
    assert_eq!(server.get("/network").json()["edges"][0]["weight"], 2.0);

    let wrong = json!({ "variant": { "assignment": { "developer": { "orgId": "SoftwareDev" } } } });
    assert_eq!(server.post("/specs/pair/incept", &wrong.to_string()).status, 400);
    assert_eq!(server.post("/specs/pair/incept", &json!({ "index": 9 }).to_string()).status, 404);
    assert_eq!(server.post("/specs/none/variants", "").status, 404);
}

#[test]
fn context_changes_costs() {
    let (_dir, server) = server();
    with_records(&server);
    server.put("/specs/holiday", HOLIDAY_SPEC);
    let plain = server.post("/specs/holiday/variants", "").json();
    let body = json!({ "context": [{ "object": "season", "predicate": "is", "subject": "holidays" }] });
    let holidays = server.post("/specs/holiday/variants", &body.to_string()).json();
    let cost = |p: &Value| p["variants"][0]["totalCost"]["amount"].as_f64().unwrap();
    let duration = |p: &Value| p["variants"][0]["totalDuration"].as_f64().unwrap();
    assert!(cost(&holidays) > cost(&plain));
    assert!(duration(&holidays) > duration(&plain));
}

#[test]
fn cap_exceeded_is_unprocessable() {
    let dir = tempfile::tempdir().unwrap();
    let config = Config {
        variant_cap: 1,
        ..Config::default()
    };
    let server = TestServer::start(dir.path(), config);
    with_records(&server);
    server.put("/specs/pair", PAIR_SPEC);
    let r = server.post("/specs/pair/variants", "");
    assert_eq!(r.status, 422);
    assert_eq!(r.json()["error"], "capExceeded");
}

#[test]
fn verification_endpoint() {
    let (_dir, server) = server();
    with_records(&server);
    assert_eq!(server.post("/verify/SoftwareDev", "").status, 404);
    let network = json!({
        "nodes": ["SoftwareDev", "p1"],
        "edges": [{ "source": "SoftwareDev", "target": "p1", "type": "pastCollaboration", "weight": 1 }],
        "opinions": []
    });
    assert_eq!(server.put("/network", &network.to_string()).status, 200);
    let report = server.post("/verify/SoftwareDev", "").json();
    assert_eq!(report["checks"][0]["flag"], "discrepancy");
    assert_eq!(report["checks"][0]["observedValue"], 1.0);
    assert_eq!(report["reliabilityScore"], 0.0);

    let looped = json!({ "nodes": ["a"], "edges": [{ "source": "a", "target": "a", "type": "trust", "weight": 0.5 }] });
    assert_eq!(server.put("/network", &looped.to_string()).status, 400);
}

#[test]
fn events_long_poll() {
    let (_dir, server) = server();
    assert_eq!(server.get("/events").status, 400);
    let empty = server.get("/events?topic=record.updated&since=0&timeout=0").json();
    assert_eq!(empty["events"], json!([]));

    let addr = server.addr;
    let waiter = std::thread::spawn(move || {
        support::request(addr, "GET", "/events?topic=record.updated&since=0&timeout=30000", None).json()
    });
    std::thread::sleep(Duration::from_millis(100));
    server.put("/organizations/SoftwareDev", fixtures::SOFTWARE_DEV_JSON);
    let woke = waiter.join().unwrap();
    assert_eq!(woke["events"][0]["sequence"], 1);
    assert_eq!(woke["events"][0]["payload"]["orgId"], "SoftwareDev");
    assert_eq!(woke["next"], 1);

    server.put("/organizations/Softis", fixtures::SOFTIS_JSON);
    let all = server.get("/events?topic=record.updated&since=0&timeout=0").json();
    let sequences: Vec<u64> = all["events"].as_array().unwrap().iter().map(|e| e["sequence"].as_u64().unwrap()).collect();
    assert_eq!(sequences, [1, 2]);
    let later = server.get("/events?topic=record.updated&since=1&timeout=0").json();
    assert_eq!(later["events"].as_array().unwrap().len(), 1);
}

#[test]
fn export_is_canonical_json() {
    let (_dir, server) = server();
    with_records(&server);
    let r = server.get("/export");
    assert_eq!(r.status, 200);
    assert_eq!(r.body, server.service.export());
    assert_eq!(r.json()["organizations"]["Softis"][0]["organizationProfile"]["name"], "Softis");
}
