mod support;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;

use proptest::prelude::*;
use serde_json::{json, Value};
use vobe_core::fixtures;
use vobe_core::testkit::{self, Corruption};
use vobe_registry::config::Config;
use vobe_registry::events::{self, EventBus};
use vobe_registry::service::{DocumentKind, RegistryError, Service};

fn open() -> (tempfile::TempDir, Arc<Service>) {
    let dir = tempfile::tempdir().unwrap();
    let service = Service::open(dir.path(), Config::default()).unwrap();
    (dir, service)
}

#[test]
fn reingest_appends_a_version() {
    let (_dir, service) = open();
    let first = service.ingest_text(DocumentKind::Record, fixtures::SOFTWARE_DEV_JSON).unwrap();
    assert_eq!(first[0].version, Some(1));

    let mut modified: Value = serde_json::from_str(fixtures::SOFTWARE_DEV_JSON).unwrap();
    modified["organizationProfile"]["numberOfEmployees"] = json!(120);
    let second = service.ingest_text(DocumentKind::Record, &modified.to_string()).unwrap();
    assert_eq!(second[0].version, Some(2));

    let v1 = service.organization("SoftwareDev", Some(1)).unwrap();
    let v2 = service.organization("SoftwareDev", None).unwrap();
    assert_eq!(v1, fixtures::software_dev());
    assert_eq!(v2.organization_profile.number_of_employees, 120);
}

#[test]
fn invalid_records_are_rejected_with_rule_names() {
    let (_dir, service) = open();
    for corruption in Corruption::ALL {
        let record = corruption.apply(&testkit::random_record(&mut testkit::rng(3), "broken"));
        let err = service
            .ingest_text(DocumentKind::Record, &serde_json::to_string(&record).unwrap())
            .unwrap_err();
        let RegistryError::Invalid { problems, .. } = &err else {
            panic!("{corruption:?}: {err}");
        };
        assert!(problems.iter().all(|p| p.rule.is_some()), "{corruption:?}");
        assert_eq!(err.exit_code(), 1);
    }
    assert!(service.snapshot().organizations.is_empty());
    assert_eq!(service.events().last_sequence(events::RECORD_UPDATED), 0);
}

#[test]
fn class_files_store_every_class() {
    let (_dir, service) = open();
    let text = format!(
        "{}\nclass \"Small\" {{ organization:profile:numberOfEmployees < 50 }}\n",
        fixtures::POLISH_SOFTWARE_COMPANY_OCLS
    );
    let stored = service.ingest_text(DocumentKind::Classfile, &text).unwrap();
    assert_eq!(stored.len(), 2);
    assert_eq!(service.class("Polish Software Company").unwrap(), fixtures::polish_software_company());
    assert!(service.ingest_text(DocumentKind::Classfile, "class {").is_err());
}

#[test]
fn specs_need_known_classes() {
    let (_dir, service) = open();
    let spec = json!({
        "id": "s",
        "processModel": [{ "activity": "server administration", "role": "admin" }],
        "roles": { "admin": { "class": "Polish Software Company" } }
    })
    .to_string();
    assert!(matches!(
        service.ingest_text(DocumentKind::Spec, &spec),
        Err(RegistryError::Invalid { .. })
    ));
    service
        .ingest_text(DocumentKind::Classfile, fixtures::POLISH_SOFTWARE_COMPANY_OCLS)
        .unwrap();
    assert_eq!(service.ingest_text(DocumentKind::Spec, &spec).unwrap()[0].id, "s");
}

#[test]
fn ingests_publish_in_commit_order() {
    let (_dir, service) = open();
    let (tx, rx) = mpsc::channel();
    let sub = service
        .events()
        .subscribe(events::RECORD_UPDATED, move |e| tx.send((e.sequence, e.payload.clone())).unwrap());
    for text in [fixtures::SOFTWARE_DEV_JSON, fixtures::SOFTIS_JSON, fixtures::HOLIDAY_CONTRACTOR_JSON] {
        service.ingest_text(DocumentKind::Record, text).unwrap();
    }
    sub.close();
    let seen: Vec<(u64, Value)> = rx.iter().collect();
    let sequences: Vec<u64> = seen.iter().map(|s| s.0).collect();
    assert_eq!(sequences, [1, 2, 3]);
    assert_eq!(seen[1].1["orgId"], "Softis");
}

#[test]
fn two_subscribers_see_everything() {
    let bus = EventBus::new();
    let seen = Arc::new(Mutex::new(BTreeMap::<u8, Vec<u64>>::new()));
    let subs: Vec<_> = (0..2u8)
        .map(|n| {
            let seen = seen.clone();
            bus.subscribe("spec.created", move |e| seen.lock().unwrap().entry(n).or_default().push(e.sequence))
        })
        .collect();
    for _ in 0..5 {
        bus.publish("spec.created", json!({}));
    }
    subs.into_iter().for_each(|s| s.close());
    let seen = seen.lock().unwrap();
    assert_eq!(seen[&0], [1, 2, 3, 4, 5]);
    assert_eq!(seen[&1], [1, 2, 3, 4, 5]);
}

#[test]
fn snapshot_before_ingest_never_reflects_it() {
    let (_dir, service) = open();
    let before = service.snapshot();
    let exported = before.export_json();
    service.ingest_text(DocumentKind::Record, fixtures::SOFTWARE_DEV_JSON).unwrap();
    assert!(before.organizations.is_empty());
    assert_eq!(before.export_json(), exported);
    assert_eq!(service.snapshot().organizations.len(), 1);
}

#[test]
fn readers_only_see_whole_commits() {
    let docs = support::random_documents(&mut testkit::rng(21), 40);

    let (_reference_dir, reference) = open();
    let mut expected = BTreeMap::new();
    expected.insert(0, reference.export());
    for (kind, text) in &docs {
        reference.ingest_text(*kind, text).unwrap();
        let s = reference.snapshot();
        expected.insert(s.seq, s.export_json());
    }

    let (_dir, service) = open();
    let done = Arc::new(AtomicBool::new(false));
    let readers: Vec<_> = (0..4)
        .map(|_| {
            let service = service.clone();
            let done = done.clone();
            thread::spawn(move || {
                let mut seen = Vec::new();
                while !done.load(Ordering::Acquire) {
                    let s = service.snapshot();
                    seen.push((s.seq, s.export_json()));
                }
                seen
            })
        })
        .collect();
    for (kind, text) in &docs {
        service.ingest_text(*kind, text).unwrap();
    }
    done.store(true, Ordering::Release);
    for reader in readers {
        for (seq, export) in reader.join().unwrap() {
            assert_eq!(Some(&export), expected.get(&seq), "state at operation {seq}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn concurrent_publishers_get_gapless_sequences(threads in 1usize..5, per_thread in 1usize..20) {
        let bus = EventBus::new();
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let bus = bus.clone();
                thread::spawn(move || {
                    for k in 0..per_thread {
                        bus.publish(if k % 2 == 0 { "even" } else { "odd" }, json!(t));
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        for topic in ["even", "odd"] {
            let sequences: Vec<u64> = bus.since(topic, 0).iter().map(|e| e.sequence).collect();
            let n = sequences.len() as u64;
            prop_assert_eq!(sequences, (1..=n).collect::<Vec<_>>());
        }
        prop_assert_eq!(
            bus.since("even", 0).len() + bus.since("odd", 0).len(),
            threads * per_thread
        );
    }
}
