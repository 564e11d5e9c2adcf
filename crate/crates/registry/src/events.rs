//! In-process event bus with ordered per-topic queues.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub const RECORD_UPDATED: &str = "record.updated";
pub const CLASS_DEFINED: &str = "class.defined";
pub const NETWORK_UPDATED: &str = "network.updated";
pub const SPEC_CREATED: &str = "spec.created";
pub const CANDIDATES_READY: &str = "candidates.ready";
pub const VARIANTS_READY: &str = "variants.ready";
pub const VO_INCEPTED: &str = "vo.incepted";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleEvent {
    pub topic: String,
    pub sequence: u64,
    pub payload: serde_json::Value,
}

#[derive(Default)]
struct Topic {
    history: Vec<ModuleEvent>,
    subscribers: BTreeMap<u64, mpsc::Sender<ModuleEvent>>,
}

#[derive(Default)]
struct Inner {
    topics: Mutex<(BTreeMap<String, Topic>, u64)>,
    published: Condvar,
}

/// Cheap to clone; clones share the same topics.
#[derive(Clone, Default)]
pub struct EventBus {
    inner: Arc<Inner>,
}

/// Handle of a running subscription. Dropping it stops delivery once the
/// already queued events have been handled.
pub struct Subscription {
    bus: EventBus,
    topic: String,
    id: u64,
    worker: Option<thread::JoinHandle<()>>,
}

impl Subscription {
    /// Stops delivery and waits for the handler to drain its queue.
    pub fn close(mut self) {
        self.detach();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }

    fn detach(&self) {
        let mut guard = self.bus.inner.topics.lock().expect("event bus lock");
        if let Some(topic) = guard.0.get_mut(&self.topic) {
            topic.subscribers.remove(&self.id);
        }
    }
}

impl Drop for Subscription {
    fn drop(&mut self) {
        self.detach();
    }
}

impl EventBus {
    pub fn new() -> Self {
        EventBus::default()
    }

    /// Appends an event with the topic's next sequence number and hands it
    /// to every subscriber of the topic.
    pub fn publish(&self, topic: &str, payload: serde_json::Value) -> ModuleEvent {
        let mut guard = self.inner.topics.lock().expect("event bus lock");
        let entry = guard.0.entry(topic.to_string()).or_default();
        let event = ModuleEvent {
            topic: topic.to_string(),
            sequence: entry.history.len() as u64 + 1,
            payload,
        };
        entry.history.push(event.clone());
        entry.subscribers.retain(|_, tx| tx.send(event.clone()).is_ok());
        drop(guard);
        self.inner.published.notify_all();
        event
    }

    /// Runs `handler` on a dedicated thread for every event published on
    /// `topic` from now on, in sequence order. Unknown topics are created.
    pub fn subscribe<F>(&self, topic: &str, mut handler: F) -> Subscription
    where
        F: FnMut(&ModuleEvent) + Send + 'static,
    {
        let (tx, rx) = mpsc::channel::<ModuleEvent>();
        let id = {
            let mut guard = self.inner.topics.lock().expect("event bus lock");
            guard.1 += 1;
            let id = guard.1;
            guard.0.entry(topic.to_string()).or_default().subscribers.insert(id, tx);
            id
        };
        let worker = thread::Builder::new()
            .name(format!("events-{topic}-{id}"))
            .spawn(move || {
                for event in rx {
                    handler(&event);
                }
            })
            .expect("spawn subscriber thread");
        Subscription {
            bus: self.clone(),
            topic: topic.to_string(),
            id,
            worker: Some(worker),
        }
    }

    /// Events of `topic` with a sequence number above `since`.
    pub fn since(&self, topic: &str, since: u64) -> Vec<ModuleEvent> {
        let guard = self.inner.topics.lock().expect("event bus lock");
        after(guard.0.get(topic), since)
    }

    /// Like [`since`](Self::since) but blocks up to `timeout` for at least one
    /// event.
    pub fn wait(&self, topic: &str, since: u64, timeout: Duration) -> Vec<ModuleEvent> {
        let deadline = Instant::now() + timeout;
        let mut guard = self.inner.topics.lock().expect("event bus lock");
        loop {
            let events = after(guard.0.get(topic), since);
            let now = Instant::now();
            if !events.is_empty() || now >= deadline {
                return events;
            }
            guard = self
                .inner
                .published
                .wait_timeout(guard, deadline - now)
                .expect("event bus lock")
                .0;
        }
    }

    /// Sequence number of the latest event on `topic`, 0 if none.
    pub fn last_sequence(&self, topic: &str) -> u64 {
        let guard = self.inner.topics.lock().expect("event bus lock");
        guard.0.get(topic).map_or(0, |t| t.history.len() as u64)
    }
}

fn after(topic: Option<&Topic>, since: u64) -> Vec<ModuleEvent> {
    let Some(topic) = topic else { return Vec::new() };
    let start = usize::try_from(since).unwrap_or(usize::MAX).min(topic.history.len());
    topic.history[start..].to_vec()
}
