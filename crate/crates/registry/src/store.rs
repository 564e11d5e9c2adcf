//! Versioned document store: an append-only, fsynced log of operations plus
//! compacted generations.
//!
//! Layout of the data directory:
//!
//! ```text
//! wal.jsonl                one committed operation per line
//! CURRENT                  name of the active generation, if any
//! compacted-<seq>/         state after operation <seq>
//!   organizations/<id>.json   all versions of one record
//!   classes/<name>.ocls
//!   specs/<id>.json
//!   vos/<id>.json
//!   network.json
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use vobe_core::dsl::{parse_class, print_class, OrganizationClass};
use vobe_core::mapss::{apply_inception, Registry, SpecDocument, VoRecord};
use vobe_core::model::{OrgId, OrganizationRecord};
use vobe_core::social::SocialNetwork;

const WAL: &str = "wal.jsonl";
const CURRENT: &str = "CURRENT";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("storage I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt store: {0}")]
    Corrupt(String),
}

/// A consistent point-in-time view of everything stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StoreSnapshot {
    /// Sequence number of the last applied operation.
    pub seq: u64,
    /// All versions of each record, oldest first; version `n` sits at
    /// index `n - 1`.
    pub organizations: BTreeMap<OrgId, Vec<OrganizationRecord>>,
    pub classes: BTreeMap<String, OrganizationClass>,
    pub specs: BTreeMap<String, SpecDocument>,
    pub network: SocialNetwork,
    pub vos: BTreeMap<String, VoRecord>,
}

#[derive(Serialize)]
struct Export<'a> {
    organizations: &'a BTreeMap<OrgId, Vec<OrganizationRecord>>,
    classes: BTreeMap<&'a str, String>,
    specs: &'a BTreeMap<String, SpecDocument>,
    network: &'a SocialNetwork,
    vos: &'a BTreeMap<String, VoRecord>,
}

impl StoreSnapshot {
    pub fn current(&self, org: &str) -> Option<&OrganizationRecord> {
        self.organizations.get(org).and_then(|v| v.last())
    }

    pub fn version(&self, org: &str, version: u32) -> Option<&OrganizationRecord> {
        let index = usize::try_from(version).ok()?.checked_sub(1)?;
        self.organizations.get(org).and_then(|v| v.get(index))
    }

    /// Current version of every record, keyed by organization.
    pub fn current_records(&self) -> Registry {
        self.organizations
            .iter()
            .filter_map(|(id, versions)| versions.last().map(|r| (id.clone(), r.clone())))
            .collect()
    }

    /// Canonical, deterministic JSON of the stored state.
    pub fn export_json(&self) -> String {
        let export = Export {
            organizations: &self.organizations,
            classes: self.classes.iter().map(|(k, v)| (k.as_str(), print_class(v))).collect(),
            specs: &self.specs,
            network: &self.network,
            vos: &self.vos,
        };
        let mut text = serde_json::to_string_pretty(&export).expect("state serializes");
        text.push('\n');
        text
    }
}

/// One committed change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
#[allow(clippy::large_enum_variant)]
pub enum Op {
    /// A new version of a record; its profile version is already set.
    PutRecord(OrganizationRecord),
    PutClass { name: String, text: String },
    PutNetwork(SocialNetwork),
    PutSpec(SpecDocument),
    Incept(VoRecord),
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    seq: u64,
    op: Op,
}

fn apply(state: &mut StoreSnapshot, op: Op) -> Result<(), StoreError> {
    match op {
        Op::PutRecord(record) => {
            let versions = state.organizations.entry(record.org_id().clone()).or_default();
            if record.organization_profile.version as usize != versions.len() + 1 {
                return Err(StoreError::Corrupt(format!(
                    "record `{}` version {} after {} versions",
                    record.org_id(),
                    record.organization_profile.version,
                    versions.len()
                )));
            }
            versions.push(record);
        }
        Op::PutClass { name, text } => {
            let class = parse_class(&text).map_err(|e| StoreError::Corrupt(format!("class `{name}`: {e}")))?;
            state.classes.insert(name, class);
        }
        Op::PutNetwork(network) => state.network = network,
        Op::PutSpec(spec) => {
            state.specs.insert(spec.id.clone(), spec);
        }
        Op::Incept(vo) => {
            apply_inception(&vo, &mut state.network);
            state.vos.insert(vo.id.clone(), vo);
        }
    }
    Ok(())
}

struct Wal {
    file: File,
    len: u64,
}

/// Single-writer, multi-reader store.
pub struct Store {
    dir: PathBuf,
    snapshot: RwLock<Arc<StoreSnapshot>>,
    writer: Mutex<Wal>,
}

impl Store {
    /// Opens (or creates) the store in `dir`, replaying the log over the
    /// latest compacted generation. A torn final log line is discarded.
    pub fn open(dir: impl AsRef<Path>) -> Result<Store, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let mut state = match fs::read_to_string(dir.join(CURRENT)) {
            Ok(name) => load_generation(&dir.join(name.trim()))?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => StoreSnapshot::default(),
            Err(e) => return Err(e.into()),
        };

        let path = dir.join(WAL);
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(&path)?;
        let mut good_len = 0u64;
        {
            let mut reader = BufReader::new(&mut file);
            reader.seek(SeekFrom::Start(0))?;
            let mut line = String::new();
            loop {
                line.clear();
                let n = reader.read_line(&mut line)?;
                if n == 0 {
                    break;
                }
                let complete = line.ends_with('\n');
                let entry: Entry = match serde_json::from_str(line.trim_end()) {
                    Ok(entry) if complete => entry,
                    Ok(_) | Err(_) if !complete => break,
                    Err(e) => return Err(StoreError::Corrupt(format!("log entry after byte {good_len}: {e}"))),
                    Ok(_) => unreachable!(),
                };
                good_len += n as u64;
                if entry.seq <= state.seq {
                    continue;
                }
                if entry.seq != state.seq + 1 {
                    return Err(StoreError::Corrupt(format!(
                        "log jumps from {} to {}",
                        state.seq, entry.seq
                    )));
                }
                apply(&mut state, entry.op)?;
                state.seq = entry.seq;
            }
        }
        if file.metadata()?.len() != good_len {
            file.set_len(good_len)?;
            file.sync_all()?;
        }
        Ok(Store {
            dir,
            snapshot: RwLock::new(Arc::new(state)),
            writer: Mutex::new(Wal { file, len: good_len }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn snapshot(&self) -> Arc<StoreSnapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    /// Runs `decide` against the current state while holding the writer
    /// lock. An operation it returns is logged durably, then published in
    /// a new snapshot.
    pub fn write<T, E>(&self, decide: impl FnOnce(&StoreSnapshot) -> Result<(Option<Op>, T), E>) -> Result<T, E>
    where
        E: From<StoreError>,
    {
        let mut wal = self.writer.lock().expect("writer lock");
        let current = self.snapshot();
        let (op, out) = decide(&current)?;
        let Some(op) = op else { return Ok(out) };

        let entry = Entry {
            seq: current.seq + 1,
            op,
        };
        let mut line = serde_json::to_string(&entry).map_err(|e| StoreError::Corrupt(e.to_string()))?;
        line.push('\n');
        // Apply exactly what a replay will read back.
        let logged: Entry = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt(e.to_string()))?;
        let mut next = (*current).clone();
        apply(&mut next, logged.op)?;
        next.seq = entry.seq;

        let appended = wal.file.write_all(line.as_bytes()).and_then(|_| wal.file.sync_data());
        if let Err(e) = appended {
            let _ = wal.file.set_len(wal.len);
            return Err(StoreError::Io(e).into());
        }
        wal.len += line.len() as u64;
        *self.snapshot.write().expect("snapshot lock") = Arc::new(next);
        Ok(out)
    }

    /// Writes the current state as a new generation and empties the log.
    pub fn compact(&self) -> Result<u64, StoreError> {
        let mut wal = self.writer.lock().expect("writer lock");
        let state = self.snapshot();
        let name = format!("compacted-{}", state.seq);
        let staging = self.dir.join(format!("{name}.tmp"));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        write_generation(&staging, &state)?;
        let target = self.dir.join(&name);
        if target.exists() {
            fs::remove_dir_all(&target)?;
        }
        fs::rename(&staging, &target)?;
        write_atomically(&self.dir.join(CURRENT), name.as_bytes())?;
        sync_dir(&self.dir)?;

        wal.file.set_len(0)?;
        wal.file.sync_all()?;
        wal.len = 0;

        for old in fs::read_dir(&self.dir)? {
            let old = old?;
            let file_name = old.file_name();
            let file_name = file_name.to_string_lossy();
            if file_name.starts_with("compacted-") && file_name != name {
                fs::remove_dir_all(old.path())?;
            }
        }
        Ok(state.seq)
    }
}

/// File-name-safe form of an id.
fn encode(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for b in id.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}

fn write_atomically(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path)
}

fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut f = File::create(path)?;
    f.write_all(bytes)?;
    f.sync_all()
}

fn sync_dir(dir: &Path) -> io::Result<()> {
    File::open(dir)?.sync_all()
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    serde_json::to_vec_pretty(value).expect("state serializes")
}

fn write_generation(dir: &Path, state: &StoreSnapshot) -> Result<(), StoreError> {
    for kind in ["organizations", "classes", "specs", "vos"] {
        fs::create_dir_all(dir.join(kind))?;
    }
    for (id, versions) in &state.organizations {
        write_file(&dir.join("organizations").join(format!("{}.json", encode(id.as_str()))), &json(versions))?;
    }
    for (name, class) in &state.classes {
        write_file(&dir.join("classes").join(format!("{}.ocls", encode(name))), print_class(class).as_bytes())?;
    }
    for (id, spec) in &state.specs {
        write_file(&dir.join("specs").join(format!("{}.json", encode(id))), &json(spec))?;
    }
    for (id, vo) in &state.vos {
        write_file(&dir.join("vos").join(format!("{}.json", encode(id))), &json(vo))?;
    }
    write_file(&dir.join("network.json"), &json(&state.network))?;
    write_file(&dir.join("seq"), state.seq.to_string().as_bytes())?;
    for kind in ["organizations", "classes", "specs", "vos"] {
        sync_dir(&dir.join(kind))?;
    }
    sync_dir(dir)?;
    Ok(())
}

fn files(dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir)? {
        paths.push(entry?.path());
    }
    paths.sort();
    Ok(paths)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| StoreError::Corrupt(format!("{}: {e}", path.display())))
}

fn load_generation(dir: &Path) -> Result<StoreSnapshot, StoreError> {
    let mut state = StoreSnapshot {
        seq: fs::read_to_string(dir.join("seq"))?
            .trim()
            .parse()
            .map_err(|e| StoreError::Corrupt(format!("generation sequence: {e}")))?,
        network: read_json(&dir.join("network.json"))?,
        ..StoreSnapshot::default()
    };
    for path in files(&dir.join("organizations"))? {
        let versions: Vec<OrganizationRecord> = read_json(&path)?;
        if let Some(first) = versions.first() {
            state.organizations.insert(first.org_id().clone(), versions);
        }
    }
    for path in files(&dir.join("classes"))? {
        let text = fs::read_to_string(&path)?;
        let class = parse_class(&text).map_err(|e| StoreError::Corrupt(format!("{}: {e}", path.display())))?;
        state.classes.insert(class.name.clone(), class);
    }
    for path in files(&dir.join("specs"))? {
        let spec: SpecDocument = read_json(&path)?;
        state.specs.insert(spec.id.clone(), spec);
    }
    for path in files(&dir.join("vos"))? {
        let vo: VoRecord = read_json(&path)?;
        state.vos.insert(vo.id.clone(), vo);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use vobe_core::fixtures;

    fn put(store: &Store, record: OrganizationRecord) {
        store
            .write(|s| {
                let mut r = record;
                r.organization_profile.version = s.organizations.get(r.org_id()).map_or(0, |v| v.len()) as u32 + 1;
                Ok::<_, StoreError>((Some(Op::PutRecord(r)), ()))
            })
            .unwrap();
    }

    #[test]
    fn replays_after_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        put(&store, fixtures::software_dev());
        put(&store, fixtures::software_dev());
        let before = store.snapshot().export_json();
        drop(store);
        let again = Store::open(dir.path()).unwrap();
        assert_eq!(again.snapshot().export_json(), before);
        assert_eq!(again.snapshot().organizations["SoftwareDev"].len(), 2);
    }

    #[test]
    fn compaction_preserves_state() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        put(&store, fixtures::software_dev());
        store
            .write(|_| {
                Ok::<_, StoreError>((
                    Some(Op::PutClass {
                        name: "Polish Software Company".into(),
                        text: fixtures::POLISH_SOFTWARE_COMPANY_OCLS.into(),
                    }),
                    (),
                ))
            })
            .unwrap();
        assert_eq!(store.compact().unwrap(), 2);
        put(&store, fixtures::softis());
        let before = store.snapshot().export_json();
        drop(store);
        let again = Store::open(dir.path()).unwrap();
        assert_eq!(again.snapshot().export_json(), before);
        assert_eq!(again.snapshot().seq, 3);
        assert_eq!(fs::read_to_string(dir.path().join(CURRENT)).unwrap(), "compacted-2");
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        put(&store, fixtures::software_dev());
        let before = store.snapshot().export_json();
        drop(store);
        let mut f = OpenOptions::new().append(true).open(dir.path().join(WAL)).unwrap();
        f.write_all(b"{\"seq\":2,\"op\":{\"putNet").unwrap();
        drop(f);
        let again = Store::open(dir.path()).unwrap();
        assert_eq!(again.snapshot().export_json(), before);
        put(&again, fixtures::softis());
        drop(again);
        assert_eq!(Store::open(dir.path()).unwrap().snapshot().seq, 2);
    }

    #[test]
    fn snapshots_are_immutable() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        let before = store.snapshot();
        put(&store, fixtures::software_dev());
        assert!(before.organizations.is_empty());
        assert_eq!(store.snapshot().organizations.len(), 1);
    }

    #[test]
    fn ids_become_safe_file_names() {
        assert_eq!(encode("Polish Software Company"), "Polish%20Software%20Company");
        assert_eq!(encode("../x"), "%2E%2E%2Fx");
    }
}
