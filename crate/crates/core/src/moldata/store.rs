//! Two-level graph store: binary records on disk, materialised graphs in memory.
//!
//! Record layout, little-endian throughout:
//!
//! ```text
//! magic        4 bytes  "MPK1"
//! record_len   u32      total record size in bytes, magic and checksum included
//! atom_count   u32
//! edge_count   u32
//! r_cut        f64
//! atomic nums  u8  x atom_count
//! positions    f64 x 3 x atom_count
//! edges        u32 x 2 x edge_count   (source, target)
//! distances    f64 x edge_count
//! checksum     u32      CRC32 of every preceding byte of the record
//! ```
//!
//! Records are appended to `graphs.mpk`. Identifiers and labels are not part
//! of the record and live in the `index.json` sidecar next to it.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{MolError, MolecularGraph, Molecule};

pub const RECORD_MAGIC: &[u8; 4] = b"MPK1";
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8;
const RECORDS_FILE: &str = "graphs.mpk";
const INDEX_FILE: &str = "index.json";

/// Serialises a graph into one binary record.
pub fn encode_record(g: &MolecularGraph) -> Result<Vec<u8>, MolError> {
    let n = g.num_nodes();
    let e = g.num_edges();
    let len = HEADER_LEN + n + 24 * n + 8 * e + 8 * e + 4;
    let too_large = || MolError::TooLarge(format!("graph `{}`", g.id()));
    let len32 = u32::try_from(len).map_err(|_| too_large())?;

    let mut buf = Vec::with_capacity(len);
    buf.extend_from_slice(RECORD_MAGIC);
    buf.extend_from_slice(&len32.to_le_bytes());
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(e as u32).to_le_bytes());
    buf.extend_from_slice(&g.r_cut.to_le_bytes());
    buf.extend_from_slice(&g.molecule.atomic_numbers);
    for p in &g.molecule.positions {
        for c in p {
            buf.extend_from_slice(&c.to_le_bytes());
        }
    }
    for &(s, t) in &g.edges {
        buf.extend_from_slice(&s.to_le_bytes());
        buf.extend_from_slice(&t.to_le_bytes());
    }
    for d in &g.distances {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    debug_assert_eq!(buf.len(), len);
    Ok(buf)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Option<[u8; N]> {
        let bytes = self.buf.get(self.pos..self.pos + N)?;
        self.pos += N;
        bytes.try_into().ok()
    }

    fn u32(&mut self) -> Option<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn f64(&mut self) -> Option<f64> {
        self.take().map(f64::from_le_bytes)
    }
}

/// Decodes one record. `id` and `label` come from the store index.
pub fn decode_record(bytes: &[u8], id: &str, label: Option<f64>) -> Result<MolecularGraph, MolError> {
    let corrupt = |message: &str| MolError::Integrity {
        id: id.to_string(),
        message: message.to_string(),
    };
    if bytes.len() < HEADER_LEN + 4 || &bytes[..4] != RECORD_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(corrupt("checksum mismatch"));
    }

    let mut r = Reader { buf: body, pos: 4 };
    let truncated = || corrupt("truncated record");
    let record_len = r.u32().ok_or_else(truncated)? as usize;
    if record_len != bytes.len() {
        return Err(corrupt("record length mismatch"));
    }
    let n = r.u32().ok_or_else(truncated)? as usize;
    let e = r.u32().ok_or_else(truncated)? as usize;
    if HEADER_LEN + 25 * n + 16 * e + 4 != record_len {
        return Err(corrupt("counts disagree with record length"));
    }
    let r_cut = r.f64().ok_or_else(truncated)?;
    let atomic_numbers = body[r.pos..r.pos + n].to_vec();
    r.pos += n;
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        let x = r.f64().ok_or_else(truncated)?;
        let y = r.f64().ok_or_else(truncated)?;
        let z = r.f64().ok_or_else(truncated)?;
        positions.push([x, y, z]);
    }
    let mut edges = Vec::with_capacity(e);
    for _ in 0..e {
        let s = r.u32().ok_or_else(truncated)?;
        let t = r.u32().ok_or_else(truncated)?;
        if s as usize >= n || t as usize >= n {
            return Err(corrupt("edge endpoint out of range"));
        }
        edges.push((s, t));
    }
    let mut distances = Vec::with_capacity(e);
    for _ in 0..e {
        distances.push(r.f64().ok_or_else(truncated)?);
    }

    let molecule = Molecule::new(id, atomic_numbers, positions, label).map_err(|err| {
        MolError::Integrity {
            id: id.to_string(),
            message: err.to_string(),
        }
    })?;
    Ok(MolecularGraph {
        molecule,
        edges,
        distances,
        r_cut,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct IndexEntry {
    offset: u64,
    len: u32,
    label: Option<f64>,
}

/// Observable access counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StoreCounters {
    pub disk_reads: u64,
    pub cache_hits: u64,
}

/// Graphs persisted as binary records and cached in memory on first access.
///
/// Safe to share across threads; concurrent first loads of the same id may
/// both hit disk and produce identical graphs.
pub struct GraphStore {
    dir: PathBuf,
    index: RwLock<BTreeMap<String, IndexEntry>>,
    cache: RwLock<HashMap<String, Arc<MolecularGraph>>>,
    writer: Mutex<()>,
    disk_reads: AtomicU64,
    cache_hits: AtomicU64,
}

impl GraphStore {
    /// Opens (or creates) a store rooted at `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, MolError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| MolError::io(&dir, e))?;
        let index_path = dir.join(INDEX_FILE);
        let index = if index_path.exists() {
            let text = fs::read_to_string(&index_path).map_err(|e| MolError::io(&index_path, e))?;
            serde_json::from_str(&text).map_err(|e| MolError::Integrity {
                id: INDEX_FILE.into(),
                message: e.to_string(),
            })?
        } else {
            BTreeMap::new()
        };
        Ok(GraphStore {
            dir,
            index: RwLock::new(index),
            cache: RwLock::new(HashMap::new()),
            writer: Mutex::new(()),
            disk_reads: AtomicU64::new(0),
            cache_hits: AtomicU64::new(0),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn records_path(&self) -> PathBuf {
        self.dir.join(RECORDS_FILE)
    }

    pub fn put(&self, g: &MolecularGraph) -> Result<(), MolError> {
        let record = encode_record(g)?;
        let _guard = self.writer.lock().unwrap();
        let path = self.records_path();
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| MolError::io(&path, e))?;
        let offset = file.seek(SeekFrom::End(0)).map_err(|e| MolError::io(&path, e))?;
        file.write_all(&record).map_err(|e| MolError::io(&path, e))?;

        let snapshot = {
            let mut index = self.index.write().unwrap();
            index.insert(
                g.id().to_string(),
                IndexEntry {
                    offset,
                    len: record.len() as u32,
                    label: g.molecule.label,
                },
            );
            serde_json::to_string(&*index).expect("index serialises")
        };
        self.cache.write().unwrap().remove(g.id());
        let index_path = self.dir.join(INDEX_FILE);
        fs::write(&index_path, snapshot).map_err(|e| MolError::io(&index_path, e))
    }

    pub fn get(&self, id: &str) -> Result<Arc<MolecularGraph>, MolError> {
        if let Some(g) = self.cache.read().unwrap().get(id) {
            self.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Arc::clone(g));
        }
        let entry = *self
            .index
            .read()
            .unwrap()
            .get(id)
            .ok_or_else(|| MolError::NotFound(id.to_string()))?;

        let path = self.records_path();
        let mut file = File::open(&path).map_err(|e| MolError::io(&path, e))?;
        file.seek(SeekFrom::Start(entry.offset))
            .map_err(|e| MolError::io(&path, e))?;
        let mut bytes = vec![0u8; entry.len as usize];
        file.read_exact(&mut bytes).map_err(|e| MolError::io(&path, e))?;
        self.disk_reads.fetch_add(1, Ordering::Relaxed);

        let graph = Arc::new(decode_record(&bytes, id, entry.label)?);
        let mut cache = self.cache.write().unwrap();
        Ok(Arc::clone(cache.entry(id.to_string()).or_insert(graph)))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.read().unwrap().contains_key(id)
    }

    pub fn ids(&self) -> Vec<String> {
        self.index.read().unwrap().keys().cloned().collect()
    }

    pub fn counters(&self) -> StoreCounters {
        StoreCounters {
            disk_reads: self.disk_reads.load(Ordering::Relaxed),
            cache_hits: self.cache_hits.load(Ordering::Relaxed),
        }
    }
}
