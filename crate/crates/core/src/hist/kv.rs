//! Ordered key-value storage backing the historical store.
//!
//! [`LogKv`] keeps an in-memory ordered index and, when given a directory,
//! persists every batch to an append-only record log:
//!
//! ```text
//! key_len: u32 BE | key | val_len: u32 BE | value | crc32: u32 BE
//! ```
//!
//! A `val_len` of `u32::MAX` (with no value bytes) marks a deletion. The CRC
//! covers everything before it. On open, records are replayed until the first
//! torn or corrupt record, and the file is truncated there. Compaction rewrites
//! the live entries into a fresh log once dead records dominate.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::ops::Bound;
use std::path::{Path, PathBuf};

use log_file::*;

const TOMBSTONE: u32 = u32::MAX;
const LOG_NAME: &str = "history.log";

pub enum BatchOp {
    Put(Vec<u8>, Vec<u8>),
    Delete(Vec<u8>),
}

pub type KvIter<'a> = Box<dyn DoubleEndedIterator<Item = (&'a [u8], &'a [u8])> + 'a>;

/// Byte-ordered map with atomic batch writes and range scans.
pub trait OrderedKv: Send + Sync {
    fn get(&self, key: &[u8]) -> Option<&[u8]>;

    /// Applies all operations; readers never observe a partial batch because
    /// callers hold the store's write lock for the duration.
    fn write_batch(&mut self, batch: Vec<BatchOp>) -> io::Result<()>;

    /// Entries with keys in the given bounds, ascending; reverse for descending.
    fn range<'a>(&'a self, lo: Bound<&[u8]>, hi: Bound<&[u8]>) -> KvIter<'a>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

mod log_file {
    use super::*;

    pub(super) fn encode_record(key: &[u8], value: Option<&[u8]>, out: &mut Vec<u8>) {
        let start = out.len();
        out.extend_from_slice(&(key.len() as u32).to_be_bytes());
        out.extend_from_slice(key);
        match value {
            Some(v) => {
                out.extend_from_slice(&(v.len() as u32).to_be_bytes());
                out.extend_from_slice(v);
            }
            None => out.extend_from_slice(&TOMBSTONE.to_be_bytes()),
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_be_bytes());
    }

    /// Replays records into `map`; returns the length of the valid prefix.
    pub(super) fn replay(buf: &[u8], map: &mut BTreeMap<Vec<u8>, Vec<u8>>) -> usize {
        let mut pos = 0;
        let word = |p: usize| -> Option<u32> {
            buf.get(p..p + 4).map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        };
        while let Some(klen) = word(pos) {
            let kstart = pos + 4;
            let kend = kstart + klen as usize;
            let Some(vlen) = word(kend) else { break };
            let vstart = kend + 4;
            let vend = if vlen == TOMBSTONE { vstart } else { vstart + vlen as usize };
            let Some(crc) = word(vend) else { break };
            if crc32fast::hash(&buf[pos..vend]) != crc {
                break;
            }
            let key = buf[kstart..kend].to_vec();
            if vlen == TOMBSTONE {
                map.remove(&key);
            } else {
                map.insert(key, buf[vstart..vend].to_vec());
            }
            pos = vend + 4;
        }
        pos
    }
}

pub struct LogKv {
    map: BTreeMap<Vec<u8>, Vec<u8>>,
    log: Option<LogState>,
}

struct LogState {
    dir: PathBuf,
    writer: BufWriter<File>,
    log_bytes: u64,
    sync: bool,
}

impl LogKv {
    pub fn in_memory() -> Self {
        LogKv {
            map: BTreeMap::new(),
            log: None,
        }
    }

    /// Opens (or creates) the log in `dir`, rebuilding the index.
    pub fn open(dir: &Path, sync: bool) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOG_NAME);
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf)?;
        let mut map = BTreeMap::new();
        let valid = replay(&buf, &mut map);
        if valid < buf.len() {
            file.set_len(valid as u64)?;
            file.seek(SeekFrom::End(0))?;
        }
        Ok(LogKv {
            map,
            log: Some(LogState {
                dir: dir.to_path_buf(),
                writer: BufWriter::new(file),
                log_bytes: valid as u64,
                sync,
            }),
        })
    }

    fn live_bytes(&self) -> u64 {
        self.map
            .iter()
            .map(|(k, v)| (k.len() + v.len() + 12) as u64)
            .sum()
    }

    /// Rewrites the log with only live entries.
    pub fn compact(&mut self) -> io::Result<()> {
        let Some(log) = self.log.as_mut() else {
            return Ok(());
        };
        log.writer.flush()?;
        let tmp = log.dir.join(format!("{LOG_NAME}.compact"));
        let mut buf = Vec::new();
        for (k, v) in &self.map {
            encode_record(k, Some(v), &mut buf);
        }
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&buf)?;
            f.sync_all()?;
        }
        let path = log.dir.join(LOG_NAME);
        fs::rename(&tmp, &path)?;
        let file = OpenOptions::new().append(true).open(&path)?;
        log.writer = BufWriter::new(file);
        log.log_bytes = buf.len() as u64;
        Ok(())
    }

    pub fn log_bytes(&self) -> Option<u64> {
        self.log.as_ref().map(|l| l.log_bytes)
    }
}

impl OrderedKv for LogKv {
    fn get(&self, key: &[u8]) -> Option<&[u8]> {
        self.map.get(key).map(Vec::as_slice)
    }

    fn write_batch(&mut self, batch: Vec<BatchOp>) -> io::Result<()> {
        if let Some(log) = self.log.as_mut() {
            let mut buf = Vec::new();
            for op in &batch {
                match op {
                    BatchOp::Put(k, v) => encode_record(k, Some(v), &mut buf),
                    BatchOp::Delete(k) => encode_record(k, None, &mut buf),
                }
            }
            log.writer.write_all(&buf)?;
            log.writer.flush()?;
            if log.sync {
                log.writer.get_ref().sync_data()?;
            }
            log.log_bytes += buf.len() as u64;
        }
        for op in batch {
            match op {
                BatchOp::Put(k, v) => {
                    self.map.insert(k, v);
                }
                BatchOp::Delete(k) => {
                    self.map.remove(&k);
                }
            }
        }
        let needs_compaction = self
            .log
            .as_ref()
            .is_some_and(|l| l.log_bytes > (1 << 20));
        if needs_compaction && self.log_bytes().unwrap_or(0) > 2 * self.live_bytes() {
            self.compact()?;
        }
        Ok(())
    }

    fn range<'a>(&'a self, lo: Bound<&[u8]>, hi: Bound<&[u8]>) -> KvIter<'a> {
        let to_owned = |b: Bound<&[u8]>| match b {
            Bound::Included(k) => Bound::Included(k.to_vec()),
            Bound::Excluded(k) => Bound::Excluded(k.to_vec()),
            Bound::Unbounded => Bound::Unbounded,
        };
        let (lo, hi) = (to_owned(lo), to_owned(hi));
        if let (Bound::Included(a) | Bound::Excluded(a), Bound::Included(b) | Bound::Excluded(b)) = (&lo, &hi) {
            if a > b {
                return Box::new(std::iter::empty());
            }
        }
        Box::new(
            self.map
                .range((lo, hi))
                .map(|(k, v)| (k.as_slice(), v.as_slice())),
        )
    }

    fn len(&self) -> usize {
        self.map.len()
    }
}
