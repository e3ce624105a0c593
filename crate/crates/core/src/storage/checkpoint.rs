//! Checkpoint of the committed in-place state of a quiescent current store.
//!
//! History lives in the historical store; this file only carries the
//! current version of every live object so a reopened database resumes
//! where it stopped. Layout: magic, clock, next gid, object records, CRC32.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::hist::codec::{self, Payload};
use crate::model::{Gid, Timestamp};
use crate::state::PartState;
use crate::storage::ObjectKind;

const MAGIC: &[u8; 5] = b"TGCP\x01";

pub(crate) struct CheckpointObject {
    pub gid: Gid,
    pub kind: ObjectKind,
    pub main: (Timestamp, PartState),
    pub adj: Option<(Timestamp, PartState)>,
}

pub(crate) struct Checkpoint {
    pub clock: Timestamp,
    pub next_gid: u64,
    pub objects: Vec<CheckpointObject>,
}

fn put_part(out: &mut Vec<u8>, (st, state): &(Timestamp, PartState)) {
    out.extend_from_slice(&st.0.to_be_bytes());
    let bytes = codec::encode_state(state);
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(&bytes);
}

pub(crate) fn write(path: &Path, cp: &Checkpoint) -> io::Result<()> {
    let mut out = MAGIC.to_vec();
    out.extend_from_slice(&cp.clock.0.to_be_bytes());
    out.extend_from_slice(&cp.next_gid.to_be_bytes());
    out.extend_from_slice(&(cp.objects.len() as u64).to_be_bytes());
    for o in &cp.objects {
        out.extend_from_slice(&o.gid.0.to_be_bytes());
        match o.kind {
            ObjectKind::Vertex => out.push(0),
            ObjectKind::Edge { src, dst } => {
                out.push(1);
                out.extend_from_slice(&src.0.to_be_bytes());
                out.extend_from_slice(&dst.0.to_be_bytes());
            }
        }
        put_part(&mut out, &o.main);
        match &o.adj {
            Some(a) => {
                out.push(1);
                put_part(&mut out, a);
            }
            None => out.push(0),
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_be_bytes());
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&out)?;
        f.sync_all()?;
    }
    fs::rename(tmp, path)
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> io::Result<&'a [u8]> {
        if self.0.len() < n {
            return Err(bad("truncated checkpoint"));
        }
        let (a, b) = self.0.split_at(n);
        self.0 = b;
        Ok(a)
    }

    fn u8(&mut self) -> io::Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> io::Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn part(&mut self) -> io::Result<(Timestamp, PartState)> {
        let st = Timestamp(self.u64()?);
        let n = u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as usize;
        match codec::decode(self.take(n)?) {
            Ok(Payload::Anchor(s)) => Ok((st, s)),
            _ => Err(bad("checkpoint holds an invalid part state")),
        }
    }
}

fn bad(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}

/// Reads a checkpoint; `Ok(None)` when none was written yet.
pub(crate) fn read(path: &Path) -> io::Result<Option<Checkpoint>> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e),
    };
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_be_bytes(crc.try_into().unwrap()) {
        return Err(bad("checkpoint checksum mismatch"));
    }
    let mut c = Cursor(&body[MAGIC.len()..]);
    let clock = Timestamp(c.u64()?);
    let next_gid = c.u64()?;
    let count = c.u64()?;
    let mut objects = Vec::new();
    for _ in 0..count {
        let gid = Gid(c.u64()?);
        let kind = match c.u8()? {
            0 => ObjectKind::Vertex,
            1 => ObjectKind::Edge {
                src: Gid(c.u64()?),
                dst: Gid(c.u64()?),
            },
            _ => return Err(bad("unknown object kind")),
        };
        let main = c.part()?;
        let adj = match c.u8()? {
            0 => None,
            _ => Some(c.part()?),
        };
        objects.push(CheckpointObject { gid, kind, main, adj });
    }
    if !c.0.is_empty() {
        return Err(bad("trailing bytes in checkpoint"));
    }
    Ok(Some(Checkpoint {
        clock,
        next_gid,
        objects,
    }))
}
