//! Binary value encoding for historical payloads.
//!
//! Every value starts with a format version byte and a payload tag; strings
//! and collections are length-prefixed with big-endian `u32`.

use std::collections::BTreeSet;

use crate::hist::HistError;
use crate::model::{Gid, LabelSet, PropertyMap, Value};
use crate::state::{
    AdjDelta, AdjEntry, Adjacency, Direction, EdgeProps, PartDelta, PartState, PropsDelta, VertexProps,
};

pub const FORMAT_VERSION: u8 = 1;

const TAG_VERTEX: u8 = 0x10;
const TAG_EDGE: u8 = 0x11;
const TAG_ADJ: u8 = 0x12;
const TAG_VERTEX_DELTA: u8 = 0x20;
const TAG_EDGE_DELTA: u8 = 0x21;
const TAG_ADJ_DELTA: u8 = 0x22;

const V_NULL: u8 = 0;
const V_BOOL: u8 = 1;
const V_INT: u8 = 2;
const V_FLOAT: u8 = 3;
const V_STR: u8 = 4;

/// A decoded historical payload.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Anchor(PartState),
    Delta(PartDelta),
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, b: u8) {
        self.0.push(b);
    }

    fn u32(&mut self, n: usize) {
        self.0.extend_from_slice(&(n as u32).to_be_bytes());
    }

    fn u64(&mut self, n: u64) {
        self.0.extend_from_slice(&n.to_be_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }

    fn value(&mut self, v: &Value) {
        match v {
            Value::Null => self.u8(V_NULL),
            Value::Bool(b) => {
                self.u8(V_BOOL);
                self.u8(*b as u8);
            }
            Value::Int(i) => {
                self.u8(V_INT);
                self.u64(*i as u64);
            }
            Value::Float(f) => {
                self.u8(V_FLOAT);
                self.u64(f.to_bits());
            }
            Value::Str(s) => {
                self.u8(V_STR);
                self.str(s);
            }
        }
    }

    fn props(&mut self, p: &PropertyMap) {
        self.u32(p.len());
        for (k, v) in p {
            self.str(k);
            self.value(v);
        }
    }

    fn labels(&mut self, l: &LabelSet) {
        self.u32(l.len());
        for s in l {
            self.str(s);
        }
    }

    fn entries<'a>(&mut self, it: impl ExactSizeIterator<Item = &'a AdjEntry>) {
        self.u32(it.len());
        for e in it {
            self.u64(e.edge.0);
            self.u64(e.neighbor.0);
        }
    }

    fn dir_entries(&mut self, list: &[(Direction, AdjEntry)]) {
        self.u32(list.len());
        for (d, e) in list {
            self.u8(matches!(d, Direction::In) as u8);
            self.u64(e.edge.0);
            self.u64(e.neighbor.0);
        }
    }

    fn props_delta(&mut self, d: &PropsDelta) {
        self.u32(d.set.len());
        for (k, v) in &d.set {
            self.str(k);
            self.value(v);
        }
        self.u32(d.removed.len());
        for k in &d.removed {
            self.str(k);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn malformed(msg: impl Into<String>) -> HistError {
    HistError::MalformedValue(msg.into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], HistError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.buf.len())
            .ok_or_else(|| malformed("truncated payload"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, HistError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, HistError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64, HistError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, HistError> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| malformed("invalid utf-8"))
    }

    fn value(&mut self) -> Result<Value, HistError> {
        Ok(match self.u8()? {
            V_NULL => Value::Null,
            V_BOOL => Value::Bool(self.u8()? != 0),
            V_INT => Value::Int(self.u64()? as i64),
            V_FLOAT => Value::Float(f64::from_bits(self.u64()?)),
            V_STR => Value::Str(self.str()?),
            t => return Err(malformed(format!("value tag {t}"))),
        })
    }

    fn props(&mut self) -> Result<PropertyMap, HistError> {
        let n = self.u32()?;
        let mut m = PropertyMap::new();
        for _ in 0..n {
            let k = self.str()?;
            m.insert(k, self.value()?);
        }
        Ok(m)
    }

    fn labels(&mut self) -> Result<LabelSet, HistError> {
        let n = self.u32()?;
        (0..n).map(|_| self.str()).collect()
    }

    fn entry(&mut self) -> Result<AdjEntry, HistError> {
        Ok(AdjEntry {
            edge: Gid(self.u64()?),
            neighbor: Gid(self.u64()?),
        })
    }

    fn entries(&mut self) -> Result<BTreeSet<AdjEntry>, HistError> {
        let n = self.u32()?;
        (0..n).map(|_| self.entry()).collect()
    }

    fn dir_entries(&mut self) -> Result<Vec<(Direction, AdjEntry)>, HistError> {
        let n = self.u32()?;
        (0..n)
            .map(|_| {
                let d = if self.u8()? == 0 { Direction::Out } else { Direction::In };
                Ok((d, self.entry()?))
            })
            .collect()
    }

    fn props_delta(&mut self) -> Result<PropsDelta, HistError> {
        let n = self.u32()?;
        let mut set = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let k = self.str()?;
            set.push((k, self.value()?));
        }
        let n = self.u32()?;
        let removed = (0..n).map(|_| self.str()).collect::<Result<_, _>>()?;
        Ok(PropsDelta { set, removed })
    }

    fn opt<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, HistError>) -> Result<Option<T>, HistError> {
        match self.u8()? {
            0 => Ok(None),
            _ => f(self).map(Some),
        }
    }
}

pub fn encode_state(state: &PartState) -> Vec<u8> {
    let mut w = Writer::default();
    w.u8(FORMAT_VERSION);
    match state {
        PartState::Vertex(v) => {
            w.u8(TAG_VERTEX);
            w.labels(&v.labels);
            w.props(&v.props);
        }
        PartState::Edge(e) => {
            w.u8(TAG_EDGE);
            w.str(&e.edge_type);
            w.props(&e.props);
        }
        PartState::Adj(a) => {
            w.u8(TAG_ADJ);
            w.entries(a.incoming.iter());
            w.entries(a.outgoing.iter());
        }
    }
    w.0
}

pub fn encode_delta(delta: &PartDelta) -> Vec<u8> {
    let mut w = Writer::default();
    w.u8(FORMAT_VERSION);
    match delta {
        PartDelta::Vertex { labels, props } => {
            w.u8(TAG_VERTEX_DELTA);
            match labels {
                Some(l) => {
                    w.u8(1);
                    w.labels(l);
                }
                None => w.u8(0),
            }
            w.props_delta(props);
        }
        PartDelta::Edge { edge_type, props } => {
            w.u8(TAG_EDGE_DELTA);
            match edge_type {
                Some(t) => {
                    w.u8(1);
                    w.str(t);
                }
                None => w.u8(0),
            }
            w.props_delta(props);
        }
        PartDelta::Adj(d) => {
            w.u8(TAG_ADJ_DELTA);
            w.dir_entries(&d.added);
            w.dir_entries(&d.removed);
        }
    }
    w.0
}

pub fn decode(bytes: &[u8]) -> Result<Payload, HistError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let version = r.u8()?;
    if version != FORMAT_VERSION {
        return Err(malformed(format!("format version {version}")));
    }
    let payload = match r.u8()? {
        TAG_VERTEX => Payload::Anchor(PartState::Vertex(VertexProps {
            labels: r.labels()?,
            props: r.props()?,
        })),
        TAG_EDGE => Payload::Anchor(PartState::Edge(EdgeProps {
            edge_type: r.str()?,
            props: r.props()?,
        })),
        TAG_ADJ => Payload::Anchor(PartState::Adj(Adjacency {
            incoming: r.entries()?,
            outgoing: r.entries()?,
        })),
        TAG_VERTEX_DELTA => Payload::Delta(PartDelta::Vertex {
            labels: r.opt(Reader::labels)?,
            props: r.props_delta()?,
        }),
        TAG_EDGE_DELTA => Payload::Delta(PartDelta::Edge {
            edge_type: r.opt(Reader::str)?,
            props: r.props_delta()?,
        }),
        TAG_ADJ_DELTA => Payload::Delta(PartDelta::Adj(AdjDelta {
            added: r.dir_entries()?,
            removed: r.dir_entries()?,
        })),
        t => return Err(malformed(format!("payload tag {t:#04x}"))),
    };
    if r.pos != bytes.len() {
        return Err(malformed("trailing bytes"));
    }
    Ok(payload)
}
