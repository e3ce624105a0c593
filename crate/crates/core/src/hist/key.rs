//! Fixed-width historical key layout.
//!
//! ```text
//! byte 0      segment   V=0x01 E=0x02 VE=0x03
//! byte 1      kind      anchor=0x01 delta=0x02
//! bytes 2-9   gid       big-endian
//! bytes 10-17 lifespan start, big-endian (0x00.. = -inf)
//! bytes 18-25 lifespan end,   big-endian (0xFF.. = +inf)
//! ```
//!
//! Big-endian fields make byte order agree with `(segment, kind, gid, st, ed)`
//! order, so all versions of one object part are contiguous and sorted by start.

use crate::hist::HistError;
use crate::model::{Gid, Lifespan, Timestamp};
use crate::state::Part;

pub const KEY_LEN: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    V = 0x01,
    E = 0x02,
    Ve = 0x03,
}

impl Segment {
    pub const ALL: [Segment; 3] = [Segment::V, Segment::E, Segment::Ve];

    pub fn of(part: Part) -> Segment {
        match part {
            Part::Vp => Segment::V,
            Part::Ep => Segment::E,
            Part::Ve => Segment::Ve,
        }
    }

    pub fn part(self) -> Part {
        match self {
            Segment::V => Part::Vp,
            Segment::E => Part::Ep,
            Segment::Ve => Part::Ve,
        }
    }

    fn from_byte(b: u8) -> Option<Segment> {
        match b {
            0x01 => Some(Segment::V),
            0x02 => Some(Segment::E),
            0x03 => Some(Segment::Ve),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Segment::V => "V",
            Segment::E => "E",
            Segment::Ve => "VE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Anchor = 0x01,
    Delta = 0x02,
}

impl Kind {
    fn from_byte(b: u8) -> Option<Kind> {
        match b {
            0x01 => Some(Kind::Anchor),
            0x02 => Some(Kind::Delta),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HistKey {
    pub segment: Segment,
    pub kind: Kind,
    pub gid: Gid,
    pub lifespan: Lifespan,
}

impl HistKey {
    pub fn encode(&self) -> [u8; KEY_LEN] {
        raw_key(self.segment, self.kind, self.gid, self.lifespan.st, self.lifespan.ed)
    }

    pub fn decode(bytes: &[u8]) -> Result<HistKey, HistError> {
        if bytes.len() != KEY_LEN {
            return Err(HistError::MalformedKey(format!(
                "expected {KEY_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        let segment = Segment::from_byte(bytes[0])
            .ok_or_else(|| HistError::MalformedKey(format!("segment byte {:#04x}", bytes[0])))?;
        let kind = Kind::from_byte(bytes[1])
            .ok_or_else(|| HistError::MalformedKey(format!("kind byte {:#04x}", bytes[1])))?;
        let word = |i: usize| u64::from_be_bytes(bytes[i..i + 8].try_into().unwrap());
        let (st, ed) = (Timestamp(word(10)), Timestamp(word(18)));
        if st >= ed {
            return Err(HistError::MalformedKey(format!("empty lifespan [{st}, {ed})")));
        }
        Ok(HistKey {
            segment,
            kind,
            gid: Gid(word(2)),
            lifespan: Lifespan { st, ed },
        })
    }
}

/// Key bytes without lifespan validation; used for range bounds.
pub(crate) fn raw_key(segment: Segment, kind: Kind, gid: Gid, st: Timestamp, ed: Timestamp) -> [u8; KEY_LEN] {
    let mut out = [0u8; KEY_LEN];
    out[0] = segment as u8;
    out[1] = kind as u8;
    out[2..10].copy_from_slice(&gid.0.to_be_bytes());
    out[10..18].copy_from_slice(&st.0.to_be_bytes());
    out[18..26].copy_from_slice(&ed.0.to_be_bytes());
    out
}

/// The `(segment, kind, gid)` prefix shared by one object's anchors or deltas.
pub fn prefix(segment: Segment, kind: Kind, gid: Gid) -> [u8; 10] {
    let mut out = [0u8; 10];
    out[0] = segment as u8;
    out[1] = kind as u8;
    out[2..10].copy_from_slice(&gid.0.to_be_bytes());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_example() {
        let k = HistKey {
            segment: Segment::V,
            kind: Kind::Anchor,
            gid: Gid(2),
            lifespan: Lifespan::new(Timestamp(100), Timestamp(160)),
        };
        let b = k.encode();
        assert_eq!(b.len(), 26);
        assert_eq!(&b[..2], &[0x01, 0x01]);
        assert_eq!(&b[2..10], &[0, 0, 0, 0, 0, 0, 0, 2]);
        assert_eq!(&b[10..18], &100u64.to_be_bytes());
        assert_eq!(&b[18..26], &160u64.to_be_bytes());
        assert_eq!(HistKey::decode(&b).unwrap(), k);
    }

    #[test]
    fn infinity_sentinels() {
        let k = HistKey {
            segment: Segment::Ve,
            kind: Kind::Delta,
            gid: Gid(1),
            lifespan: Lifespan::universal(),
        };
        let b = k.encode();
        assert_eq!(&b[10..18], &[0u8; 8]);
        assert_eq!(&b[18..26], &[0xFFu8; 8]);
    }

    #[test]
    fn malformed_keys_are_rejected() {
        assert!(HistKey::decode(&[1u8; 25]).is_err());
        let mut b = raw_key(Segment::E, Kind::Anchor, Gid(1), Timestamp(1), Timestamp(2));
        b[0] = 0x07;
        assert!(HistKey::decode(&b).is_err());
        b[0] = 0x02;
        b[1] = 0x00;
        assert!(HistKey::decode(&b).is_err());
        let empty = raw_key(Segment::E, Kind::Anchor, Gid(1), Timestamp(5), Timestamp(5));
        assert!(HistKey::decode(&empty).is_err());
    }

    #[test]
    fn start_orders_bytes() {
        let a = raw_key(Segment::V, Kind::Delta, Gid(9), Timestamp(5), Timestamp::INF);
        let b = raw_key(Segment::V, Kind::Delta, Gid(9), Timestamp(6), Timestamp(7));
        assert!(a < b);
    }

    fn arb_key() -> impl Strategy<Value = HistKey> {
        (
            prop_oneof![Just(Segment::V), Just(Segment::E), Just(Segment::Ve)],
            prop_oneof![Just(Kind::Anchor), Just(Kind::Delta)],
            any::<u64>(),
            any::<u64>(),
            any::<u64>(),
        )
            .prop_filter_map("non-empty lifespan", |(s, k, g, a, b)| {
                (a < b).then(|| HistKey {
                    segment: s,
                    kind: k,
                    gid: Gid(g),
                    lifespan: Lifespan::new(Timestamp(a), Timestamp(b)),
                })
            })
    }

    proptest! {
        #[test]
        fn roundtrip(k in arb_key()) {
            prop_assert_eq!(HistKey::decode(&k.encode()).unwrap(), k);
        }

        #[test]
        fn byte_order_is_semantic_order(a in arb_key(), b in arb_key()) {
            prop_assert_eq!(a.encode().cmp(&b.encode()), a.cmp(&b));
        }
    }
}
