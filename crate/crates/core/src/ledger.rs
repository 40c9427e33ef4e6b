//! Hash-chained, append-only witness ledger.
//!
//! On disk each record is a big-endian `u32` length followed by the record
//! body. The body holds the hashed fields in chain order, then the full
//! context abstraction (needed for replay) and the stored `self_hash`.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channel::CanonicalChannel;
use crate::membrane::{ContextAbstraction, Decision, PolicyRegistry};
use crate::state::ActionId;
use crate::tags::TagSet;

pub type Hash = [u8; 32];

pub const ZERO_HASH: Hash = [0u8; 32];

mod hex32 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(h: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(h))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let bytes = hex::decode(&s).map_err(D::Error::custom)?;
        bytes.try_into().map_err(|_| D::Error::custom("expected 32-byte hex digest"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub seq: u64,
    pub act: ActionId,
    pub decision: Decision,
    pub policy_version: String,
    pub ctx: ContextAbstraction,
    pub tag_set: TagSet,
    #[serde(with = "hex32")]
    pub prev_hash: Hash,
    #[serde(with = "hex32")]
    pub self_hash: Hash,
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_be_bytes());
    out.extend_from_slice(s.as_bytes());
}

impl WitnessRecord {
    pub fn ctx_abs(&self) -> Hash {
        self.ctx.digest()
    }

    /// Canonical preimage: seq, act, decision, policy_version, ctx_abs,
    /// tag_set, prev_hash.
    pub fn preimage(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.seq.to_be_bytes());
        put_str(&mut out, self.act.as_str());
        out.push(self.decision.code());
        put_str(&mut out, &self.policy_version);
        out.extend_from_slice(&self.ctx_abs());
        out.push(self.tag_set.bits());
        out.extend_from_slice(&self.prev_hash);
        out
    }

    pub fn compute_hash(&self) -> Hash {
        Sha256::digest(self.preimage()).into()
    }

    fn encode_body(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.seq.to_be_bytes());
        put_str(&mut out, self.act.as_str());
        out.push(self.decision.code());
        put_str(&mut out, &self.policy_version);
        out.push(self.tag_set.bits());
        out.extend_from_slice(&self.prev_hash);
        let ctx = &self.ctx;
        put_opt(&mut out, ctx.channel.as_deref());
        put_opt(&mut out, ctx.canonical.map(CanonicalChannel::as_str));
        put_opt(&mut out, ctx.risk_class.as_deref());
        put_str(&mut out, &ctx.payload);
        out.extend_from_slice(&(ctx.caps.len() as u32).to_be_bytes());
        for c in &ctx.caps {
            put_str(&mut out, c);
        }
        out.extend_from_slice(&ctx.budget.to_be_bytes());
        put_str(&mut out, &ctx.policy_version);
        out.extend_from_slice(&self.self_hash);
        out
    }

    /// Length-prefixed on-disk form.
    pub fn encode(&self) -> Vec<u8> {
        let body = self.encode_body();
        let mut out = Vec::with_capacity(body.len() + 4);
        out.extend_from_slice(&(body.len() as u32).to_be_bytes());
        out.extend_from_slice(&body);
        out
    }
}

fn put_opt(out: &mut Vec<u8>, s: Option<&str>) {
    match s {
        None => out.push(0),
        Some(s) => {
            out.push(1);
            put_str(out, s);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or("truncated record")?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn hash(&mut self) -> Result<Hash, String> {
        Ok(self.take(32)?.try_into().expect("32 bytes"))
    }

    fn string(&mut self) -> Result<String, String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| "invalid utf-8".to_string())
    }

    fn opt(&mut self) -> Result<Option<String>, String> {
        match self.u8()? {
            0 => Ok(None),
            1 => self.string().map(Some),
            b => Err(format!("invalid option marker {b}")),
        }
    }
}

fn decode_body(body: &[u8]) -> Result<WitnessRecord, String> {
    let mut r = Reader { buf: body, pos: 0 };
    let seq = r.u64()?;
    let act = ActionId(r.string()?);
    let code = r.u8()?;
    let decision = Decision::from_code(code).ok_or_else(|| format!("invalid decision code {code}"))?;
    let policy_version = r.string()?;
    let bits = r.u8()?;
    let tag_set = TagSet::from_bits(bits).ok_or_else(|| format!("invalid tag bits {bits}"))?;
    let prev_hash = r.hash()?;
    let channel = r.opt()?;
    let canonical = match r.opt()? {
        None => None,
        Some(c) => Some(c.parse::<CanonicalChannel>().map_err(|e| e.to_string())?),
    };
    let risk_class = r.opt()?;
    let payload = r.string()?;
    let n = r.u32()? as usize;
    let caps = (0..n).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
    let budget = r.u64()?;
    let ctx_version = r.string()?;
    let self_hash = r.hash()?;
    if r.pos != body.len() {
        return Err("trailing bytes in record".into());
    }
    Ok(WitnessRecord {
        seq,
        act,
        decision,
        policy_version,
        ctx: ContextAbstraction { channel, canonical, risk_class, payload, caps, budget, policy_version: ctx_version },
        tag_set,
        prev_hash,
        self_hash,
    })
}

/// Records decoded from a ledger file. Decoding stops at the first record
/// that cannot be parsed; its index is kept in `error`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedLedger {
    pub records: Vec<WitnessRecord>,
    pub error: Option<(u64, String)>,
}

pub fn decode_ledger(bytes: &[u8]) -> DecodedLedger {
    let mut records = Vec::new();
    let mut pos = 0usize;
    while pos < bytes.len() {
        let index = records.len() as u64;
        let mut r = Reader { buf: bytes, pos };
        let body = r.u32().and_then(|n| r.take(n as usize)).and_then(decode_body);
        match body {
            Ok(rec) => {
                records.push(rec);
                pos = r.pos;
            }
            Err(e) => return DecodedLedger { records, error: Some((index, e)) },
        }
    }
    DecodedLedger { records, error: None }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub ok: bool,
    pub first_bad_seq: Option<u64>,
    pub checked: u64,
}

/// Recomputes every hash and link. A record at position `k` is bad when its
/// seq is not `k`, its `prev_hash` is not the predecessor's `self_hash`, or
/// its `self_hash` does not recompute.
pub fn verify_chain(records: &[WitnessRecord]) -> VerificationReport {
    let mut prev = ZERO_HASH;
    for (k, w) in records.iter().enumerate() {
        let k = k as u64;
        if w.seq != k || w.prev_hash != prev || w.compute_hash() != w.self_hash {
            return VerificationReport { ok: false, first_bad_seq: Some(k), checked: k + 1 };
        }
        prev = w.self_hash;
    }
    VerificationReport { ok: true, first_bad_seq: None, checked: records.len() as u64 }
}

/// Verifies a serialized ledger; an undecodable record counts as bad.
pub fn verify_bytes(bytes: &[u8]) -> VerificationReport {
    let decoded = decode_ledger(bytes);
    let report = verify_chain(&decoded.records);
    match decoded.error {
        Some((index, _)) if report.ok => VerificationReport { ok: false, first_bad_seq: Some(index), checked: index + 1 },
        _ => report,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("out-of-band append refused for act {act:?}: caller does not hold the anchor authority")]
    OutOfBand { act: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("replay unavailable for seq {seq}: policy version {version:?} is not registered")]
    Unavailable { seq: u64, version: String },
    #[error("replay mismatch at seq {seq}: stored {stored}, replayed {replayed}")]
    Mismatch { seq: u64, stored: Decision, replayed: Decision },
}

/// Re-adjudicates the stored context under the stored policy version.
pub fn replay(w: &WitnessRecord, registry: &PolicyRegistry) -> Result<Decision, ReplayError> {
    let mut ctx = w.ctx.clone();
    ctx.policy_version = w.policy_version.clone();
    let replayed = registry
        .adjudicate(&ctx)
        .ok_or_else(|| ReplayError::Unavailable { seq: w.seq, version: w.policy_version.clone() })?;
    if replayed != w.decision {
        return Err(ReplayError::Mismatch { seq: w.seq, stored: w.decision, replayed });
    }
    Ok(replayed)
}

static NEXT_LEDGER_ID: AtomicU64 = AtomicU64::new(1);

/// Capability to append to one specific ledger. Only the executor holds it.
#[derive(Debug)]
pub struct AnchorAuthority {
    ledger_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Incident {
    pub act: String,
    pub reason: String,
}

#[derive(Debug)]
pub struct Ledger {
    id: u64,
    records: Vec<WitnessRecord>,
    incidents: Vec<Incident>,
}

impl Ledger {
    pub fn new() -> (Ledger, AnchorAuthority) {
        let id = NEXT_LEDGER_ID.fetch_add(1, Ordering::Relaxed);
        (Ledger { id, records: Vec::new(), incidents: Vec::new() }, AnchorAuthority { ledger_id: id })
    }

    pub fn records(&self) -> &[WitnessRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn head(&self) -> Hash {
        self.records.last().map_or(ZERO_HASH, |w| w.self_hash)
    }

    pub fn incidents(&self) -> &[Incident] {
        &self.incidents
    }

    pub fn anchor(
        &mut self,
        authority: &AnchorAuthority,
        act: &ActionId,
        decision: Decision,
        policy_version: &str,
        ctx: ContextAbstraction,
        tag_set: TagSet,
    ) -> Result<&WitnessRecord, LedgerError> {
        if authority.ledger_id != self.id {
            self.incidents.push(Incident { act: act.0.clone(), reason: "out-of-band anchor attempt".into() });
            return Err(LedgerError::OutOfBand { act: act.0.clone() });
        }
        let mut w = WitnessRecord {
            seq: self.records.len() as u64,
            act: act.clone(),
            decision,
            policy_version: policy_version.to_string(),
            ctx,
            tag_set,
            prev_hash: self.head(),
            self_hash: ZERO_HASH,
        };
        w.self_hash = w.compute_hash();
        self.records.push(w);
        Ok(self.records.last().expect("just pushed"))
    }

    /// Fault injection: flips the low bit of the first byte of the act id in
    /// record `seq`, leaving the stored hashes untouched.
    pub fn tamper_act_byte(&mut self, authority: &AnchorAuthority, seq: u64) -> bool {
        if authority.ledger_id != self.id {
            return false;
        }
        let Some(w) = self.records.get_mut(seq as usize) else { return false };
        let mut bytes = w.act.0.clone().into_bytes();
        let Some(first) = bytes.first_mut() else { return false };
        *first ^= 1;
        match String::from_utf8(bytes) {
            Ok(s) => {
                w.act = ActionId(s);
                true
            }
            Err(_) => false,
        }
    }

    pub fn verify(&self) -> VerificationReport {
        verify_chain(&self.records)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.records.iter().flat_map(WitnessRecord::encode).collect()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|w| serde_json::to_string(w).expect("witness serializes") + "\n")
            .collect()
    }
}
