//! Information-theoretic authentication of classical messages.
//!
//! Tags follow the Wegman-Carter pattern: a polynomial hash over the prime
//! field `GF(2^64 - 59)`, truncated to the tag width, then masked with fresh
//! one-time key bits. An adversary who has seen one `(message, tag)` pair
//! forges a different accepted pair with probability about `2^-t` for a
//! `t`-bit tag.
//!
//! # Key budget
//!
//! * Each message spends `t` mask bits (the tag width).
//! * The 64-bit polynomial key is reused for an *epoch* of messages
//!   (default [`DEFAULT_EPOCH_MESSAGES`]); starting an epoch spends 64 bits.
//!
//! Both parties hold identical pools and consume them in lockstep: the sender
//! while tagging, the receiver while verifying. The hash family is
//! replaceable; anything almost-universal with per-message masking satisfies
//! the same contract.

use serde::Serialize;
use thiserror::Error;

use crate::keys::{KeyError, KeyLedger, KeyUse};

/// `2^64 - 59`, the largest 64-bit prime.
pub const FIELD_PRIME: u64 = 0xFFFF_FFFF_FFFF_FFC5;
pub const DEFAULT_TAG_BITS: u32 = 32;
pub const DEFAULT_EPOCH_MESSAGES: usize = 64;
const POLY_KEY_BITS: usize = 64;
/// Bytes per field element; `2^56 < FIELD_PRIME`.
const BLOCK_BYTES: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AuthError {
    #[error("authentication key exhausted: {needed} bits needed, {available} available")]
    Exhausted { needed: usize, available: usize },
    #[error("pools out of sync: receiver at offset {receiver}, tag made at {sender}")]
    Desynchronized { receiver: usize, sender: usize },
    #[error("tag width {0} unsupported (1..=32)")]
    BadWidth(u32),
    #[error("tag width mismatch: pool uses {pool}, tag has {tag}")]
    WidthMismatch { pool: u32, tag: u32 },
    #[error("malformed tag: {0}")]
    Malformed(String),
    #[error(transparent)]
    Key(#[from] KeyError),
}

/// A message tag plus the pool offset at which its key material starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Tag {
    pub value: u64,
    pub width: u32,
    pub offset: usize,
}

impl Tag {
    pub fn to_hex(&self) -> String {
        let digits = self.width.div_ceil(4) as usize;
        format!("{:0digits$x}", self.value)
    }

    pub fn from_hex(hex: &str, width: u32, offset: usize) -> Result<Self, AuthError> {
        let value = u64::from_str_radix(hex, 16).map_err(|e| AuthError::Malformed(e.to_string()))?;
        if width < 64 && value >> width != 0 {
            return Err(AuthError::Malformed(format!("{hex} wider than {width} bits")));
        }
        Ok(Self { value, width, offset })
    }
}

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % FIELD_PRIME as u128) as u64
}

fn add_mod(a: u64, b: u64) -> u64 {
    ((a as u128 + b as u128) % FIELD_PRIME as u128) as u64
}

/// Polynomial hash of `msg` at point `key`: 7-byte little-endian blocks
/// followed by the byte length, evaluated by Horner's rule.
pub fn poly_hash(key: u64, msg: &[u8]) -> u64 {
    let key = key % FIELD_PRIME;
    let blocks = msg.chunks(BLOCK_BYTES).map(|chunk| {
        let mut buf = [0u8; 8];
        buf[..chunk.len()].copy_from_slice(chunk);
        u64::from_le_bytes(buf)
    });
    blocks
        .chain(std::iter::once(msg.len() as u64))
        .fold(0, |h, block| add_mod(mul_mod(h, key), block))
}

fn bits_to_u64(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Spend {
    PolyKey,
    Mask,
}

/// One line of the pool's audit ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub spend: Spend,
    pub offset: usize,
    pub bits: usize,
}

#[derive(Debug, Clone)]
struct Epoch {
    key: u64,
    remaining: usize,
}

/// A party's reservoir of secret authentication bits.
#[derive(Debug, Clone)]
pub struct AuthKeyPool {
    bits: Vec<bool>,
    consumed: usize,
    tag_bits: u32,
    epoch_messages: usize,
    epoch: Option<Epoch>,
    ledger: Vec<LedgerEntry>,
    messages: usize,
}

impl AuthKeyPool {
    pub fn new(initial: Vec<bool>, tag_bits: u32) -> Result<Self, AuthError> {
        if !(1..=32).contains(&tag_bits) {
            return Err(AuthError::BadWidth(tag_bits));
        }
        Ok(Self {
            bits: initial,
            consumed: 0,
            tag_bits,
            epoch_messages: DEFAULT_EPOCH_MESSAGES,
            epoch: None,
            ledger: Vec::new(),
            messages: 0,
        })
    }

    pub fn with_epoch_messages(mut self, messages: usize) -> Self {
        self.epoch_messages = messages.max(1);
        self
    }

    pub fn tag_bits(&self) -> u32 {
        self.tag_bits
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn available(&self) -> usize {
        self.bits.len() - self.consumed
    }

    /// Bits the next tag (or verification) will spend.
    pub fn next_cost(&self) -> usize {
        let key = if self.epoch.is_some() { 0 } else { POLY_KEY_BITS };
        key + self.tag_bits as usize
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    /// True when the ledger accounts for every consumed bit exactly.
    pub fn audit(&self) -> bool {
        let mut offset = 0;
        for entry in &self.ledger {
            if entry.offset != offset {
                return false;
            }
            offset += entry.bits;
        }
        offset == self.consumed
    }

    fn spend(&mut self, n: usize, spend: Spend) -> Vec<bool> {
        let out = self.bits[self.consumed..self.consumed + n].to_vec();
        self.ledger.push(LedgerEntry {
            spend,
            offset: self.consumed,
            bits: n,
        });
        self.consumed += n;
        out
    }

    /// Spends the key material for one message and returns the tag for `msg`.
    fn next_tag_value(&mut self, msg: &[u8]) -> Result<u64, AuthError> {
        let needed = self.next_cost();
        if needed > self.available() {
            return Err(AuthError::Exhausted {
                needed,
                available: self.available(),
            });
        }
        if self.epoch.is_none() {
            let key = bits_to_u64(&self.spend(POLY_KEY_BITS, Spend::PolyKey)) % FIELD_PRIME;
            self.epoch = Some(Epoch {
                key,
                remaining: self.epoch_messages,
            });
        }
        let epoch = self.epoch.as_mut().expect("epoch set above");
        let key = epoch.key;
        epoch.remaining -= 1;
        if epoch.remaining == 0 {
            self.epoch = None;
        }
        let mask = bits_to_u64(&self.spend(self.tag_bits as usize, Spend::Mask));
        let truncated = poly_hash(key, msg) & ((1u64 << self.tag_bits) - 1);
        self.messages += 1;
        Ok(truncated ^ mask)
    }

    /// Tags `msg`, returning the tag and the number of pool bits it cost.
    pub fn tag_message(&mut self, msg: &[u8]) -> Result<(Tag, usize), AuthError> {
        let offset = self.consumed;
        let value = self.next_tag_value(msg)?;
        Ok((
            Tag {
                value,
                width: self.tag_bits,
                offset,
            },
            self.consumed - offset,
        ))
    }

    /// Checks `tag` against `msg` using this (receiver's) pool.
    ///
    /// A tag made at an earlier offset is a replay and is rejected without
    /// spending anything. A tag from a later offset means the pools have
    /// drifted apart, which is an error rather than a rejection.
    pub fn verify(&mut self, msg: &[u8], tag: &Tag) -> Result<bool, AuthError> {
        if tag.width != self.tag_bits {
            return Err(AuthError::WidthMismatch {
                pool: self.tag_bits,
                tag: tag.width,
            });
        }
        if tag.offset < self.consumed {
            return Ok(false);
        }
        if tag.offset > self.consumed {
            return Err(AuthError::Desynchronized {
                receiver: self.consumed,
                sender: tag.offset,
            });
        }
        Ok(self.next_tag_value(msg)? == tag.value)
    }

    /// Appends fresh bits taken from a distributed key. The bits are marked
    /// spent in `source`, so they can never also serve as pad.
    pub fn replenish(&mut self, source: &mut KeyLedger, range: std::ops::Range<usize>) -> Result<usize, AuthError> {
        let fresh = source.claim(range, KeyUse::Auth)?;
        let n = fresh.len();
        self.bits.extend(fresh);
        Ok(n)
    }
}
