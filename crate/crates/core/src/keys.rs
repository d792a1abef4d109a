//! Ledger of distributed key bits. Every bit is spent at most once, either on
//! the one-time pad or on the authentication pool.

use std::ops::Range;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyUse {
    Pad,
    Auth,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("key exhausted: {requested} bits requested, {available} available")]
    Exhausted { requested: usize, available: usize },
    #[error("key bit {index} was already spent on {spent_by:?}")]
    DoubleSpend { index: usize, spent_by: KeyUse },
    #[error("range {start}..{end} exceeds key length {len}")]
    OutOfBounds { start: usize, end: usize, len: usize },
}

#[derive(Debug, Clone, Default)]
pub struct KeyLedger {
    bits: Vec<bool>,
    spent: Vec<Option<KeyUse>>,
}

impl KeyLedger {
    pub fn new(bits: Vec<bool>) -> Self {
        let spent = vec![None; bits.len()];
        Self { bits, spent }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn available(&self) -> usize {
        self.spent.iter().filter(|s| s.is_none()).count()
    }

    pub fn spent_by(&self, index: usize) -> Option<KeyUse> {
        self.spent.get(index).copied().flatten()
    }

    /// Spends exactly `range`. Fails without spending anything if any bit in
    /// it was already used.
    pub fn claim(&mut self, range: Range<usize>, purpose: KeyUse) -> Result<Vec<bool>, KeyError> {
        if range.end > self.bits.len() || range.start > range.end {
            return Err(KeyError::OutOfBounds {
                start: range.start,
                end: range.end,
                len: self.bits.len(),
            });
        }
        if let Some(index) = range.clone().find(|&i| self.spent[i].is_some()) {
            return Err(KeyError::DoubleSpend {
                index,
                spent_by: self.spent[index].expect("checked"),
            });
        }
        for slot in &mut self.spent[range.clone()] {
            *slot = Some(purpose);
        }
        Ok(self.bits[range].to_vec())
    }

    /// Spends the first contiguous run of `n` unspent bits.
    pub fn take(&mut self, n: usize, purpose: KeyUse) -> Result<(Range<usize>, Vec<bool>), KeyError> {
        let mut start = 0;
        while start + n <= self.bits.len() {
            match (start..start + n).rev().find(|&i| self.spent[i].is_some()) {
                Some(used) => start = used + 1,
                None => {
                    let range = start..start + n;
                    let bits = self.claim(range.clone(), purpose)?;
                    return Ok((range, bits));
                }
            }
        }
        Err(KeyError::Exhausted {
            requested: n,
            available: self.available(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claims_are_exclusive() {
        let mut ledger = KeyLedger::new(vec![true, false, true, true]);
        assert_eq!(ledger.claim(1..3, KeyUse::Pad).unwrap(), vec![false, true]);
        assert_eq!(
            ledger.claim(2..4, KeyUse::Auth),
            Err(KeyError::DoubleSpend { index: 2, spent_by: KeyUse::Pad })
        );
        // Failed claim spends nothing.
        assert_eq!(ledger.spent_by(3), None);
        assert_eq!(ledger.available(), 2);
    }

    #[test]
    fn take_skips_spent_runs() {
        let mut ledger = KeyLedger::new(vec![false; 10]);
        ledger.claim(2..4, KeyUse::Auth).unwrap();
        let (range, _) = ledger.take(3, KeyUse::Pad).unwrap();
        assert_eq!(range, 4..7);
        let (range, _) = ledger.take(2, KeyUse::Pad).unwrap();
        assert_eq!(range, 0..2);
        assert_eq!(
            ledger.take(4, KeyUse::Pad),
            Err(KeyError::Exhausted { requested: 4, available: 3 })
        );
    }

    #[test]
    fn out_of_bounds() {
        let mut ledger = KeyLedger::new(vec![false; 3]);
        assert!(matches!(ledger.claim(2..5, KeyUse::Pad), Err(KeyError::OutOfBounds { .. })));
    }
}
