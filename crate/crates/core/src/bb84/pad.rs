use std::ops::Range;

use crate::keys::{KeyError, KeyLedger, KeyUse};

pub fn xor_bits(key: &[bool], message: &[bool]) -> Vec<bool> {
    key.iter().zip(message).map(|(k, m)| k ^ m).collect()
}

/// Encrypts `message` with the next unspent key bits, marking them spent.
/// Returns the key range used (the receiver needs it) and the ciphertext.
pub fn one_time_pad(ledger: &mut KeyLedger, message: &[bool]) -> Result<(Range<usize>, Vec<bool>), KeyError> {
    let (range, key) = ledger.take(message.len(), KeyUse::Pad)?;
    Ok((range, xor_bits(&key, message)))
}

/// Decrypts with the receiver's copy of the key, spending the same range.
pub fn decrypt(ledger: &mut KeyLedger, range: Range<usize>, ciphertext: &[bool]) -> Result<Vec<bool>, KeyError> {
    let key = ledger.claim(range, KeyUse::Pad)?;
    Ok(xor_bits(&key, ciphertext))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_key_is_identity() {
        let mut ledger = KeyLedger::new(vec![false; 4]);
        let (_, c) = one_time_pad(&mut ledger, &[false; 4]).unwrap();
        assert_eq!(c, vec![false; 4]);
    }

    #[test]
    fn pad_spends_bits_once() {
        let key = vec![true, false, true, true, false];
        let mut alice = KeyLedger::new(key.clone());
        let mut bob = KeyLedger::new(key);
        let msg = [true, true, false];
        let (range, c) = one_time_pad(&mut alice, &msg).unwrap();
        assert_eq!(decrypt(&mut bob, range.clone(), &c).unwrap(), msg);
        assert!(matches!(decrypt(&mut bob, range, &c), Err(KeyError::DoubleSpend { .. })));
        assert!(matches!(
            one_time_pad(&mut alice, &msg),
            Err(KeyError::Exhausted { requested: 3, available: 2 })
        ));
    }
}
