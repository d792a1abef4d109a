//! Random sources: a seeded deterministic generator for experiments and a
//! scripted source that replays an explicit list of choices.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Probabilities at or above `1 - CERTAIN` are treated as certain and consume
/// no randomness.
const CERTAIN: f64 = 1e-12;

/// Every random choice a protocol makes goes through this trait.
///
/// Choices whose outcome is already determined (a certain measurement, a
/// Bernoulli trial with p = 0 or 1) never consume a draw, so scripts only
/// have to list the choices that are actually random.
pub trait RandomSource {
    /// A fair coin.
    fn coin(&mut self) -> bool;
    /// `true` with probability `p`.
    fn bernoulli(&mut self, p: f64) -> bool;
    /// Uniform in `0..bound`. `bound` must be non-zero.
    fn below(&mut self, bound: usize) -> usize;
    /// Index `k` with probability `weights[k] / sum(weights)`.
    fn pick(&mut self, weights: &[f64]) -> usize;
}

fn certain_index(weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    weights.iter().position(|w| *w >= total * (1.0 - CERTAIN))
}

/// ChaCha8 stream keyed by a 64-bit seed. Output is identical on every
/// platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for trial `trial` of an experiment seeded with `seed`.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(trial);
        Self { inner }
    }
}

/// Deterministic source for `seed`.
pub fn seeded_rng(seed: u64) -> SeededRng {
    SeededRng::new(seed)
}

impl RandomSource for SeededRng {
    fn coin(&mut self) -> bool {
        self.inner.gen()
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.inner.gen_bool(p)
        }
    }

    fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below(0)");
        self.inner.gen_range(0..bound)
    }

    fn pick(&mut self, weights: &[f64]) -> usize {
        if let Some(k) = certain_index(weights) {
            return k;
        }
        let total: f64 = weights.iter().sum();
        let mut u = self.inner.gen::<f64>() * total;
        for (k, w) in weights.iter().enumerate() {
            if u < *w {
                return k;
            }
            u -= w;
        }
        weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
    }
}

/// Why a scripted source could not honour a request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptFault {
    Exhausted { draw: usize },
    OutOfRange { draw: usize, value: u32, bound: usize },
    Impossible { draw: usize, outcome: u32 },
}

/// Replays a fixed list of choices. Each random request pops one value:
/// `coin` and `bernoulli` read it as a bit, `below` and `pick` as an index.
///
/// Misuse (running out, an index out of range, picking an outcome of zero
/// probability) does not panic; the first fault is recorded and a harmless
/// default is returned so callers can report it.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSource {
    draws: VecDeque<u32>,
    consumed: usize,
    fault: Option<ScriptFault>,
}

impl ScriptedSource {
    pub fn new(draws: impl IntoIterator<Item = u32>) -> Self {
        Self {
            draws: draws.into_iter().collect(),
            consumed: 0,
            fault: None,
        }
    }

    pub fn fault(&self) -> Option<&ScriptFault> {
        self.fault.as_ref()
    }

    pub fn remaining(&self) -> usize {
        self.draws.len()
    }

    fn next(&mut self) -> Option<u32> {
        let draw = self.consumed;
        self.consumed += 1;
        let v = self.draws.pop_front();
        if v.is_none() {
            self.fault.get_or_insert(ScriptFault::Exhausted { draw });
        }
        v
    }

    fn index(&mut self, bound: usize) -> usize {
        let draw = self.consumed;
        match self.next() {
            Some(v) if (v as usize) < bound => v as usize,
            Some(value) => {
                self.fault
                    .get_or_insert(ScriptFault::OutOfRange { draw, value, bound });
                0
            }
            None => 0,
        }
    }
}

impl RandomSource for ScriptedSource {
    fn coin(&mut self) -> bool {
        self.next().is_some_and(|v| v != 0)
    }

    fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.coin()
        }
    }

    fn below(&mut self, bound: usize) -> usize {
        self.index(bound)
    }

    fn pick(&mut self, weights: &[f64]) -> usize {
        if let Some(k) = certain_index(weights) {
            return k;
        }
        let draw = self.consumed;
        let k = self.index(weights.len());
        if weights[k] <= CERTAIN {
            self.fault
                .get_or_insert(ScriptFault::Impossible { draw, outcome: k as u32 });
        }
        k
    }
}

/// `k` distinct indices from `0..n`, chosen uniformly (partial Fisher-Yates).
/// Returned in selection order.
pub fn sample_without_replacement(rng: &mut dyn RandomSource, n: usize, k: usize) -> Vec<usize> {
    let k = k.min(n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + rng.below(n - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}
