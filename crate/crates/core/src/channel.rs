//! Simulated quantum and classical channels.
//!
//! On the quantum channel each pulse is first subject to transit loss, then
//! (if it survived) to the eavesdropper, then to Bob's detector efficiency.
//! The classical channel is an append-only public log; anyone may read it and
//! an optional active adversary may substitute or suppress what is delivered.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::auth::{AuthError, AuthKeyPool, Tag};
use crate::eve::{Eavesdropper, Interception};
use crate::quantum::{Basis, Photon};
use crate::random::RandomSource;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    OutOfRange { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumChannelConfig {
    pub loss_probability: f64,
    pub detector_efficiency: f64,
}

impl Default for QuantumChannelConfig {
    fn default() -> Self {
        Self::lossless()
    }
}

impl QuantumChannelConfig {
    pub fn new(loss_probability: f64, detector_efficiency: f64) -> Result<Self, ChannelError> {
        let cfg = Self {
            loss_probability,
            detector_efficiency,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn lossless() -> Self {
        Self {
            loss_probability: 0.0,
            detector_efficiency: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        for (name, value) in [
            ("loss_probability", self.loss_probability),
            ("detector_efficiency", self.detector_efficiency),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ChannelError::OutOfRange { name, value });
            }
        }
        Ok(())
    }
}

/// What happened to one pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "fate", rename_all = "snake_case")]
pub enum PulseFate {
    Delivered,
    LostInTransit,
    NotDetected,
    Intercepted {
        eve_basis: Basis,
        eve_outcome: usize,
        detected: bool,
    },
}

impl PulseFate {
    pub fn detected(&self) -> bool {
        matches!(
            self,
            PulseFate::Delivered | PulseFate::Intercepted { detected: true, .. }
        )
    }

    pub fn interception(&self) -> Option<Interception> {
        match *self {
            PulseFate::Intercepted {
                eve_basis,
                eve_outcome,
                ..
            } => Some(Interception {
                basis: eve_basis,
                outcome: eve_outcome,
            }),
            _ => None,
        }
    }
}

/// Result of sending one photon. The photon is present only when Bob's
/// detector fires.
#[derive(Debug)]
pub struct Delivery {
    pub fate: PulseFate,
    photon: Option<Photon>,
}

impl Delivery {
    pub fn detected(&self) -> bool {
        self.photon.is_some()
    }

    pub fn into_photon(self) -> Option<Photon> {
        self.photon
    }
}

/// Sends `photon` through a channel configured by `cfg`, optionally past an
/// eavesdropper.
pub fn send_photon(
    cfg: &QuantumChannelConfig,
    eavesdropper: Option<&mut (dyn Eavesdropper + '_)>,
    index: usize,
    photon: Photon,
    rng: &mut dyn RandomSource,
) -> Delivery {
    if rng.bernoulli(cfg.loss_probability) {
        return Delivery {
            fate: PulseFate::LostInTransit,
            photon: None,
        };
    }
    let (photon, interception) = match eavesdropper {
        Some(eve) => eve.intercept(index, photon, rng),
        None => (photon, None),
    };
    let detected = rng.bernoulli(cfg.detector_efficiency);
    let fate = match interception {
        Some(Interception { basis, outcome }) => PulseFate::Intercepted {
            eve_basis: basis,
            eve_outcome: outcome,
            detected,
        },
        None if detected => PulseFate::Delivered,
        None => PulseFate::NotDetected,
    };
    Delivery {
        fate,
        photon: detected.then_some(photon),
    }
}

/// A quantum channel with its (optional) eavesdropper attached.
pub struct QuantumChannel {
    config: QuantumChannelConfig,
    eavesdropper: Option<Box<dyn Eavesdropper>>,
    sent: usize,
}

impl QuantumChannel {
    pub fn new(config: QuantumChannelConfig) -> Self {
        Self {
            config,
            eavesdropper: None,
            sent: 0,
        }
    }

    pub fn with_eavesdropper(mut self, eve: Option<Box<dyn Eavesdropper>>) -> Self {
        self.eavesdropper = eve;
        self
    }

    pub fn config(&self) -> &QuantumChannelConfig {
        &self.config
    }

    pub fn eavesdropper_name(&self) -> String {
        self.eavesdropper
            .as_ref()
            .map_or_else(|| "none".to_string(), |e| e.name())
    }

    pub fn send(&mut self, photon: Photon, rng: &mut dyn RandomSource) -> Delivery {
        let index = self.sent;
        self.sent += 1;
        send_photon(&self.config, self.eavesdropper.as_deref_mut(), index, photon, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Self {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

fn bytes_as_text<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&String::from_utf8_lossy(bytes))
}

fn opt_bytes_as_text<S: Serializer>(bytes: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
    match bytes {
        Some(b) => bytes_as_text(b, s),
        None => s.serialize_none(),
    }
}

/// One public message: what the sender published and what actually arrived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LogEntry {
    pub seq: usize,
    pub sender: Party,
    #[serde(serialize_with = "bytes_as_text")]
    pub original: Vec<u8>,
    #[serde(serialize_with = "opt_bytes_as_text")]
    pub delivered: Option<Vec<u8>>,
}

impl LogEntry {
    pub fn tampered(&self) -> bool {
        self.delivered.as_deref() != Some(self.original.as_slice())
    }
}

/// What an active adversary does with a message in transit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tamper {
    Forward,
    Substitute(Vec<u8>),
    Suppress,
}

pub trait ActiveAdversary: Send {
    fn name(&self) -> String;
    fn tamper(&mut self, sender: Party, msg: &[u8]) -> Tamper;
}

/// Drops every message.
#[derive(Debug, Default)]
pub struct Suppressor;

impl ActiveAdversary for Suppressor {
    fn name(&self) -> String {
        "suppress".into()
    }

    fn tamper(&mut self, _: Party, _: &[u8]) -> Tamper {
        Tamper::Suppress
    }
}

/// Applies a caller-supplied rewrite; `None` forwards unchanged.
pub struct Substitution<F> {
    name: String,
    rule: F,
}

impl<F> Substitution<F>
where
    F: FnMut(Party, &[u8]) -> Option<Vec<u8>> + Send,
{
    pub fn new(name: impl Into<String>, rule: F) -> Self {
        Self {
            name: name.into(),
            rule,
        }
    }
}

impl<F> ActiveAdversary for Substitution<F>
where
    F: FnMut(Party, &[u8]) -> Option<Vec<u8>> + Send,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn tamper(&mut self, sender: Party, msg: &[u8]) -> Tamper {
        match (self.rule)(sender, msg) {
            Some(replacement) if replacement != msg => Tamper::Substitute(replacement),
            _ => Tamper::Forward,
        }
    }
}

/// Public channel. Never reorders; every publication is logged.
#[derive(Default)]
pub struct ClassicalChannel {
    log: Vec<LogEntry>,
    adversary: Option<Box<dyn ActiveAdversary>>,
}

impl ClassicalChannel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_adversary(mut self, adversary: Option<Box<dyn ActiveAdversary>>) -> Self {
        self.adversary = adversary;
        self
    }

    pub fn adversary_name(&self) -> Option<String> {
        self.adversary.as_ref().map(|a| a.name())
    }

    /// Publishes `msg` and returns what the recipient receives (`None` if
    /// suppressed).
    pub fn publish(&mut self, sender: Party, msg: Vec<u8>) -> Option<Vec<u8>> {
        let delivered = match self.adversary.as_mut().map(|a| a.tamper(sender, &msg)) {
            None | Some(Tamper::Forward) => Some(msg.clone()),
            Some(Tamper::Substitute(other)) => Some(other),
            Some(Tamper::Suppress) => None,
        };
        self.log.push(LogEntry {
            seq: self.log.len(),
            sender,
            original: msg,
            delivered: delivered.clone(),
        });
        delivered
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn into_log(self) -> Vec<LogEntry> {
        self.log
    }
}

/// A passive listener that reads everything published so far.
#[derive(Debug, Default)]
pub struct PassiveTap {
    cursor: usize,
    reads: usize,
}

impl PassiveTap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the messages published since the last call.
    pub fn observe<'a>(&mut self, channel: &'a ClassicalChannel) -> Vec<&'a [u8]> {
        let fresh: Vec<&[u8]> = channel.log()[self.cursor..]
            .iter()
            .map(|e| e.original.as_slice())
            .collect();
        self.cursor = channel.log().len();
        self.reads += fresh.len();
        fresh
    }

    pub fn reads(&self) -> usize {
        self.reads
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LineError {
    #[error("message suppressed in transit")]
    Suppressed,
    #[error("authentication tag rejected")]
    Rejected,
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error(transparent)]
    Auth(#[from] AuthError),
}

/// Both parties' copies of the shared authentication pool.
#[derive(Debug, Clone)]
pub struct AuthPair {
    pub alice: AuthKeyPool,
    pub bob: AuthKeyPool,
}

impl AuthPair {
    pub fn new(shared: Vec<bool>, tag_bits: u32) -> Result<Self, AuthError> {
        Ok(Self {
            alice: AuthKeyPool::new(shared.clone(), tag_bits)?,
            bob: AuthKeyPool::new(shared, tag_bits)?,
        })
    }

    fn pool(&mut self, party: Party) -> &mut AuthKeyPool {
        match party {
            Party::Alice => &mut self.alice,
            Party::Bob => &mut self.bob,
        }
    }
}

/// Wire format of an authenticated message.
#[derive(Debug, Serialize, Deserialize)]
struct Envelope {
    body: String,
    tag: String,
    offset: usize,
}

/// The classical channel as the protocols use it: typed JSON messages,
/// optionally wrapped in authenticated envelopes.
pub struct PublicLine {
    channel: ClassicalChannel,
    auth: Option<AuthPair>,
}

impl PublicLine {
    pub fn new(channel: ClassicalChannel, auth: Option<AuthPair>) -> Self {
        Self { channel, auth }
    }

    pub fn plain() -> Self {
        Self::new(ClassicalChannel::new(), None)
    }

    pub fn channel(&self) -> &ClassicalChannel {
        &self.channel
    }

    pub fn auth(&self) -> Option<&AuthPair> {
        self.auth.as_ref()
    }

    pub fn into_parts(self) -> (ClassicalChannel, Option<AuthPair>) {
        (self.channel, self.auth)
    }

    /// Sends `msg` from `from` and returns the message as the other party
    /// receives and accepts it.
    pub fn send<T: Serialize + DeserializeOwned>(&mut self, from: Party, msg: &T) -> Result<T, LineError> {
        let body = serde_json::to_string(msg).map_err(|e| LineError::Malformed(e.to_string()))?;
        let wire = match self.auth.as_mut() {
            None => body.into_bytes(),
            Some(pair) => {
                let (tag, _) = pair.pool(from).tag_message(body.as_bytes())?;
                let envelope = Envelope {
                    tag: tag.to_hex(),
                    offset: tag.offset,
                    body,
                };
                serde_json::to_vec(&envelope).map_err(|e| LineError::Malformed(e.to_string()))?
            }
        };
        let delivered = self.channel.publish(from, wire).ok_or(LineError::Suppressed)?;
        let body = match self.auth.as_mut() {
            None => delivered,
            Some(pair) => {
                let envelope: Envelope = serde_json::from_slice(&delivered)
                    .map_err(|e| LineError::Malformed(e.to_string()))?;
                let receiver = pair.pool(from.other());
                let tag = Tag::from_hex(&envelope.tag, receiver.tag_bits(), envelope.offset)?;
                if !receiver.verify(envelope.body.as_bytes(), &tag)? {
                    return Err(LineError::Rejected);
                }
                envelope.body.into_bytes()
            }
        };
        serde_json::from_slice(&body).map_err(|e| LineError::Malformed(e.to_string()))
    }
}
