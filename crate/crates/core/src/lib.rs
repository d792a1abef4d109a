pub mod auth;
pub mod bb84;
pub mod channel;
pub mod cointoss;
pub mod eve;
pub mod experiment;
pub mod keys;
pub mod quantum;
pub mod random;
pub mod replay;
pub mod transcript;
