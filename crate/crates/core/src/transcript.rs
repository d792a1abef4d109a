//! JSON-lines transcripts.
//!
//! Every line is one object with a `kind` field:
//!
//! * `pulse`: `trial`, `index`, then for key distribution `alice_bit`,
//!   `alice_basis`, `fate` (`delivered`, `lost_in_transit`, `not_detected`,
//!   `intercepted`), `eve_basis` / `eve_outcome` / `detected` when
//!   intercepted, `bob_basis`, `bob_bit`; for coin tossing `emission`,
//!   `bob_basis`, `bob_bit`.
//! * `message`: `trial`, `seq`, `sender`, `original`, `delivered` (`null` if
//!   suppressed).
//!
//! Bits are 0/1, bases are `"R"` / `"D"`, absent values are `null`.

use std::io::{self, Write};

use serde_json::{json, Value};

use crate::bb84::SessionResult;
use crate::channel::LogEntry;
use crate::cointoss::TossRound;

fn bit(b: Option<bool>) -> Value {
    b.map_or(Value::Null, |b| json!(b as u8))
}

fn message_lines(trial: u64, log: &[LogEntry]) -> impl Iterator<Item = Value> + '_ {
    log.iter().map(move |e| {
        let mut v = serde_json::to_value(e).expect("log entries serialize");
        v["kind"] = json!("message");
        v["trial"] = json!(trial);
        v
    })
}

pub fn session_lines(trial: u64, session: &SessionResult) -> Vec<Value> {
    let mut lines: Vec<Value> = session
        .alice
        .pulses
        .iter()
        .zip(&session.fates)
        .enumerate()
        .map(|(i, (pulse, fate))| {
            let mut v = serde_json::to_value(fate).expect("fates serialize");
            v["kind"] = json!("pulse");
            v["trial"] = json!(trial);
            v["index"] = json!(i);
            v["alice_bit"] = json!(pulse.bit as u8);
            v["alice_basis"] = json!(pulse.basis);
            v["bob_basis"] = json!(session.bob.bases[i]);
            v["bob_bit"] = bit(session.bob.bits[i]);
            v
        })
        .collect();
    lines.extend(message_lines(trial, &session.log));
    lines
}

pub fn toss_lines(trial: u64, round: &TossRound) -> Vec<Value> {
    let mut lines: Vec<Value> = round
        .emissions
        .iter()
        .enumerate()
        .map(|(i, emission)| {
            let b = round.bob_bases[i];
            json!({
                "kind": "pulse",
                "trial": trial,
                "index": i,
                "emission": emission,
                "bob_basis": b,
                "bob_bit": bit(round.tables.table(b)[i]),
            })
        })
        .collect();
    lines.extend(message_lines(trial, &round.log));
    lines
}

pub fn write_lines<W: Write>(mut out: W, lines: &[Value]) -> io::Result<()> {
    for line in lines {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bb84::{run_session, SessionConfig};
    use crate::random::SeededRng;

    #[test]
    fn one_line_per_pulse_and_message() {
        let cfg = SessionConfig {
            n: 50,
            ..Default::default()
        };
        let s = run_session(&cfg, None, None, None, &mut SeededRng::new(1)).unwrap();
        let lines = session_lines(0, &s);
        assert_eq!(lines.len(), 50 + s.log.len());
        assert_eq!(lines[0]["kind"], "pulse");
        assert_eq!(lines[0]["fate"], "delivered");
        assert!(lines[0]["alice_basis"] == "R" || lines[0]["alice_basis"] == "D");
        let last = lines.last().unwrap();
        assert_eq!(last["kind"], "message");
        assert_eq!(last["sender"], "alice");
        let mut buf = Vec::new();
        write_lines(&mut buf, &lines).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), lines.len());
    }
}
