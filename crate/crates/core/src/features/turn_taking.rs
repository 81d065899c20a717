use std::sync::{Arc, OnceLock};

use super::functionals::{self, TURN_FUNCTIONALS};
use super::{Family, FeatureBlock};
use crate::conversation::{SessionTurns, Turn};
use crate::corpus::Role;
use crate::error::{Error, Result};

/// Per-turn sequences, in registry order.
pub const TURN_SEQUENCES: [&str; 6] =
    ["duration", "word_count", "speech_rate", "pause", "duration_vs_partner", "word_count_vs_partner"];
const ORDERS: [&str; 3] = ["base", "delta", "delta2"];
const GLOBALS: [&str; 5] = ["speech_duration", "word_count", "speech_rate", "pause", "turn_count"];

pub const TURN_TAKING_FEATURES: usize = TURN_SEQUENCES.len() * ORDERS.len() * TURN_FUNCTIONALS.len() + GLOBALS.len();

/// `T.<sequence>.<base|delta|delta2>.<functional>` then `T.global.<total>`.
pub fn turn_taking_names() -> Arc<[String]> {
    static NAMES: OnceLock<Arc<[String]>> = OnceLock::new();
    NAMES
        .get_or_init(|| {
            let mut v = Vec::with_capacity(TURN_TAKING_FEATURES);
            for seq in TURN_SEQUENCES {
                for ord in ORDERS {
                    v.extend(TURN_FUNCTIONALS.iter().map(|f| format!("T.{seq}.{ord}.{f}")));
                }
            }
            v.extend(GLOBALS.iter().map(|g| format!("T.global.{g}")));
            v.into()
        })
        .clone()
}

pub fn extract_turn_taking(turns: &SessionTurns, role: Role) -> Result<FeatureBlock> {
    let mut seqs: [Vec<f64>; 6] = Default::default();
    let mut partner_prev: Option<&Turn> = None;
    for t in &turns.turns {
        if t.speaker != role {
            partner_prev = Some(t);
            continue;
        }
        let (dd, dw) = match partner_prev {
            Some(p) => (t.duration().as_secs() - p.duration().as_secs(), t.word_count() as f64 - p.word_count() as f64),
            None => (0.0, 0.0),
        };
        seqs[0].push(t.duration().as_secs());
        seqs[1].push(t.word_count() as f64);
        seqs[2].push(t.speech_rate());
        seqs[3].push(t.pause_before.as_secs());
        seqs[4].push(dd);
        seqs[5].push(dw);
    }
    if seqs[0].is_empty() {
        return Err(Error::Feature(format!("{role} has no turns")));
    }
    let mut values = Vec::with_capacity(TURN_TAKING_FEATURES);
    let mut empty = Vec::new();
    for s in &seqs {
        let d1 = functionals::delta(s);
        let d2 = functionals::delta(&d1);
        for x in [s.as_slice(), &d1, &d2] {
            if x.is_empty() {
                empty.extend(values.len()..values.len() + TURN_FUNCTIONALS.len());
            }
            values.extend(functionals::turn(x));
        }
    }
    let g = turns.totals(role);
    values.extend([g.speech.as_secs(), g.words as f64, g.speech_rate(), g.pause.as_secs(), g.turns as f64]);
    FeatureBlock::new(Family::T, turn_taking_names(), values, empty)
}
