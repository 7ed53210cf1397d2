//! Stator winding fault emulation.
//!
//! A fault is a contact resistance (1 ohm unless stated) placed between two
//! tap points, or between a tap point and the frame. The textual form used on
//! the command line and in configs is
//!
//! ```text
//! tt:A:24-34          turn-to-turn, phase A, turns 24 and 34
//! pp:A:264-B:120      phase-to-phase, A264 to B120
//! pg:A:24@0.5         phase-to-ground, A24 to frame through 0.5 ohm
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motor::{MotorError, MotorModel, Phase};

pub const DEFAULT_CONTACT_OHMS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    TurnToTurn {
        phase: Phase,
        turn_a: u32,
        turn_b: u32,
    },
    PhaseToPhase {
        phase_a: Phase,
        turn_a: u32,
        phase_b: Phase,
        turn_b: u32,
    },
    PhaseToGround {
        phase: Phase,
        turn: u32,
    },
}

impl FaultKind {
    pub fn class(&self) -> &'static str {
        match self {
            FaultKind::TurnToTurn { .. } => "turn-to-turn",
            FaultKind::PhaseToPhase { .. } => "phase-to-phase",
            FaultKind::PhaseToGround { .. } => "phase-to-ground",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub contact_r: f64,
}

impl FaultSpec {
    pub fn new(kind: FaultKind) -> Self {
        Self {
            kind,
            contact_r: DEFAULT_CONTACT_OHMS,
        }
    }

    pub fn with_contact(mut self, ohms: f64) -> Self {
        self.contact_r = ohms;
        self
    }

    pub fn turn_to_turn(phase: Phase, turn_a: u32, turn_b: u32) -> Self {
        Self::new(FaultKind::TurnToTurn {
            phase,
            turn_a,
            turn_b,
        })
    }

    pub fn phase_to_phase(phase_a: Phase, turn_a: u32, phase_b: Phase, turn_b: u32) -> Self {
        Self::new(FaultKind::PhaseToPhase {
            phase_a,
            turn_a,
            phase_b,
            turn_b,
        })
    }

    pub fn phase_to_ground(phase: Phase, turn: u32) -> Self {
        Self::new(FaultKind::PhaseToGround { phase, turn })
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FaultKind::TurnToTurn {
                phase,
                turn_a,
                turn_b,
            } => write!(f, "tt:{phase}:{turn_a}-{turn_b}")?,
            FaultKind::PhaseToPhase {
                phase_a,
                turn_a,
                phase_b,
                turn_b,
            } => write!(f, "pp:{phase_a}:{turn_a}-{phase_b}:{turn_b}")?,
            FaultKind::PhaseToGround { phase, turn } => write!(f, "pg:{phase}:{turn}")?,
        }
        if self.contact_r != DEFAULT_CONTACT_OHMS {
            write!(f, "@{}", self.contact_r)?;
        }
        Ok(())
    }
}

impl Serialize for FaultSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FaultSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FaultError {
    #[error("fault syntax error at column {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown phase {letter:?} at column {position}")]
    UnknownPhase { position: usize, letter: String },
    #[error("contact resistance must be positive and finite, got {0}")]
    InvalidContact(f64),
    #[error("turn-to-turn fault needs two different turns, got {0} twice")]
    SameTurn(u32),
    #[error("fault {0} joins a node to itself")]
    SameNode(String),
    #[error(transparent)]
    Motor(#[from] MotorError),
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> FaultError {
        FaultError::Syntax {
            position: self.pos + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<(), FaultError> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn phase(&mut self) -> Result<Phase, FaultError> {
        let c = self.peek().ok_or_else(|| self.err("expected phase letter"))?;
        let phase = Phase::from_letter(c).ok_or_else(|| FaultError::UnknownPhase {
            position: self.pos + 1,
            letter: c.to_string(),
        })?;
        self.pos += c.len_utf8();
        Ok(phase)
    }

    fn turn(&mut self) -> Result<u32, FaultError> {
        let digits = self.text[self.pos..]
            .chars()
            .take_while(|c| c.is_ascii_digit())
            .count();
        if digits == 0 {
            return Err(self.err("expected turn number"));
        }
        let value = self.text[self.pos..self.pos + digits]
            .parse()
            .map_err(|_| self.err("turn number too large"))?;
        self.pos += digits;
        Ok(value)
    }
}

/// Parses the textual fault grammar.
pub fn parse_fault(text: &str) -> Result<FaultSpec, FaultError> {
    let (body, ohms) = match text.split_once('@') {
        Some((body, ohms)) => {
            let value: f64 = ohms.trim().parse().map_err(|_| FaultError::Syntax {
                position: body.len() + 2,
                message: format!("invalid resistance {ohms:?}"),
            })?;
            (body, Some(value))
        }
        None => (text, None),
    };
    let mut cur = Cursor { text: body, pos: 0 };
    let tag = body.get(..2).ok_or_else(|| cur.err("expected tt, pp or pg"))?;
    cur.pos = 2;
    cur.expect(':')?;
    let kind = match tag {
        "tt" => {
            let phase = cur.phase()?;
            cur.expect(':')?;
            let turn_a = cur.turn()?;
            cur.expect('-')?;
            let turn_b = cur.turn()?;
            FaultKind::TurnToTurn {
                phase,
                turn_a,
                turn_b,
            }
        }
        "pp" => {
            let phase_a = cur.phase()?;
            cur.expect(':')?;
            let turn_a = cur.turn()?;
            cur.expect('-')?;
            let phase_b = cur.phase()?;
            cur.expect(':')?;
            let turn_b = cur.turn()?;
            FaultKind::PhaseToPhase {
                phase_a,
                turn_a,
                phase_b,
                turn_b,
            }
        }
        "pg" => {
            let phase = cur.phase()?;
            cur.expect(':')?;
            let turn = cur.turn()?;
            FaultKind::PhaseToGround { phase, turn }
        }
        _ => {
            cur.pos = 0;
            return Err(cur.err(format!("unknown fault type {tag:?}")));
        }
    };
    if cur.pos != body.len() {
        return Err(cur.err("unexpected trailing characters"));
    }
    let spec = FaultSpec {
        kind,
        contact_r: ohms.unwrap_or(DEFAULT_CONTACT_OHMS),
    };
    validate(&spec)?;
    Ok(spec)
}

impl FromStr for FaultSpec {
    type Err = FaultError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_fault(s)
    }
}

fn validate(fault: &FaultSpec) -> Result<(), FaultError> {
    if !(fault.contact_r > 0.0 && fault.contact_r.is_finite()) {
        return Err(FaultError::InvalidContact(fault.contact_r));
    }
    if let FaultKind::TurnToTurn { turn_a, turn_b, .. } = fault.kind {
        if turn_a == turn_b {
            return Err(FaultError::SameTurn(turn_a));
        }
    }
    Ok(())
}

/// Returns a copy of `model` with the fault's contact resistor added.
pub fn apply_fault(model: &MotorModel, fault: &FaultSpec) -> Result<MotorModel, FaultError> {
    validate(fault)?;
    let (a, b) = match fault.kind {
        FaultKind::TurnToTurn {
            phase,
            turn_a,
            turn_b,
        } => (model.tap_node(phase, turn_a)?, model.tap_node(phase, turn_b)?),
        FaultKind::PhaseToPhase {
            phase_a,
            turn_a,
            phase_b,
            turn_b,
        } => (model.tap_node(phase_a, turn_a)?, model.tap_node(phase_b, turn_b)?),
        FaultKind::PhaseToGround { phase, turn } => (model.tap_node(phase, turn)?, model.frame),
    };
    if a == b {
        return Err(FaultError::SameNode(fault.to_string()));
    }
    let mut out = model.clone();
    let label = format!("fault{}.{}", model.faults.len(), fault);
    out.network.resistor(label, a, b, fault.contact_r);
    out.faults.push(*fault);
    Ok(out)
}
