//! Domain types for tagged micro-events.
//!
//! The event vocabulary is closed: twenty modeled on-ice events plus `goal`,
//! `assist`, and the `pad` token used by sequence models. Each variant has a
//! stable integer token id (`pad` = 0) so that models serialized today load
//! identically tomorrow. The wire names are the snake_case variant names and
//! are documented in `schema/events_v1.json`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Closed vocabulary of event tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum EventType {
    Pad = 0,
    FaceoffSuccess = 1,
    Lpr = 2,
    Pass = 3,
    Reception = 4,
    Block = 5,
    PuckProtection = 6,
    Carry = 7,
    Check = 8,
    ControlledEntryAgainst = 9,
    ControlledEntry = 10,
    ControlledExit = 11,
    Icing = 12,
    DumpOut = 13,
    DumpIn = 14,
    Shot = 15,
    Penalty = 16,
    PenaltyDrawn = 17,
    Save = 18,
    Rebound = 19,
    Offside = 20,
    Goal = 21,
    Assist = 22,
}

impl EventType {
    /// Every token in the vocabulary, in token-id order.
    pub const ALL: [EventType; 23] = [
        EventType::Pad,
        EventType::FaceoffSuccess,
        EventType::Lpr,
        EventType::Pass,
        EventType::Reception,
        EventType::Block,
        EventType::PuckProtection,
        EventType::Carry,
        EventType::Check,
        EventType::ControlledEntryAgainst,
        EventType::ControlledEntry,
        EventType::ControlledExit,
        EventType::Icing,
        EventType::DumpOut,
        EventType::DumpIn,
        EventType::Shot,
        EventType::Penalty,
        EventType::PenaltyDrawn,
        EventType::Save,
        EventType::Rebound,
        EventType::Offside,
        EventType::Goal,
        EventType::Assist,
    ];

    /// The twenty on-ice events used as model features. `goal` and `assist`
    /// are label events and `pad` is sequence filler; none of the three are
    /// count features.
    pub const MODELED: [EventType; 20] = [
        EventType::FaceoffSuccess,
        EventType::Lpr,
        EventType::Pass,
        EventType::Reception,
        EventType::Block,
        EventType::PuckProtection,
        EventType::Carry,
        EventType::Check,
        EventType::ControlledEntryAgainst,
        EventType::ControlledEntry,
        EventType::ControlledExit,
        EventType::Icing,
        EventType::DumpOut,
        EventType::DumpIn,
        EventType::Shot,
        EventType::Penalty,
        EventType::PenaltyDrawn,
        EventType::Save,
        EventType::Rebound,
        EventType::Offside,
    ];

    pub const VOCAB_SIZE: usize = 23;

    /// Stable integer token id; `pad` maps to 0.
    pub fn token_id(self) -> usize {
        self as usize
    }

    pub fn from_token_id(id: usize) -> Option<EventType> {
        EventType::ALL.get(id).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Pad => "pad",
            EventType::FaceoffSuccess => "faceoff_success",
            EventType::Lpr => "lpr",
            EventType::Pass => "pass",
            EventType::Reception => "reception",
            EventType::Block => "block",
            EventType::PuckProtection => "puck_protection",
            EventType::Carry => "carry",
            EventType::Check => "check",
            EventType::ControlledEntryAgainst => "controlled_entry_against",
            EventType::ControlledEntry => "controlled_entry",
            EventType::ControlledExit => "controlled_exit",
            EventType::Icing => "icing",
            EventType::DumpOut => "dump_out",
            EventType::DumpIn => "dump_in",
            EventType::Shot => "shot",
            EventType::Penalty => "penalty",
            EventType::PenaltyDrawn => "penalty_drawn",
            EventType::Save => "save",
            EventType::Rebound => "rebound",
            EventType::Offside => "offside",
            EventType::Goal => "goal",
            EventType::Assist => "assist",
        }
    }
}

impl FromStr for EventType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        EventType::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::UnknownEvent { token: s.to_string() })
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeamSide {
    Home,
    Away,
}

impl FromStr for TeamSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "home" => Ok(TeamSide::Home),
            "away" => Ok(TeamSide::Away),
            other => Err(Error::Data(format!("unknown team side '{other}'"))),
        }
    }
}

/// On-ice role labels carried by the input schema: three forwards, two
/// defenders, and `other` for everything else (goalies, unattributed rows).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlayerRole {
    F1,
    F2,
    F3,
    D1,
    D2,
    #[serde(rename = "other")]
    Other,
}

impl PlayerRole {
    /// Index into the five-role positional vector, `None` for `Other`.
    pub fn position_slot(self) -> Option<usize> {
        match self {
            PlayerRole::F1 => Some(0),
            PlayerRole::F2 => Some(1),
            PlayerRole::F3 => Some(2),
            PlayerRole::D1 => Some(3),
            PlayerRole::D2 => Some(4),
            PlayerRole::Other => None,
        }
    }

    pub const SLOT_NAMES: [&'static str; 5] = ["F1", "F2", "F3", "D1", "D2"];
}

impl FromStr for PlayerRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "F1" => Ok(PlayerRole::F1),
            "F2" => Ok(PlayerRole::F2),
            "F3" => Ok(PlayerRole::F3),
            "D1" => Ok(PlayerRole::D1),
            "D2" => Ok(PlayerRole::D2),
            "other" => Ok(PlayerRole::Other),
            other => Err(Error::Data(format!("unknown player role '{other}'"))),
        }
    }
}

/// One tagged micro-event with rink coordinates and game clock.
///
/// Coordinates are rink metres in a 200 x 85 frame: x in [-100, 100],
/// y in [-42.5, 42.5]. `clock_s` is seconds elapsed in the game and must be
/// nondecreasing within a game file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub game_id: String,
    pub period: u8,
    pub clock_s: f64,
    pub team_side: TeamSide,
    pub event_type: EventType,
    pub x: f64,
    pub y: f64,
    pub player_role: PlayerRole,
    pub is_shootout: bool,
    /// Set once coordinates have been mapped to the common attack frame.
    /// In-memory bookkeeping only; never serialized.
    #[serde(skip, default)]
    pub standardized: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_ids_are_bijective_and_pad_is_zero() {
        assert_eq!(EventType::Pad.token_id(), 0);
        for (i, e) in EventType::ALL.iter().enumerate() {
            assert_eq!(e.token_id(), i);
            assert_eq!(EventType::from_token_id(i), Some(*e));
        }
        assert_eq!(EventType::from_token_id(EventType::VOCAB_SIZE), None);
    }

    #[test]
    fn tokens_round_trip_through_strings() {
        for e in EventType::ALL {
            assert_eq!(EventType::from_str(e.as_str()).unwrap(), e);
        }
        assert!(matches!(
            EventType::from_str("warmup"),
            Err(Error::UnknownEvent { .. })
        ));
    }

    #[test]
    fn modeled_set_excludes_labels_and_pad() {
        assert_eq!(EventType::MODELED.len(), 20);
        for e in [EventType::Goal, EventType::Assist, EventType::Pad] {
            assert!(!EventType::MODELED.contains(&e));
        }
    }
}
