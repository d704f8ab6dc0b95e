//! Event-stream ingestion: parsing, coordinate standardization, window
//! aggregation, and multicollinearity diagnostics.

pub mod parse;
pub mod vif;
pub mod windows;

pub use parse::{parse_events, StreamFormat};
pub use vif::{vif_diagnostics, VifEntry, VifReport};
pub use windows::{build_windows, RolePositions, WindowFeatures};

use crate::events::{EventRecord, TeamSide};

/// Map every event onto the common attack frame where the attacking flow
/// points toward positive x.
///
/// Home attacks right in odd periods and left in even periods; away is the
/// mirror image. Rows already standardized are left untouched, so applying
/// the transform twice equals applying it once.
pub fn standardize_coordinates(events: Vec<EventRecord>) -> Vec<EventRecord> {
    events
        .into_iter()
        .map(|mut e| {
            if !e.standardized {
                if attacks_left(e.period, e.team_side) {
                    e.x = -e.x;
                    e.y = -e.y;
                }
                e.standardized = true;
            }
            e
        })
        .collect()
}

pub(crate) fn attacks_left(period: u8, side: TeamSide) -> bool {
    let even_period = period % 2 == 0;
    even_period == (side == TeamSide::Home)
}
