//! Parsing of raw event streams in CSV or JSONL form.
//!
//! Expected CSV header (JSONL uses the same keys):
//! `game_id,period,clock_s,team_side,event_type,x,y,player_role,is_shootout`

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::events::{EventRecord, EventType, PlayerRole, TeamSide};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamFormat {
    Csv,
    Jsonl,
}

/// Untyped row; string fields are validated separately so errors can name
/// the offending token and line.
#[derive(Debug, Deserialize)]
struct RawRow {
    game_id: String,
    period: u8,
    clock_s: f64,
    team_side: String,
    event_type: String,
    x: f64,
    y: f64,
    player_role: String,
    is_shootout: bool,
}

/// Parse an event stream into records, preserving file order.
///
/// Shootout rows are retained (flagged by `is_shootout`); filtering happens
/// later at windowing. Malformed rows and tokens outside the closed event
/// vocabulary are errors carrying the 1-based line number.
pub fn parse_events<R: Read>(reader: R, format: StreamFormat) -> Result<Vec<EventRecord>> {
    let rows = match format {
        StreamFormat::Csv => parse_csv(reader)?,
        StreamFormat::Jsonl => parse_jsonl(reader)?,
    };

    // clock_s must be nondecreasing within each game.
    let mut last_clock: HashMap<String, f64> = HashMap::new();
    for (line, rec) in &rows {
        if let Some(&prev) = last_clock.get(&rec.game_id) {
            if rec.clock_s < prev {
                return Err(Error::Parse {
                    line: *line,
                    msg: format!(
                        "clock_s {} goes backwards (previous {}) in game {}",
                        rec.clock_s, prev, rec.game_id
                    ),
                });
            }
        }
        last_clock.insert(rec.game_id.clone(), rec.clock_s);
    }

    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn convert(raw: RawRow, line: usize) -> Result<EventRecord> {
    let event_type = EventType::from_str(&raw.event_type)
        .map_err(|_| Error::UnknownEvent { token: raw.event_type.clone() })?;
    let team_side = TeamSide::from_str(&raw.team_side).map_err(|e| Error::Parse {
        line,
        msg: e.to_string(),
    })?;
    let player_role = PlayerRole::from_str(&raw.player_role).map_err(|e| Error::Parse {
        line,
        msg: e.to_string(),
    })?;
    if raw.period == 0 {
        return Err(Error::Parse {
            line,
            msg: "period must be >= 1".into(),
        });
    }
    if raw.clock_s < 0.0 || !raw.clock_s.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("clock_s {} must be finite and >= 0", raw.clock_s),
        });
    }
    Ok(EventRecord {
        game_id: raw.game_id,
        period: raw.period,
        clock_s: raw.clock_s,
        team_side,
        event_type,
        x: raw.x,
        y: raw.y,
        player_role,
        is_shootout: raw.is_shootout,
        standardized: false,
    })
}

fn parse_csv<R: Read>(reader: R) -> Result<Vec<(usize, EventRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut out = Vec::new();
    for result in rdr.deserialize::<RawRow>() {
        match result {
            Ok(raw) => {
                // csv positions point at the start of the record just read.
                let line = out.len() + 2; // +1 header, +1 one-based
                out.push((line, convert(raw, line)?));
            }
            Err(e) => {
                let line = e
                    .position()
                    .map(|p| p.line() as usize)
                    .unwrap_or(out.len() + 2);
                return Err(Error::Parse { line, msg: e.to_string() });
            }
        }
    }
    Ok(out)
}

fn parse_jsonl<R: Read>(reader: R) -> Result<Vec<(usize, EventRecord)>> {
    let buf = BufReader::new(reader);
    let mut out = Vec::new();
    for (idx, line) in buf.lines().enumerate() {
        let line_no = idx + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let raw: RawRow = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        out.push((line_no, convert(raw, line_no)?));
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "game_id,period,clock_s,team_side,event_type,x,y,player_role,is_shootout";
