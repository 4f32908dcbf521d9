//! JSON action files.
//!
//! ```text
//! {
//!   "group": {"rank": 2},
//!   "measure": [{"word": "a", "prob": 0.25}, ...],
//!   "cells": [{"id": "a", "weight": 0.25}, ...],
//!   "transports": {"a": [{"src": "a", "dst": "a", "T": ..., "W": ...}], ...},
//!   "kind": "markov",
//!   "meta": {"ergodic": true, "inexact": []}
//! }
//! ```
//!
//! Reals are written as decimals with 17 significant digits, and transports
//! are listed in enumeration order of their words, so reading a file and
//! writing it back reproduces it byte for byte. `meta` is optional.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::action::{ActionKind, Cell, CellAction, TransportPiece, WordTransport};
use crate::error::{Error, Result};
use crate::words::{GroupWord, StepDistribution, MAX_RANK};

/// Decimal rendering of `x` with 17 significant digits. Very large or small
/// magnitudes fall back to exponent notation, and both zeros print as `0.0`.
pub fn format_f64(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0.0".into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-20..=20).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let mut out = String::from(sign);
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            for _ in digits.len()..int_len {
                out.push('0');
            }
            out.push_str(".0");
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

/// Pretty JSON with fixed-precision reals.
struct PreciseFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.inner.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl serde_json::ser::Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

#[derive(Serialize, Deserialize)]
struct GroupFile {
    rank: usize,
}

#[derive(Serialize, Deserialize)]
struct MeasureEntry {
    word: String,
    prob: f64,
}

#[derive(Serialize, Deserialize)]
struct CellEntry {
    id: String,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct PieceEntry {
    src: String,
    dst: String,
    #[serde(rename = "T")]
    t: f64,
    #[serde(rename = "W")]
    w: f64,
}

#[derive(Serialize, Deserialize, Default)]
struct MetaFile {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    ergodic: Option<bool>,
    #[serde(default)]
    inexact: Vec<String>,
}

/// Transports in word order.
struct OrderedTransports(Vec<(String, Vec<PieceEntry>)>);

impl Serialize for OrderedTransports {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct ActionFileOut<'a> {
    group: GroupFile,
    measure: Vec<MeasureEntry>,
    cells: Vec<CellEntry>,
    transports: OrderedTransports,
    kind: &'a str,
    meta: MetaFile,
}

#[derive(Deserialize)]
struct ActionFileIn {
    group: GroupFile,
    measure: Vec<MeasureEntry>,
    cells: Vec<CellEntry>,
    transports: BTreeMap<String, Vec<PieceEntry>>,
    kind: String,
    #[serde(default)]
    meta: Option<MetaFile>,
}

/// Serializes with the precise float formatter.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = PreciseFormatter {
        inner: serde_json::ser::PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn action_to_json(action: &CellAction) -> Result<String> {
    let cells = action.cells();
    let out = ActionFileOut {
        group: GroupFile {
            rank: action.rank(),
        },
        measure: action
            .measure()
            .entries()
            .iter()
            .map(|(w, p)| MeasureEntry {
                word: w.to_string(),
                prob: *p,
            })
            .collect(),
        cells: cells
            .iter()
            .map(|c| CellEntry {
                id: c.id.clone(),
                weight: c.weight,
            })
            .collect(),
        transports: OrderedTransports(
            action
                .stored_transports()
                .map(|t| {
                    (
                        t.word.to_string(),
                        t.pieces
                            .iter()
                            .map(|p| PieceEntry {
                                src: cells[p.source].id.clone(),
                                dst: cells[p.target].id.clone(),
                                t: p.source_mass,
                                w: p.image_mass,
                            })
                            .collect(),
                    )
                })
                .collect(),
        ),
        kind: action.kind().as_str(),
        meta: MetaFile {
            ergodic: action.ergodic(),
            inexact: action
                .stored_transports()
                .filter(|t| !t.exact)
                .map(|t| t.word.to_string())
                .collect(),
        },
    };
    to_json_string(&out)
}

pub fn action_from_json(text: &str) -> Result<CellAction> {
    let file: ActionFileIn = serde_json::from_str(text)?;
    let rank = file.group.rank;
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::Malformed(format!("unsupported rank {rank}")));
    }
    let measure = StepDistribution::new(
        rank,
        file.measure
            .iter()
            .map(|e| Ok((GroupWord::parse(rank, &e.word)?, e.prob)))
            .collect::<Result<_>>()?,
    )?;
    let cells: Vec<Cell> = file
        .cells
        .into_iter()
        .map(|c| Cell::new(c.id, c.weight))
        .collect();
    let index: BTreeMap<&str, usize> = cells
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.as_str(), i))
        .collect();
    let lookup = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| Error::Malformed(format!("unknown cell id `{id}`")))
    };
    let meta = file.meta.unwrap_or_default();
    let inexact: Vec<GroupWord> = meta
        .inexact
        .iter()
        .map(|w| GroupWord::parse(rank, w))
        .collect::<Result<_>>()?;
    let mut transports = Vec::with_capacity(file.transports.len());
    for (word, pieces) in &file.transports {
        let word = GroupWord::parse(rank, word)?;
        let pieces = pieces
            .iter()
            .map(|p| {
                Ok(TransportPiece::new(
                    lookup(&p.src)?,
                    lookup(&p.dst)?,
                    p.t,
                    p.w,
                ))
            })
            .collect::<Result<_>>()?;
        let exact = !inexact.contains(&word);
        transports.push(WordTransport {
            word,
            pieces,
            exact,
        });
    }
    let kind = ActionKind::parse(&file.kind)?;
    Ok(CellAction::new(cells, measure, transports, kind)?.with_ergodic(meta.ergodic))
}

pub fn read_action(path: impl AsRef<Path>) -> Result<CellAction> {
    let text = std::fs::read_to_string(path.as_ref())?;
    action_from_json(&text)
}

pub fn write_action(path: impl AsRef<Path>, action: &CellAction) -> Result<()> {
    std::fs::write(path, action_to_json(action)?)?;
    Ok(())
}
