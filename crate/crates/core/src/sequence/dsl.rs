//! Line-oriented pulse-sequence language.
//!
//! ```text
//! # comment
//! pulse C1,C2 180 x                       # angle in degrees, axis x|y|-x|-y|z
//! delay 1/(4*2*J(C1,C2)) couple C1-C2     # only the C1-C2 coupling evolves
//! delay 0.0125                            # full free evolution, seconds
//! grad                                    # crusher gradient
//! ```
//!
//! A `couple` clause lists the couplings that evolve (`A-B,C-D`, or `none`);
//! chemical shifts and unlisted couplings are treated as refocused. Without
//! it the delay runs the complete free Hamiltonian. Delay expressions are
//! described in [`Expr`](super::Expr); constant ones must be positive.

use std::path::Path;

use super::expr::ExprParser;
use super::{PulseEvent, Sequence, SourceSpan};
use crate::density::{Axis, RotationSpec};
use crate::error::{Error, Result};
use crate::spin::{CouplingMask, SpinSystem};

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated words with their 1-based columns.
fn words(s: &str, column0: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(b)) => {
                out.push((column0 + s[..b].chars().count(), &s[b..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(b) = start {
        out.push((column0 + s[..b].chars().count(), &s[b..]));
    }
    out
}

fn valid_label(l: &str) -> bool {
    !l.is_empty() && l.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses DSL text. Labels are checked only for form; use
/// [`parse_sequence_for`] to resolve them against a spin system.
pub fn parse_sequence(text: &str) -> Result<Sequence> {
    let mut seq = Sequence::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let toks = words(body, 1);
        let Some(&(col, keyword)) = toks.first() else {
            continue;
        };
        let event = match keyword {
            "pulse" => parse_pulse(line, col, &toks[1..])?,
            "delay" => parse_delay(line, col, body)?,
            "grad" => {
                if let Some(&(c, extra)) = toks.get(1) {
                    return Err(syntax(line, c, format!("unexpected `{extra}` after grad")));
                }
                PulseEvent::Gradient
            }
            other => return Err(syntax(line, col, format!("unknown keyword `{other}`"))),
        };
        seq.events.push(event);
        seq.spans.push(Some(SourceSpan { line, column: col }));
    }
    Ok(seq)
}

/// Parses and validates every label and delay against `sys`.
pub fn parse_sequence_for(text: &str, sys: &SpinSystem) -> Result<Sequence> {
    let seq = parse_sequence(text)?;
    seq.validate(sys)?;
    Ok(seq)
}

impl Sequence {
    /// Reads a DSL file; the sequence is named after the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Sequence> {
        let path = path.as_ref();
        let mut seq = parse_sequence(&std::fs::read_to_string(path)?)?;
        seq.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(seq)
    }
}

fn parse_pulse(line: usize, col: usize, args: &[(usize, &str)]) -> Result<PulseEvent> {
    let [(lc, labels), (ac, angle), (xc, axis)] = args else {
        let at = args.get(3).map_or(col, |a| a.0);
        return Err(syntax(
            line,
            at,
            "expected `pulse <labels> <angle_deg> <axis>`",
        ));
    };
    let targets: Vec<&str> = labels.split(',').collect();
    if let Some(bad) = targets.iter().find(|l| !valid_label(l)) {
        return Err(syntax(line, *lc, format!("invalid spin label `{bad}`")));
    }
    let degrees: f64 = angle
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite())
        .ok_or_else(|| syntax(line, *ac, format!("invalid angle `{angle}`")))?;
    let axis: Axis = axis
        .parse()
        .map_err(|_| syntax(line, *xc, format!("unknown axis `{axis}`")))?;
    Ok(PulseEvent::Rotation(RotationSpec::new(
        targets,
        axis,
        degrees.to_radians(),
    )?))
}

fn parse_delay(line: usize, col: usize, body: &str) -> Result<PulseEvent> {
    let start = body.find("delay").expect("keyword present") + "delay".len();
    let rest = &body[start..];
    let rest_col = 1 + body[..start].chars().count();
    let toks = words(rest, rest_col);
    let couple_at = toks.iter().position(|&(_, w)| w == "couple");
    let (expr_src, mask) = match couple_at {
        Some(k) => {
            let (kc, _) = toks[k];
            let byte = rest
                .char_indices()
                .nth(kc - rest_col)
                .map_or(rest.len(), |(b, _)| b);
            let list: String = toks[k + 1..].iter().map(|&(_, w)| w).collect();
            if list.is_empty() {
                return Err(syntax(
                    line,
                    kc,
                    "expected coupling pairs or `none` after `couple`",
                ));
            }
            (&rest[..byte], parse_mask(line, toks[k + 1].0, &list)?)
        }
        None => (rest, CouplingMask::Free),
    };
    if expr_src.trim().is_empty() {
        return Err(syntax(line, col, "expected a duration after `delay`"));
    }
    let duration = ExprParser::new(expr_src, line, rest_col).parse()?;
    if let Some(t) = duration.constant_value() {
        if !(t.is_finite() && t > 0.0) {
            return Err(syntax(
                line,
                col,
                format!("delay must be positive, got {t}"),
            ));
        }
    }
    Ok(PulseEvent::delay(duration, mask))
}

fn parse_mask(line: usize, col: usize, list: &str) -> Result<CouplingMask> {
    if list == "none" {
        return Ok(CouplingMask::none());
    }
    let mut pairs = Vec::new();
    for item in list.split(',') {
        match item.split_once('-') {
            Some((a, b)) if valid_label(a) && valid_label(b) && a != b => pairs.push((a, b)),
            _ => return Err(syntax(line, col, format!("invalid coupling pair `{item}`"))),
        }
    }
    Ok(CouplingMask::pairs(pairs))
}
