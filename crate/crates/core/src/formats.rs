//! Text formats for colourings, simplicial labelings and box covers.
//!
//! Blank lines and lines starting with `#` are ignored everywhere.
//!
//! ```text
//! cubical n=2 N=2
//! 0,0 -> 0
//! 0,1 -> 2
//! ...
//!
//! simplicial d=2 m=2
//! 2,0,0 -> 0
//! ...
//!
//! cover N=2
//! member 0
//! axis_0 lo 0 closed hi 2/3 open
//! axis_1 lo 0 closed hi 1 closed
//! ```
//!
//! A cover member holds one box per run of `N` axis lines.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::covers::{q, BoxCover, CoverError, CoverMember, Interval, RationalBox, Q};
use crate::labelings::{ColourId, Colouring, LabelingError, SimplicialColouring, SimplicialComplex};
use crate::lattice::{Grid, Index, LatticeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: index {index} appears twice")]
    DuplicateIndex { line: usize, index: String },
    #[error("no colour given for index {0}")]
    MissingIndex(String),
    #[error("line {line}: label {label} appears twice")]
    DuplicateLabel { line: usize, label: u64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
    #[error(transparent)]
    Cover(#[from] CoverError),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

/// Non-empty, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn header_fields<'a>(line: usize, text: &'a str, keyword: &str, keys: &[&str]) -> Result<Vec<&'a str>, FormatError> {
    let mut parts = text.split_whitespace();
    if parts.next() != Some(keyword) {
        return Err(syntax(line, format!("expected header `{keyword} ...`")));
    }
    let rest: Vec<&str> = parts.collect();
    keys.iter()
        .map(|key| {
            rest.iter()
                .find_map(|p| p.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .ok_or_else(|| syntax(line, format!("header is missing `{key}=`")))
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(line: usize, text: &str, what: &str) -> Result<T, FormatError> {
    text.trim()
        .parse()
        .map_err(|_| syntax(line, format!("cannot read {what} from `{text}`")))
}

fn parse_entry(line: usize, text: &str) -> Result<(Vec<u32>, u64), FormatError> {
    let (lhs, rhs) = text
        .split_once("->")
        .ok_or_else(|| syntax(line, "expected `coords -> value`"))?;
    let coords = lhs
        .split(',')
        .map(|c| parse_num(line, c, "coordinate"))
        .collect::<Result<Vec<u32>, _>>()?;
    Ok((coords, parse_num(line, rhs, "value")?))
}

pub fn write_colouring(phi: &Colouring) -> String {
    let grid = phi.grid();
    let mut out = format!("cubical n={} N={}\n", grid.bound(), grid.dim());
    for (rank, idx) in grid.iter().enumerate() {
        let coords: Vec<String> = idx.coords().iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{} -> {}", coords.join(","), phi.colour_at_rank(rank).0);
    }
    out
}

pub fn parse_colouring(text: &str) -> Result<Colouring, FormatError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    let f = header_fields(hline, header, "cubical", &["n", "N"])?;
    let grid = Grid::new(parse_num(hline, f[1], "N")?, parse_num(hline, f[0], "n")?)?;
    let mut colours: Vec<Option<ColourId>> = vec![None; grid.len()];
    for (line, text) in lines {
        let (coords, colour) = parse_entry(line, text)?;
        if coords.len() != grid.dim() {
            return Err(syntax(line, format!("expected {} coordinates", grid.dim())));
        }
        let idx = Index::new(grid.bound(), coords).map_err(|e| syntax(line, e.to_string()))?;
        let slot = &mut colours[grid.rank(&idx)];
        if slot.is_some() {
            return Err(FormatError::DuplicateIndex {
                line,
                index: idx.to_string(),
            });
        }
        *slot = Some(ColourId(colour));
    }
    let mut out = Vec::with_capacity(grid.len());
    for (rank, c) in colours.into_iter().enumerate() {
        out.push(c.ok_or_else(|| FormatError::MissingIndex(grid.unrank(rank).to_string()))?);
    }
    Ok(Colouring::from_vec(grid, out)?)
}

pub fn write_simplicial(phi: &SimplicialColouring) -> String {
    let c = phi.complex();
    let mut out = format!("simplicial d={} m={}\n", c.dim(), c.scale());
    for (v, label) in c.vertices().iter().zip(phi.labels()) {
        let coords: Vec<String> = v.iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{} -> {label}", coords.join(","));
    }
    out
}

pub fn parse_simplicial(text: &str) -> Result<SimplicialColouring, FormatError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    let f = header_fields(hline, header, "simplicial", &["d", "m"])?;
    let complex = SimplicialComplex::new(parse_num(hline, f[0], "d")?, parse_num(hline, f[1], "m")?)?;
    let mut labels: Vec<Option<u32>> = vec![None; complex.vertices().len()];
    for (line, text) in lines {
        let (coords, label) = parse_entry(line, text)?;
        let v = complex
            .vertex_index(&coords)
            .ok_or_else(|| syntax(line, format!("{coords:?} is not a vertex")))?;
        if labels[v].is_some() {
            return Err(FormatError::DuplicateIndex {
                line,
                index: format!("{coords:?}"),
            });
        }
        labels[v] = Some(u32::try_from(label).map_err(|_| syntax(line, "label too large"))?);
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| FormatError::MissingIndex(format!("{:?}", complex.vertices()[i]))))
        .collect::<Result<Vec<u32>, _>>()?;
    Ok(SimplicialColouring::new(complex, labels)?)
}

pub fn write_cover(cover: &BoxCover) -> String {
    let mut out = format!("cover N={}\n", cover.dim());
    for m in cover.members() {
        let _ = writeln!(out, "member {}", m.label);
        for b in &m.region {
            for (i, iv) in b.axes().iter().enumerate() {
                let end = |open: bool| if open { "open" } else { "closed" };
                let _ = writeln!(
                    out,
                    "axis_{i} lo {} {} hi {} {}",
                    iv.lo,
                    end(iv.lo_open),
                    iv.hi,
                    end(iv.hi_open)
                );
            }
        }
    }
    out
}

fn parse_q(line: usize, text: &str) -> Result<Q, FormatError> {
    let bad = || syntax(line, format!("cannot read a rational from `{text}`"));
    match text.split_once('/') {
        Some((a, b)) => {
            let a: i64 = a.parse().map_err(|_| bad())?;
            let b: i64 = b.parse().map_err(|_| bad())?;
            if b == 0 {
                return Err(bad());
            }
            Ok(q(a, b))
        }
        None => Ok(Q::from_integer(text.parse().map_err(|_| bad())?)),
    }
}

fn parse_openness(line: usize, text: &str) -> Result<bool, FormatError> {
    match text {
        "open" => Ok(true),
        "closed" => Ok(false),
        other => Err(syntax(line, format!("expected `open` or `closed`, found `{other}`"))),
    }
}

pub fn parse_cover(text: &str) -> Result<BoxCover, FormatError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    let f = header_fields(hline, header, "cover", &["N"])?;
    let dim: usize = parse_num(hline, f[0], "N")?;
    let mut members: Vec<CoverMember> = Vec::new();
    let mut labels = HashSet::new();
    let mut pending: Vec<Interval> = Vec::new();
    let mut pending_line = hline;
    let flush = |members: &mut Vec<CoverMember>, pending: &mut Vec<Interval>, line: usize| -> Result<(), FormatError> {
        if pending.is_empty() {
            return Ok(());
        }
        if pending.len() != dim {
            return Err(syntax(line, format!("box has {} axis lines, expected {dim}", pending.len())));
        }
        let bx = RationalBox::new(std::mem::take(pending)).map_err(|e| syntax(line, e.to_string()))?;
        members
            .last_mut()
            .ok_or_else(|| syntax(line, "axis line before any `member`"))?
            .region
            .push(bx);
        Ok(())
    };
    for (line, text) in lines {
        let words: Vec<&str> = text.split_whitespace().collect();
        match words.as_slice() {
            ["member", label] => {
                flush(&mut members, &mut pending, pending_line)?;
                let label: u64 = parse_num(line, label, "label")?;
                if !labels.insert(label) {
                    return Err(FormatError::DuplicateLabel { line, label });
                }
                members.push(CoverMember {
                    label,
                    region: Vec::new(),
                });
            }
            [axis, "lo", lo, lo_open, "hi", hi, hi_open] => {
                let axis: usize = axis
                    .strip_prefix("axis_")
                    .ok_or_else(|| syntax(line, "expected `axis_<i>`"))
                    .and_then(|a| parse_num(line, a, "axis"))?;
                if axis != pending.len() {
                    if axis == 0 {
                        flush(&mut members, &mut pending, pending_line)?;
                    } else {
                        return Err(syntax(line, format!("expected axis_{}, found axis_{axis}", pending.len())));
                    }
                }
                if members.is_empty() {
                    return Err(syntax(line, "axis line before any `member`"));
                }
                if pending.is_empty() {
                    pending_line = line;
                }
                pending.push(Interval::new(
                    parse_q(line, lo)?,
                    parse_openness(line, lo_open)?,
                    parse_q(line, hi)?,
                    parse_openness(line, hi_open)?,
                ));
                if pending.len() == dim {
                    flush(&mut members, &mut pending, line)?;
                }
            }
            _ => return Err(syntax(line, format!("unrecognised line `{text}`"))),
        }
    }
    flush(&mut members, &mut pending, pending_line)?;
    if let Some(m) = members.iter().find(|m| m.region.is_empty()) {
        return Err(FormatError::Cover(CoverError::EmptyMember(m.label)));
    }
    Ok(BoxCover::new(dim, members)?)
}
