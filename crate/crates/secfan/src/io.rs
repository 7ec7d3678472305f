//! Text formats: points files, group files, triangulation batch lines,
//! integer vectors, rationals, and input digests.
//!
//! All parsers are strict, allocate nothing surprising, and report
//! one-based line numbers. None of them panic on malformed input.

use num::{BigInt, BigRational, One};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::PointConfiguration;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
}

fn perr(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Strips a trailing `#` comment.
fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Content lines of a text file: comments stripped, blanks skipped,
/// original one-based line numbers kept.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses a points file: one point per line, whitespace-separated
/// integers, `#` comments.
pub fn parse_points(text: &str) -> Result<Vec<Vec<i64>>, IoError> {
    let mut points = Vec::new();
    for (ln, line) in content_lines(text) {
        let row: Result<Vec<i64>, _> = line.split_whitespace().map(str::parse).collect();
        let row = row.map_err(|e| perr(ln, format!("bad coordinate: {e}")))?;
        points.push(row);
    }
    Ok(points)
}

/// Parses a group file: one permutation per line as the images of
/// `0..n-1`, whitespace-separated, `#` comments.
pub fn parse_group(text: &str) -> Result<Vec<Vec<usize>>, IoError> {
    let mut perms = Vec::new();
    for (ln, line) in content_lines(text) {
        let row: Result<Vec<usize>, _> = line.split_whitespace().map(str::parse).collect();
        let row = row.map_err(|e| perr(ln, format!("bad image: {e}")))?;
        perms.push(row);
    }
    Ok(perms)
}

/// Parses one triangulation record: `{{0,2,4},{0,4,5}}`.
///
/// Whitespace is not tolerated; the record format is also the output
/// format and round-trips exactly. Vertex order inside a cell and cell
/// order are not trusted; callers normalize through validation.
pub fn parse_triangulation(line: &str) -> Result<Vec<Vec<usize>>, IoError> {
    parse_triangulation_at(line, 1)
}

fn parse_triangulation_at(line: &str, ln: usize) -> Result<Vec<Vec<usize>>, IoError> {
    let bytes = line.as_bytes();
    let mut cells = Vec::new();
    let mut pos = 0usize;
    let expect = |pos: &mut usize, b: u8| -> Result<(), IoError> {
        if bytes.get(*pos) == Some(&b) {
            *pos += 1;
            Ok(())
        } else {
            Err(perr(
                ln,
                format!("expected '{}' at column {}", b as char, *pos + 1),
            ))
        }
    };
    let parse_num = |pos: &mut usize| -> Result<usize, IoError> {
        let start = *pos;
        while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
            *pos += 1;
        }
        if *pos == start {
            return Err(perr(ln, format!("expected a vertex index at column {}", *pos + 1)));
        }
        line[start..*pos]
            .parse()
            .map_err(|e| perr(ln, format!("bad vertex index: {e}")))
    };
    expect(&mut pos, b'{')?;
    if bytes.get(pos) == Some(&b'}') {
        // `{}` is the empty triangulation record; never valid downstream
        // but parsed so validation owns the rejection.
        return match pos + 1 == bytes.len() {
            true => Ok(cells),
            false => Err(perr(ln, "trailing input after '}'")),
        };
    }
    loop {
        expect(&mut pos, b'{')?;
        let mut cell = Vec::new();
        loop {
            cell.push(parse_num(&mut pos)?);
            match bytes.get(pos) {
                Some(b',') => pos += 1,
                Some(b'}') => {
                    pos += 1;
                    break;
                }
                _ => return Err(perr(ln, format!("expected ',' or '}}' at column {}", pos + 1))),
            }
        }
        cells.push(cell);
        match bytes.get(pos) {
            Some(b',') => pos += 1,
            Some(b'}') => {
                pos += 1;
                break;
            }
            _ => return Err(perr(ln, format!("expected ',' or '}}' at column {}", pos + 1))),
        }
    }
    if pos != bytes.len() {
        return Err(perr(ln, "trailing input after '}'"));
    }
    Ok(cells)
}

/// Parses a batch file: one triangulation per line, `#` comments.
/// Returns (line number, cells) pairs.
pub fn parse_batch(text: &str) -> Result<Vec<(usize, Vec<Vec<usize>>)>, IoError> {
    let mut out = Vec::new();
    for (ln, line) in content_lines(text) {
        out.push((ln, parse_triangulation_at(line, ln)?));
    }
    Ok(out)
}

/// Parses an integer vector `(a,b,c)`; negative entries allowed.
pub fn parse_vector(line: &str) -> Result<Vec<i64>, IoError> {
    parse_vector_at(line, 1)
}

pub(crate) fn parse_vector_at(line: &str, ln: usize) -> Result<Vec<i64>, IoError> {
    let inner = line
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| perr(ln, "vector must be parenthesized"))?;
    if inner.is_empty() {
        return Err(perr(ln, "empty vector"));
    }
    inner
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|e| perr(ln, format!("bad vector entry: {e}")))
        })
        .collect()
}

/// Formats an integer vector as `(a,b,c)`.
pub fn format_vector(v: &[i64]) -> String {
    let body: Vec<String> = v.iter().map(i64::to_string).collect();
    format!("({})", body.join(","))
}

/// Parses `(a,b/c,d)` into rationals.
pub fn parse_rational_vector(line: &str) -> Result<Vec<BigRational>, IoError> {
    parse_rational_vector_at(line, 1)
}

pub(crate) fn parse_rational_vector_at(
    line: &str,
    ln: usize,
) -> Result<Vec<BigRational>, IoError> {
    let inner = line
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| perr(ln, "vector must be parenthesized"))?;
    if inner.is_empty() {
        return Err(perr(ln, "empty vector"));
    }
    inner
        .split(',')
        .map(|t| parse_rational(t.trim(), ln))
        .collect()
}

pub fn format_rational_vector(v: &[BigRational]) -> String {
    let body: Vec<String> = v.iter().map(format_rational).collect();
    format!("({})", body.join(","))
}

/// Parses a braced index tuple `{0,4,5}`.
pub fn parse_index_tuple(line: &str) -> Result<Vec<usize>, IoError> {
    parse_index_tuple_at(line, 1)
}

pub(crate) fn parse_index_tuple_at(line: &str, ln: usize) -> Result<Vec<usize>, IoError> {
    let inner = line
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| perr(ln, "tuple must be braced"))?;
    if inner.is_empty() {
        return Err(perr(ln, "empty tuple"));
    }
    inner
        .split(',')
        .map(|t| {
            t.parse()
                .map_err(|e| perr(ln, format!("bad tuple entry: {e}")))
        })
        .collect()
}

/// Parses `num` or `num/den` into a reduced rational.
pub(crate) fn parse_rational(tok: &str, ln: usize) -> Result<BigRational, IoError> {
    let (ns, ds) = match tok.split_once('/') {
        Some((n, d)) => (n, d),
        None => (tok, ""),
    };
    let num: BigInt = ns
        .parse()
        .map_err(|e| perr(ln, format!("bad rational numerator: {e}")))?;
    let den: BigInt = if ds.is_empty() {
        BigInt::one()
    } else {
        ds.parse()
            .map_err(|e| perr(ln, format!("bad rational denominator: {e}")))?
    };
    if den == BigInt::from(0) {
        return Err(perr(ln, "zero denominator"));
    }
    Ok(BigRational::new(num, den))
}

pub(crate) fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of a configuration: the raw points in input order.
pub fn config_digest(cfg: &PointConfiguration) -> String {
    let mut h = Sha256::new();
    for p in cfg.raw() {
        let line: Vec<String> = p.iter().map(i64::to_string).collect();
        h.update(line.join(" ").as_bytes());
        h.update(b"\n");
    }
    hex(&h.finalize())
}

/// Digest of a group: its sorted full element list, so the digest does
/// not depend on the generating set presented.
pub fn group_digest(elements: &[Vec<usize>]) -> String {
    let mut lines: Vec<String> = elements
        .iter()
        .map(|g| {
            let imgs: Vec<String> = g.iter().map(usize::to_string).collect();
            imgs.join(" ")
        })
        .collect();
    lines.sort();
    let mut h = Sha256::new();
    for l in &lines {
        h.update(l.as_bytes());
        h.update(b"\n");
    }
    hex(&h.finalize())
}

/// Reads a file into a string with the path attached to any error.
pub fn read_file(path: &str) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_string(),
        source,
    })
}
