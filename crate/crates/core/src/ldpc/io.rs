//! Plain-text code files.
//!
//! ```text
//! # comment lines are allowed in the header
//! q = 5
//! poly = 0x25
//! n = 1000
//! m = 300
//! profile = regular(2)
//! seed = 42
//! label_seed = 43
//! ---
//! 12:5 310:17 644:2 ...
//! ```
//!
//! After the `---` separator come exactly `m` lines, one per check, each a
//! space-separated list of `column:label` pairs. `seed` and `label_seed`
//! may be `none`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{CodeError, Lineage, Profile, SparseParityCheck};
use crate::gf::{GaloisField, Symbol};

const SEPARATOR: &str = "---";
const HEADER_KEYS: [&str; 7] = ["q", "poly", "n", "m", "profile", "seed", "label_seed"];

#[derive(Debug, Error)]
pub enum ParseError {
    /// `line` and `column` are 1-based.
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("code file is inconsistent: {0}")]
    Invalid(#[from] CodeError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, column, message: message.into() }
}

impl SparseParityCheck {
    pub fn to_text(&self) -> String {
        let seed = |s: Option<u64>| s.map_or_else(|| "none".to_string(), |v| v.to_string());
        let mut out = String::new();
        out.push_str("# non-binary LDPC parity-check matrix\n");
        let _ = writeln!(out, "q = {}", self.field().q());
        let _ = writeln!(out, "poly = {:#x}", self.field().poly());
        let _ = writeln!(out, "n = {}", self.n());
        let _ = writeln!(out, "m = {}", self.m());
        let _ = writeln!(out, "profile = {}", self.profile());
        let _ = writeln!(out, "seed = {}", seed(self.lineage().peg_seed));
        let _ = writeln!(out, "label_seed = {}", seed(self.lineage().label_seed));
        out.push_str(SEPARATOR);
        out.push('\n');
        for row in self.rows() {
            for (i, (c, l)) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{c}:{l}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ParseError> {
        parse(text)
    }
}

fn parse(text: &str) -> Result<SparseParityCheck, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header: HashMap<&str, (usize, usize, &str)> = HashMap::new();
    let mut separator_line = None;
    for (no, line) in lines.by_ref() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if trimmed == SEPARATOR {
            separator_line = Some(no);
            break;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| syntax(no, 1, "expected `key = value` or `---`"))?;
        let key = key.trim();
        if !HEADER_KEYS.contains(&key) {
            return Err(syntax(no, 1, format!("unknown header key {key:?}")));
        }
        let value_col = line.find('=').unwrap() + 2;
        if header.insert(key, (no, value_col, value.trim())).is_some() {
            return Err(syntax(no, 1, format!("header key {key:?} repeated")));
        }
    }
    let separator_line =
        separator_line.ok_or_else(|| syntax(text.lines().count() + 1, 1, "missing `---` separator"))?;

    let get = |key: &str| {
        header.get(key).copied().ok_or_else(|| syntax(separator_line, 1, format!("missing header key {key:?}")))
    };
    fn number<T: std::str::FromStr>((line, col, v): (usize, usize, &str), what: &str) -> Result<T, ParseError> {
        v.parse().map_err(|_| syntax(line, col, format!("cannot parse {what} from {v:?}")))
    }
    let q: u32 = number(get("q")?, "field exponent")?;
    let (pl, pc, pv) = get("poly")?;
    let poly = pv
        .strip_prefix("0x")
        .and_then(|h| u32::from_str_radix(h, 16).ok())
        .ok_or_else(|| syntax(pl, pc, format!("poly must be hexadecimal like 0x25, got {pv:?}")))?;
    let field = GaloisField::with_poly(q, poly).map_err(|e| syntax(pl, pc, e.to_string()))?;
    let n: usize = number(get("n")?, "n")?;
    let m: usize = number(get("m")?, "m")?;
    let (fl, fc, fv) = get("profile")?;
    let profile: Profile = fv.parse().map_err(|e: CodeError| syntax(fl, fc, e.to_string()))?;
    let seed = |key: &str| -> Result<Option<u64>, ParseError> {
        match header.get(key) {
            None => Ok(None),
            Some(&(_, _, "none")) => Ok(None),
            Some(&entry) => number(entry, key).map(Some),
        }
    };
    let lineage = Lineage { peg_seed: seed("seed")?, label_seed: seed("label_seed")? };

    let mut rows = Vec::with_capacity(m);
    for (no, line) in lines {
        if rows.len() == m {
            if line.trim().is_empty() {
                continue;
            }
            return Err(syntax(no, 1, format!("more than m = {m} rows")));
        }
        rows.push(parse_row(no, line, n, &field)?);
    }
    if rows.len() != m {
        return Err(syntax(text.lines().count() + 1, 1, format!("expected {m} rows, found {}", rows.len())));
    }
    Ok(SparseParityCheck::from_rows(field, n, rows, profile, lineage)?)
}

fn parse_row(no: usize, line: &str, n: usize, field: &GaloisField) -> Result<Vec<(u32, Symbol)>, ParseError> {
    let mut row: Vec<(u32, Symbol)> = Vec::new();
    let mut offset = 0;
    for token in line.split(' ') {
        let col_pos = offset + 1;
        offset += token.len() + 1;
        if token.is_empty() {
            continue;
        }
        let (c, l) = token
            .split_once(':')
            .ok_or_else(|| syntax(no, col_pos, format!("expected column:label, got {token:?}")))?;
        let c: u32 = c.parse().map_err(|_| syntax(no, col_pos, format!("bad column index {c:?}")))?;
        let l: u32 = l.parse().map_err(|_| syntax(no, col_pos, format!("bad label {l:?}")))?;
        if c as usize >= n {
            return Err(syntax(no, col_pos, format!("column {c} out of range for n = {n}")));
        }
        if l == 0 || !field.contains(l) {
            return Err(syntax(no, col_pos, format!("label {l} is not a nonzero element of GF(2^{})", field.q())));
        }
        if row.iter().any(|&(x, _)| x == c) {
            return Err(syntax(no, col_pos, format!("duplicate column {c} in row")));
        }
        row.push((c, l as Symbol));
    }
    Ok(row)
}

pub fn write_code(code: &SparseParityCheck, path: impl AsRef<Path>) -> Result<(), ParseError> {
    let path = path.as_ref();
    std::fs::write(path, code.to_text()).map_err(|source| ParseError::Io { path: path.display().to_string(), source })
}

pub fn read_code(path: impl AsRef<Path>) -> Result<SparseParityCheck, ParseError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| ParseError::Io { path: path.display().to_string(), source })?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ldpc::{assign_labels, named_profile, peg_construct, PegConfig};

    fn code() -> SparseParityCheck {
        let skel = peg_construct(30, 12, &Profile::Regular { dv: 2 }, &PegConfig::new(8)).unwrap();
        assign_labels(&skel, &GaloisField::new(3).unwrap(), 9).unwrap()
    }

    #[test]
    fn round_trip_regular_and_irregular() {
        let c = code();
        assert_eq!(SparseParityCheck::from_text(&c.to_text()).unwrap(), c);

        let (q, dist, _) = named_profile("gf16-r085").unwrap();
        let skel = peg_construct(200, 30, &Profile::Irregular(dist), &PegConfig::new(1)).unwrap();
        let c = assign_labels(&skel, &GaloisField::new(q).unwrap(), 2).unwrap();
        let text = c.to_text();
        assert!(text.contains("poly = 0x13\n"));
        assert_eq!(SparseParityCheck::from_text(&text).unwrap(), c);
    }

    #[test]
    fn header_fields_are_exact() {
        let text = code().to_text();
        let header: Vec<&str> = text.lines().take_while(|l| *l != "---").collect();
        assert_eq!(
            &header[1..],
            &["q = 3", "poly = 0xb", "n = 30", "m = 12", "profile = regular(2)", "seed = 8", "label_seed = 9"]
        );
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("nbrecon-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.code");
        let c = code();
        write_code(&c, &path).unwrap();
        assert_eq!(read_code(&path).unwrap(), c);
        std::fs::remove_dir_all(&dir).unwrap();
        assert!(matches!(read_code(&path), Err(ParseError::Io { .. })));
    }

    fn tamper(f: impl Fn(&mut Vec<String>)) -> ParseError {
        let mut lines: Vec<String> = code().to_text().lines().map(String::from).collect();
        f(&mut lines);
        SparseParityCheck::from_text(&lines.join("\n")).unwrap_err()
    }

    #[test]
    fn rejects_label_outside_field() {
        let err = tamper(|l| {
            let row = &mut l[9];
            let (first, rest) = row.split_once(' ').unwrap();
            let col = first.split(':').next().unwrap().to_string();
            *row = format!("{rest} {col}:8");
        });
        match err {
            ParseError::Syntax { line, message, .. } => {
                assert_eq!(line, 10);
                assert!(message.contains("label 8"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_duplicate_position() {
        let err = tamper(|l| {
            let first = l[9].split(' ').next().unwrap().to_string();
            l[9] = format!("{} {first}", l[9]);
        });
        match err {
            ParseError::Syntax { line, column, message } => {
                assert_eq!(line, 10);
                assert!(column > 1);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_malformed_headers_and_rows() {
        assert!(matches!(tamper(|l| l[1] = "q = five".into()), ParseError::Syntax { line: 2, .. }));
        assert!(matches!(tamper(|l| l[2] = "poly = 0x9".into()), ParseError::Syntax { line: 3, .. }));
        assert!(matches!(tamper(|l| l[1] = "colour = red".into()), ParseError::Syntax { line: 2, .. }));
        assert!(matches!(
            tamper(|l| {
                l.remove(8);
            }),
            ParseError::Syntax { .. }
        ));
        assert!(matches!(
            tamper(|l| {
                l.pop();
            }),
            ParseError::Syntax { .. }
        ));
        assert!(matches!(tamper(|l| l[10] = "3-4".into()), ParseError::Syntax { line: 11, column: 1, .. }));
        assert!(matches!(tamper(|l| l[10] = "999:1".into()), ParseError::Syntax { line: 11, .. }));
        // Structurally valid text that breaks the declared regular profile.
        assert!(matches!(tamper(|l| l[5] = "profile = regular(3)".into()), ParseError::Invalid(_)));
    }
}
