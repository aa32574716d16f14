//! Instance text format.
//!
//! ```text
//! # comment
//! n m
//! i j v      (m lines, 1-based, i <= j; i > j is accepted and swapped)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. A position listed
//! twice must carry the same value both times.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use crate::error::{Error, Result};
use crate::instance::QuboInstance;

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        message: message.into(),
    })
}

fn field<T: std::str::FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    match token {
        None => parse_err(line, format!("missing {what}")),
        Some(t) => t
            .parse()
            .or_else(|_| parse_err(line, format!("invalid {what} {t:?}"))),
    }
}

/// Parses an instance from text.
pub fn parse_instance(text: &str) -> Result<QuboInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let Some((header_line, header)) = lines.next() else {
        return parse_err(1, "missing header line \"n m\"");
    };
    let mut tokens = header.split_whitespace();
    let n: usize = field(tokens.next(), header_line, "variable count")?;
    let m: usize = field(tokens.next(), header_line, "entry count")?;
    if tokens.next().is_some() {
        return parse_err(header_line, "trailing fields in header");
    }
    if n == 0 {
        return parse_err(header_line, "variable count must be at least 1");
    }

    let mut values: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut seen = 0;
    for (line, text) in lines {
        seen += 1;
        if seen > m {
            return parse_err(line, format!("more than the declared {m} entries"));
        }
        let mut tokens = text.split_whitespace();
        let i: usize = field(tokens.next(), line, "row index")?;
        let j: usize = field(tokens.next(), line, "column index")?;
        let v: f64 = field(tokens.next(), line, "value")?;
        if tokens.next().is_some() {
            return parse_err(line, "trailing fields");
        }
        if !v.is_finite() {
            return parse_err(line, "value is not finite");
        }
        for idx in [i, j] {
            if idx == 0 || idx > n {
                return parse_err(line, format!("index {idx} out of range 1..={n}"));
            }
        }
        let key = if i <= j {
            (i - 1, j - 1)
        } else {
            (j - 1, i - 1)
        };
        if let Some(&prev) = values.get(&key) {
            if prev != v {
                return parse_err(
                    line,
                    format!("entry ({i}, {j}) = {v} conflicts with earlier value {prev}"),
                );
            }
        }
        values.insert(key, v);
    }
    if seen < m {
        return parse_err(
            text.lines().count().max(1),
            format!("expected {m} entries, found {seen}"),
        );
    }
    QuboInstance::new(n, values.into_iter().map(|((i, j), v)| (i, j, v)))
}

/// Reads and parses an instance from any reader.
pub fn read_instance<R: Read>(mut reader: R) -> Result<QuboInstance> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_instance(&text)
}

/// Serializes an instance, entries sorted by `(i, j)`, 1-based.
pub fn write_instance(instance: &QuboInstance) -> String {
    let mut out = String::new();
    if let Some(name) = instance.name() {
        let _ = writeln!(out, "# {name}");
    }
    let _ = writeln!(out, "{} {}", instance.n(), instance.nnz());
    for c in instance.entries() {
        let _ = writeln!(out, "{} {} {}", c.i + 1, c.j + 1, c.value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parses_small_instances() {
        let q = parse_instance("2 3\n1 1 1\n2 2 2\n1 2 -3\n").unwrap();
        assert_eq!(q.n(), 2);
        assert_eq!((q.get(0, 0), q.get(1, 1), q.get(0, 1)), (1.0, 2.0, -3.0));

        let q = parse_instance("1 1\n1 1 5\n").unwrap();
        assert_eq!(q.n(), 1);
        assert_eq!(q.get(0, 0), 5.0);
    }

    #[test]
    fn rejects_index_out_of_range() {
        match parse_instance("2 1\n1 3 4\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(
            parse_instance("2 1\n0 1 4\n"),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn comments_blank_lines_and_swapped_indices() {
        let q = parse_instance("# header\n\n3 2\n# body\n3 1 7\n\n2 2 -1\n").unwrap();
        assert_eq!(q.get(0, 2), 7.0);
        assert_eq!(q.get(1, 1), -1.0);
    }

    #[test]
    fn symmetric_duplicates_collapse_conflicts_fail() {
        let q = parse_instance("2 2\n1 2 4\n2 1 4\n").unwrap();
        assert_eq!(q.nnz(), 1);
        assert!(matches!(
            parse_instance("2 2\n1 2 4\n2 1 5\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn malformed_lines_name_the_line() {
        assert!(matches!(parse_instance(""), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_instance("0 0\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_instance("2 1\n1 x 3\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_instance("2 1\n1 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_instance("2 2\n1 1 1\n"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_instance("2 1\n1 1 1\n2 2 1\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn writer_round_trips() {
        let q = fixtures::five_variable_example();
        let text = write_instance(&q);
        assert!(text.starts_with("5 12\n1 1 50\n"));
        assert_eq!(parse_instance(&text).unwrap(), q);
    }
}
