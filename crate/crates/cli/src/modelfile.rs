//! Line-oriented sectioned model files.
//!
//! ```text
//! [model]
//! name = ho
//! kind = mechanics            # or: field
//!
//! [coordinates]
//! fiber = [q]
//! base = [x1, x2]             # field models only
//!
//! [lagrangian]
//! expr = "0.5*(v_q^2 - q^2)"
//!
//! [hamiltonian]
//! expr = "0.5*(p_q^2 + q^2)"
//!
//! [metric]
//! diag = [1, 1]               # field models, optional
//!
//! [grid]
//! dims = [33, 33]             # field models, optional
//! origin = [-1, -1]
//! spacing = [0.0625, 0.0625]
//! ```
//!
//! Velocity/jet and momentum names are generated from the fiber names:
//! `v_<fiber>` and `p_<fiber>` for mechanics, `<fiber>_d<i>` and
//! `p<i>_<fiber>` for fields. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;

use geomech_core::expr::parse;
use geomech_core::fieldtheory::{FieldModel, Grid};
use geomech_core::mechanics::MechModel;
use nalgebra::DMatrix;

#[derive(Debug)]
pub struct FileError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for FileError {}

fn err(line: usize, message: impl Into<String>) -> FileError {
    FileError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone)]
enum Value {
    Text(String),
    List(Vec<String>),
}

#[derive(Debug, Default)]
struct Section {
    entries: BTreeMap<String, (usize, Value)>,
}

#[derive(Debug)]
pub enum ParsedModel {
    Mechanics { name: String, model: MechModel },
    Field {
        name: String,
        model: FieldModel,
        grid: Option<Grid>,
    },
}

fn parse_value(line_no: usize, raw: &str) -> Result<Value, FileError> {
    let raw = raw.trim();
    if raw.starts_with('"') {
        if raw.len() < 2 || !raw.ends_with('"') {
            return Err(err(line_no, "unterminated string value"));
        }
        return Ok(Value::Text(raw[1..raw.len() - 1].to_string()));
    }
    if raw.starts_with('[') {
        if !raw.ends_with(']') {
            return Err(err(line_no, "unterminated list value"));
        }
        let inner = &raw[1..raw.len() - 1];
        let items: Vec<String> = inner
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        return Ok(Value::List(items));
    }
    if raw.is_empty() {
        return Err(err(line_no, "missing value"));
    }
    Ok(Value::Text(raw.to_string()))
}

fn parse_sections(source: &str) -> Result<BTreeMap<String, Section>, FileError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw_line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.split_once('#') {
            // A '#' inside a quoted string stays; only unquoted comments
            // are stripped.
            Some((head, _)) if head.matches('"').count() % 2 == 0 => head,
            _ => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(err(line_no, "malformed section header"));
            }
            let name = line[1..line.len() - 1].trim().to_string();
            if name.is_empty() {
                return Err(err(line_no, "empty section name"));
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(line_no, format!("expected `key = value`, found `{line}`")));
        };
        let section = current
            .as_ref()
            .ok_or_else(|| err(line_no, "entry before any [section] header"))?;
        let key = key.trim().to_string();
        let value = parse_value(line_no, value)?;
        sections
            .get_mut(section)
            .expect("section exists")
            .entries
            .insert(key, (line_no, value));
    }
    Ok(sections)
}

fn get_text<'a>(
    sections: &'a BTreeMap<String, Section>,
    section: &str,
    key: &str,
) -> Option<(usize, &'a str)> {
    sections.get(section).and_then(|s| {
        s.entries.get(key).and_then(|(line, v)| match v {
            Value::Text(t) => Some((*line, t.as_str())),
            Value::List(_) => None,
        })
    })
}

fn get_list<'a>(
    sections: &'a BTreeMap<String, Section>,
    section: &str,
    key: &str,
) -> Option<(usize, &'a [String])> {
    sections.get(section).and_then(|s| {
        s.entries.get(key).and_then(|(line, v)| match v {
            Value::List(items) => Some((*line, items.as_slice())),
            Value::Text(_) => None,
        })
    })
}

fn numbers(line: usize, items: &[String]) -> Result<Vec<f64>, FileError> {
    items
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| err(line, format!("`{s}` is not a number")))
        })
        .collect()
}

fn parse_expr_entry(
    sections: &BTreeMap<String, Section>,
    section: &str,
) -> Result<Option<geomech_core::Expr>, FileError> {
    match get_text(sections, section, "expr") {
        None => {
            if sections.contains_key(section) {
                let line = sections[section]
                    .entries
                    .values()
                    .map(|(l, _)| *l)
                    .next()
                    .unwrap_or(0);
                return Err(err(line, format!("[{section}] needs an `expr` entry")));
            }
            Ok(None)
        }
        Some((line, text)) => parse(text)
            .map(Some)
            .map_err(|e| err(line, format!("bad expression: {e}"))),
    }
}

pub fn parse_model_file(source: &str) -> Result<ParsedModel, FileError> {
    let sections = parse_sections(source)?;
    let (name_line, name) =
        get_text(&sections, "model", "name").ok_or_else(|| err(1, "missing [model] name"))?;
    let _ = name_line;
    let (kind_line, kind) =
        get_text(&sections, "model", "kind").ok_or_else(|| err(1, "missing [model] kind"))?;

    let (fiber_line, fibers) = get_list(&sections, "coordinates", "fiber")
        .ok_or_else(|| err(kind_line, "missing [coordinates] fiber list"))?;
    if fibers.is_empty() {
        return Err(err(fiber_line, "fiber list is empty"));
    }
    let fiber_refs: Vec<&str> = fibers.iter().map(|s| s.as_str()).collect();

    let lagrangian = parse_expr_entry(&sections, "lagrangian")?;
    let hamiltonian = parse_expr_entry(&sections, "hamiltonian")?;
    if lagrangian.is_none() && hamiltonian.is_none() {
        return Err(err(
            kind_line,
            "model needs a [lagrangian] and/or a [hamiltonian] section",
        ));
    }

    match kind {
        "mechanics" => {
            let model = MechModel::new(&fiber_refs, lagrangian, hamiltonian)
                .map_err(|e| err(kind_line, e.to_string()))?;
            Ok(ParsedModel::Mechanics {
                name: name.to_string(),
                model,
            })
        }
        "field" => {
            let (base_line, base) = get_list(&sections, "coordinates", "base")
                .ok_or_else(|| err(fiber_line, "field models need a base coordinate list"))?;
            if base.is_empty() {
                return Err(err(base_line, "base list is empty"));
            }
            let base_refs: Vec<&str> = base.iter().map(|s| s.as_str()).collect();
            let metric = match get_list(&sections, "metric", "diag") {
                None => None,
                Some((line, items)) => {
                    let diag = numbers(line, items)?;
                    if diag.len() != base.len() {
                        return Err(err(line, "metric diagonal length must match the base"));
                    }
                    let mut g = DMatrix::zeros(diag.len(), diag.len());
                    for (i, d) in diag.iter().enumerate() {
                        g[(i, i)] = *d;
                    }
                    Some(g)
                }
            };
            let model = FieldModel::new(&base_refs, &fiber_refs, lagrangian, hamiltonian, metric)
                .map_err(|e| err(kind_line, e.to_string()))?;
            let grid = match sections.get("grid") {
                None => None,
                Some(_) => {
                    let (dl, dims) = get_list(&sections, "grid", "dims")
                        .ok_or_else(|| err(kind_line, "[grid] needs dims"))?;
                    let (ol, origin) = get_list(&sections, "grid", "origin")
                        .ok_or_else(|| err(dl, "[grid] needs origin"))?;
                    let (sl, spacing) = get_list(&sections, "grid", "spacing")
                        .ok_or_else(|| err(ol, "[grid] needs spacing"))?;
                    let dims: Vec<usize> = numbers(dl, dims)?
                        .into_iter()
                        .map(|d| d as usize)
                        .collect();
                    let grid = Grid::new(dims, numbers(ol, origin)?, numbers(sl, spacing)?)
                        .map_err(|e| err(sl, e.to_string()))?;
                    Some(grid)
                }
            };
            Ok(ParsedModel::Field {
                name: name.to_string(),
                model,
                grid,
            })
        }
        other => Err(err(kind_line, format!("unknown model kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HO: &str = r#"
[model]
name = ho
kind = mechanics

[coordinates]
fiber = [q]

[lagrangian]
expr = "0.5*(v_q^2 - q^2)"
"#;

    #[test]
    fn parses_mechanics_file() {
        let parsed = parse_model_file(HO).unwrap();
        match parsed {
            ParsedModel::Mechanics { name, model } => {
                assert_eq!(name, "ho");
                assert!(model.lagrangian.is_some());
            }
            _ => panic!("expected mechanics"),
        }
    }

    #[test]
    fn reports_line_numbers() {
        let bad = "[model]\nname = x\nkind = mechanics\n\n[coordinates]\nfiber = [q]\n\n[lagrangian]\nexpr = \"0.5*(v_q^2 -\"\n";
        let e = parse_model_file(bad).unwrap_err();
        assert_eq!(e.line, 9);
        assert!(e.message.contains("bad expression"));
    }

    #[test]
    fn rejects_unknown_kind() {
        let bad = HO.replace("mechanics", "quantum");
        let e = parse_model_file(&bad).unwrap_err();
        assert!(e.message.contains("unknown model kind"));
    }

    #[test]
    fn parses_field_file_with_grid() {
        let src = r#"
[model]
name = scalar2
kind = field

[coordinates]
base = [x1, x2]
fiber = [u]

[lagrangian]
expr = "0.5*(u_d1^2 + u_d2^2)"

[metric]
diag = [1, 1]

[grid]
dims = [9, 9]
origin = [-1, -1]
spacing = [0.25, 0.25]
"#;
        match parse_model_file(src).unwrap() {
            ParsedModel::Field { model, grid, .. } => {
                assert_eq!(model.m, 2);
                assert!(grid.is_some());
            }
            _ => panic!("expected field"),
        }
    }
}
