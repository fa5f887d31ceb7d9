//! Scenario loading with `--set` overrides and line-anchored diagnostics.

use std::path::Path;

use pathadv_core::sim::{ScenarioConfig, ScenarioDoc};
use pathadv_core::Error;
use toml::{Table, Value};

use crate::CliError;

/// Reads, overrides and resolves the scenario at `path`.
pub fn load(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: cannot read: {e}", path.display())))?;
    let doc = parse(path, &text, overrides)?;
    ScenarioConfig::from_doc(&doc, path.parent()).map_err(|e| anchor(path, &text, e))
}

fn parse(path: &Path, text: &str, overrides: &[String]) -> Result<ScenarioDoc, CliError> {
    let at_span = |e: toml::de::Error| {
        let line = e.span().map(|s| line_of_offset(text, s.start));
        CliError::Usage(located(path, line, e.message()))
    };
    if overrides.is_empty() {
        return toml::from_str(text).map_err(at_span);
    }
    let mut table: Table = toml::from_str(text).map_err(at_span)?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("{} (after --set): {}", path.display(), e.message())))
}

fn located(path: &Path, line: Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("{}:{l}: {message}", path.display()),
        None => format!("{}: {message}", path.display()),
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Turns a core error into a diagnostic pointing at the offending line.
fn anchor(path: &Path, text: &str, err: Error) -> CliError {
    match &err {
        Error::Invalid { key, .. } if !key.is_empty() => {
            CliError::Usage(located(path, find_key_line(text, key), &err.to_string()))
        }
        e if e.is_validation() => CliError::Usage(located(path, None, &err.to_string())),
        _ => CliError::Runtime(format!("{}: {err}", path.display())),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Segment {
    Key(String),
    Index(usize),
}

fn parse_key_path(key: &str) -> Option<Vec<Segment>> {
    let mut out = Vec::new();
    for part in key.split('.') {
        let (name, mut rest) = match part.find('[') {
            Some(i) => (&part[..i], &part[i..]),
            None => (part, ""),
        };
        if name.is_empty() {
            return None;
        }
        out.push(Segment::Key(name.to_string()));
        while let Some(stripped) = rest.strip_prefix('[') {
            let close = stripped.find(']')?;
            out.push(Segment::Index(stripped[..close].parse().ok()?));
            rest = &stripped[close + 1..];
        }
        if !rest.is_empty() {
            return None;
        }
    }
    Some(out)
}

fn render_path(segments: &[Segment]) -> String {
    let mut s = String::new();
    for seg in segments {
        match seg {
            Segment::Key(k) => {
                if !s.is_empty() {
                    s.push('.');
                }
                s.push_str(k);
            }
            Segment::Index(i) => s.push_str(&format!("[{i}]")),
        }
    }
    s
}

/// Line of `key` (e.g. `wrench_events[0].duration`) in `text`, or of its
/// enclosing table header when the key itself is absent.
pub fn find_key_line(text: &str, key: &str) -> Option<usize> {
    let segments = parse_key_path(key)?;
    let full = render_path(&segments);
    let (table, leaf) = match segments.last() {
        Some(Segment::Key(k)) => (render_path(&segments[..segments.len() - 1]), Some(k.as_str())),
        _ => (full.clone(), None),
    };

    // Array-of-table names and how many elements each has so far.
    let mut arrays: Vec<(String, usize)> = Vec::new();
    let mut current = String::new();
    let mut header_lines: Vec<(String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix("[[").and_then(|l| l.split("]]").next()) {
            let name = name.trim().to_string();
            arrays.retain(|(n, _)| !n.starts_with(&format!("{name}.")));
            match arrays.iter_mut().find(|(n, _)| *n == name) {
                Some((_, c)) => *c += 1,
                None => arrays.push((name.clone(), 1)),
            }
            current = indexed(&name, &arrays);
            header_lines.push((current.clone(), i + 1));
        } else if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = indexed(name.trim(), &arrays);
            header_lines.push((current.clone(), i + 1));
        } else if let (Some(l), Some((name, _))) = (leaf, line.split_once('=')) {
            if current == table && name.trim().trim_matches('"') == l {
                return Some(i + 1);
            }
        }
    }
    header_lines
        .iter()
        .find(|(h, _)| *h == full)
        .or_else(|| header_lines.iter().find(|(h, _)| *h == table))
        .map(|(_, l)| *l)
}

/// Header names are absolute; every array they pass through refers to its
/// latest element.
fn indexed(name: &str, arrays: &[(String, usize)]) -> String {
    let mut bare = String::new();
    let mut out = String::new();
    for seg in name.split('.') {
        let seg = seg.trim();
        if !bare.is_empty() {
            bare.push('.');
            out.push('.');
        }
        bare.push_str(seg);
        out.push_str(seg);
        if let Some((_, c)) = arrays.iter().find(|(n, _)| *n == bare) {
            out.push_str(&format!("[{}]", c - 1));
        }
    }
    out
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Applies one `key=value` override. The value is read as TOML, falling
/// back to a bare string.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), CliError> {
    let bad = |why: &str| CliError::Usage(format!("--set {assignment}: {why}"));
    let (key, raw) = assignment.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let segments = parse_key_path(key.trim()).ok_or_else(|| bad("malformed key"))?;
    let value = parse_value(raw.trim());

    let mut slot: &mut Value = table
        .entry(match &segments[0] {
            Segment::Key(k) => k.clone(),
            Segment::Index(_) => return Err(bad("key must start with a name")),
        })
        .or_insert_with(|| Value::Table(Table::new()));
    for seg in &segments[1..] {
        slot = match seg {
            Segment::Key(k) => match slot {
                Value::Table(t) => t.entry(k.clone()).or_insert_with(|| Value::Table(Table::new())),
                _ => return Err(bad(&format!("`{k}` is not inside a table"))),
            },
            Segment::Index(i) => match slot {
                Value::Array(a) => a
                    .get_mut(*i)
                    .ok_or_else(|| bad(&format!("index {i} is out of range")))?,
                _ => return Err(bad("indexing a value that is not an array")),
            },
        };
    }
    *slot = value;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = "schema_version = 1\nduration = 2.0\n\n[advancement]\nlaw = \"appendix\"\npsidot_upper = 0.5\n\n[[wrench_events]]\nstart = 1.0\n\n[[wrench_events]]\nstart = 2.0\nduration = -1.0\n";

    #[test]
    fn key_lines() {
        assert_eq!(find_key_line(DOC, "duration"), Some(2));
        assert_eq!(find_key_line(DOC, "advancement.psidot_upper"), Some(6));
        assert_eq!(find_key_line(DOC, "advancement.epsilon_reg"), Some(4));
        assert_eq!(find_key_line(DOC, "wrench_events[1].duration"), Some(13));
        assert_eq!(find_key_line(DOC, "wrench_events[0].duration"), Some(8));
        assert_eq!(find_key_line(DOC, "gains.kp"), None);
    }

    #[test]
    fn nested_array_elements() {
        let doc = "[trajectory]\nkind = \"composite\"\n[[trajectory.parts]]\namplitude = 1.0\n[[trajectory.parts]]\namplitude = 2.0\n";
        assert_eq!(find_key_line(doc, "trajectory.parts[1].amplitude"), Some(6));
        assert_eq!(find_key_line(doc, "trajectory.kind"), Some(2));
    }

    #[test]
    fn overrides() {
        let mut t: Table = toml::from_str(DOC).unwrap();
        apply_override(&mut t, "advancement.law=frozen").unwrap();
        apply_override(&mut t, "dt=0.002").unwrap();
        apply_override(&mut t, "wrench_events[1].force=[1.0, 0.0, 0.0]").unwrap();
        apply_override(&mut t, "controller.task_rows=[\"x\", \"z\"]").unwrap();
        assert_eq!(t["advancement"]["law"].as_str(), Some("frozen"));
        assert_eq!(t["dt"].as_float(), Some(0.002));
        assert_eq!(t["wrench_events"][1]["force"][0].as_float(), Some(1.0));
        assert_eq!(t["controller"]["task_rows"][1].as_str(), Some("z"));

        assert!(apply_override(&mut t, "dt").is_err());
        assert!(apply_override(&mut t, "wrench_events[5].start=1").is_err());
        assert!(apply_override(&mut t, "dt.x=1").is_err());
    }

    #[test]
    fn key_paths() {
        assert_eq!(
            parse_key_path("a.b[2].c"),
            Some(vec![
                Segment::Key("a".into()),
                Segment::Key("b".into()),
                Segment::Index(2),
                Segment::Key("c".into())
            ])
        );
        assert_eq!(parse_key_path("a..b"), None);
        assert_eq!(parse_key_path("a[x]"), None);
    }
}
