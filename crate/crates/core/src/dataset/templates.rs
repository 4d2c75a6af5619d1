//! Instruction templates: one line per task, `{slot}` placeholders.

use std::collections::BTreeMap;
use std::fmt;

use super::{DatasetError, Task};

const DEFAULT_TEMPLATES: &str = include_str!("../../data/templates.txt");

/// Slots a template may reference.
pub const SLOTS: [&str; 2] = ["input", "reaction_type"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Text(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    source: String,
    pieces: Vec<Piece>,
}

impl Template {
    pub fn parse(text: &str) -> Result<Template, String> {
        let mut pieces = Vec::new();
        let mut lit = String::new();
        let mut chars = text.char_indices().peekable();
        while let Some((at, c)) = chars.next() {
            match c {
                '{' if chars.peek().map(|p| p.1) == Some('{') => {
                    chars.next();
                    lit.push('{');
                }
                '}' if chars.peek().map(|p| p.1) == Some('}') => {
                    chars.next();
                    lit.push('}');
                }
                '{' => {
                    let rest = &text[at + 1..];
                    let close = rest
                        .find('}')
                        .ok_or_else(|| format!("unclosed '{{' at column {}", at + 1))?;
                    let name = &rest[..close];
                    if !SLOTS.contains(&name) {
                        return Err(format!("unknown slot {{{name}}}"));
                    }
                    if !lit.is_empty() {
                        pieces.push(Piece::Text(std::mem::take(&mut lit)));
                    }
                    pieces.push(Piece::Slot(name.to_string()));
                    for _ in 0..=close {
                        chars.next();
                    }
                }
                '}' => return Err(format!("stray '}}' at column {}", at + 1)),
                c => lit.push(c),
            }
        }
        if !lit.is_empty() {
            pieces.push(Piece::Text(lit));
        }
        Ok(Template {
            source: text.to_string(),
            pieces,
        })
    }

    pub fn slots(&self) -> impl Iterator<Item = &str> {
        self.pieces.iter().filter_map(|p| match p {
            Piece::Slot(s) => Some(s.as_str()),
            Piece::Text(_) => None,
        })
    }

    /// Substitutes `input` and any other slot from `meta`.
    pub fn fill(&self, input: &str, meta: &BTreeMap<String, String>) -> Result<String, String> {
        let mut out = String::with_capacity(self.source.len() + input.len());
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(s) if s == "input" => out.push_str(input),
                Piece::Slot(s) => out.push_str(meta.get(s).ok_or_else(|| s.clone())?),
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    by_task: BTreeMap<Task, Template>,
}

impl Templates {
    /// Parses `task = text` lines; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Templates, DatasetError> {
        let mut by_task = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| DatasetError::Template { line: n + 1, reason };
            let (key, body) = line
                .split_once('=')
                .ok_or_else(|| bad("expected `task = text`".into()))?;
            let task: Task = key.trim().parse().map_err(bad)?;
            let template = Template::parse(body.trim()).map_err(bad)?;
            if by_task.insert(task, template).is_some() {
                return Err(bad(format!("second template for {task}")));
            }
        }
        Ok(Templates { by_task })
    }

    pub fn standard() -> Templates {
        Templates::from_text(DEFAULT_TEMPLATES).expect("bundled templates parse")
    }

    pub fn get(&self, task: Task) -> Option<&Template> {
        self.by_task.get(&task)
    }

    pub fn fill(&self, task: Task, input: &str, meta: &BTreeMap<String, String>) -> Result<String, DatasetError> {
        let t = self.get(task).ok_or(DatasetError::MissingTemplate(task))?;
        t.fill(input, meta)
            .map_err(|slot| DatasetError::MissingSlot { task, slot })
    }
}

pub fn fill_template(
    templates: &Templates,
    task: Task,
    input: &str,
    meta: &BTreeMap<String, String>,
) -> Result<String, DatasetError> {
    templates.fill(task, input, meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retrosynthesis_contains_payload() {
        let t = Templates::standard();
        let text = t.fill(Task::Retrosynthesis, "CC(=O)OCC", &BTreeMap::new()).unwrap();
        assert!(text.contains("CC(=O)OCC"));
        assert_eq!(
            text,
            t.fill(Task::Retrosynthesis, "CC(=O)OCC", &BTreeMap::new()).unwrap()
        );
    }

    #[test]
    fn missing_slot() {
        let t = Templates::standard();
        let err = t.fill(Task::Reaction, "CCO.CC(=O)O", &BTreeMap::new()).unwrap_err();
        assert!(matches!(err, DatasetError::MissingSlot { slot, .. } if slot == "reaction_type"));
        let meta = BTreeMap::from([("reaction_type".to_string(), "esterification".to_string())]);
        assert!(t
            .fill(Task::Reaction, "CCO.CC(=O)O", &meta)
            .unwrap()
            .contains("esterification"));
    }

    #[test]
    fn escapes_and_errors() {
        let t = Template::parse("{{literal}} {input}").unwrap();
        assert_eq!(t.fill("C", &BTreeMap::new()).unwrap(), "{literal} C");
        assert!(Template::parse("{product}").is_err());
        assert!(Template::parse("{input").is_err());
        assert!(Template::parse("a } b").is_err());
        assert!(Templates::from_text("cooking = {input}").is_err());
        assert!(Templates::from_text("reaction = a\nreaction = b").is_err());
    }

    #[test]
    fn all_tasks_present() {
        let t = Templates::standard();
        for task in Task::ALL {
            assert!(t.get(task).is_some(), "{task}");
        }
    }
}
