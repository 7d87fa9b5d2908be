//! JSONL corpora: one sample per line, `{"id": .., "text": .., "entities": {..}}`.
//! Blank lines are ignored.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::entity::EntitySet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub entities: EntitySet,
}

impl Sample {
    pub fn new(id: impl Into<String>, text: Option<String>, entities: EntitySet) -> Self {
        Self {
            id: id.into(),
            text,
            entities,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("samples always serialize")
    }
}

/// Non-blank lines with their 1-based line numbers.
pub fn jsonl_lines(input: &str) -> impl Iterator<Item = (usize, &str)> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
}

/// Parses a JSONL corpus. `origin` labels error messages.
pub fn parse_corpus(input: &str, origin: &str) -> Result<Vec<Sample>> {
    jsonl_lines(input)
        .map(|(line, text)| {
            serde_json::from_str::<Sample>(text).map_err(|e| Error::Line {
                path: origin.to_string(),
                line,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let path = path.as_ref();
    let input = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&input, &path.display().to_string())
}

pub fn write_corpus<W: Write>(mut out: W, samples: &[Sample]) -> std::io::Result<()> {
    for s in samples {
        writeln!(out, "{}", s.to_json_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines_and_skips_blanks() {
        let input = concat!(
            r#"{"id": "a", "text": "Bill Gates", "entities": {"0": {"entity name": "Bill Gates"}}}"#,
            "\n\n",
            r#"{"id": "b", "entities": {}}"#,
            "\n"
        );
        let corpus = parse_corpus(input, "mem").unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus[0].text.as_deref(), Some("Bill Gates"));
        assert_eq!(corpus[1].text, None);
        assert!(corpus[1].entities.is_empty());

        let mut buf = Vec::new();
        write_corpus(&mut buf, &corpus).unwrap();
        let again = parse_corpus(std::str::from_utf8(&buf).unwrap(), "mem").unwrap();
        assert_eq!(again, corpus);
    }

    #[test]
    fn reports_line_numbers() {
        let input = "{\"id\": \"a\", \"entities\": {}}\n\n{\"id\": \"b\", \"entities\": {\"0\": {}}}\n";
        match parse_corpus(input, "gold.jsonl") {
            Err(Error::Line { path, line, message }) => {
                assert_eq!(path, "gold.jsonl");
                assert_eq!(line, 3);
                assert!(message.contains("entity name"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
