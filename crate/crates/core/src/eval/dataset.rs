//! Line-delimited JSON benchmark datasets.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::types::{InputItem, ModalityKind, Payload};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub item_id: String,
    pub question: String,
    pub choices: Vec<String>,
    pub answer_key: char,
    #[serde(default)]
    pub attachments: Vec<InputItem>,
}

impl BenchmarkItem {
    pub fn validate(&self) -> Result<(), String> {
        if self.item_id.trim().is_empty() {
            return Err("item_id is empty".into());
        }
        if !(2..=26).contains(&self.choices.len()) {
            return Err(format!("expected 2 to 26 choices, got {}", self.choices.len()));
        }
        let key = self.answer_key;
        if !key.is_ascii_uppercase() || (key as u8 - b'A') as usize >= self.choices.len() {
            return Err("answer_key out of range".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read dataset {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line_no}: {reason}")]
    Parse { line_no: usize, reason: String },
    #[error("missing attachment: {}", path.display())]
    MissingAttachment { path: PathBuf },
    #[error("item {item_id}: {reason}")]
    InvalidItem { item_id: String, reason: String },
}

#[derive(Debug, Deserialize)]
struct RawAttachment {
    modality: ModalityKind,
    locator: PathBuf,
    #[serde(default)]
    media_type: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RawItem {
    item_id: String,
    question: String,
    choices: Vec<String>,
    answer_key: String,
    #[serde(default)]
    attachments: Vec<RawAttachment>,
}

pub fn load_dataset(path: &Path) -> Result<Vec<BenchmarkItem>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Parses dataset text; attachment locators resolve against `base`.
pub fn parse_dataset(text: &str, base: &Path) -> Result<Vec<BenchmarkItem>, DatasetError> {
    let mut items = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |reason: String| DatasetError::Parse { line_no, reason };
        let raw: RawItem = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let mut key = raw.answer_key.trim().chars();
        let answer_key = match (key.next(), key.next()) {
            (Some(c), None) if c.is_ascii_alphabetic() => c.to_ascii_uppercase(),
            _ => return Err(parse_err(format!("answer_key must be one letter, got {:?}", raw.answer_key))),
        };
        if !ids.insert(raw.item_id.clone()) {
            return Err(parse_err(format!("duplicate item_id {}", raw.item_id)));
        }
        let mut attachments = Vec::with_capacity(raw.attachments.len());
        for (n, att) in raw.attachments.into_iter().enumerate() {
            let resolved = if att.locator.is_absolute() {
                att.locator
            } else {
                base.join(att.locator)
            };
            if !resolved.exists() {
                return Err(DatasetError::MissingAttachment { path: resolved });
            }
            let id = format!("{}-att{}", raw.item_id, n + 1);
            let mut item = if att.modality == ModalityKind::Text {
                let text = std::fs::read_to_string(&resolved).map_err(|source| DatasetError::Io {
                    path: resolved.clone(),
                    source,
                })?;
                InputItem::text(id, text)
            } else {
                InputItem::media(id, att.modality, &resolved)
            };
            if let Some(mt) = att.media_type {
                item.media_type = mt;
            }
            debug_assert!(matches!(
                (&item.payload, item.modality),
                (Payload::Inline(_), ModalityKind::Text) | (Payload::Locator(_), _)
            ));
            attachments.push(item);
        }
        let item = BenchmarkItem {
            item_id: raw.item_id,
            question: raw.question,
            choices: raw.choices,
            answer_key,
            attachments,
        };
        item.validate().map_err(parse_err)?;
        items.push(item);
    }
    Ok(items)
}
