use std::path::{Path, PathBuf};

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::PoolError;
use crate::types::{guess_media_type, AgentKind, InputItem, ModalityKind, Payload};

/// One element of a chat-completions `content` array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContentPart {
    Text { text: String },
    ImageUrl { image_url: ImageUrl },
    InputAudio { input_audio: InputAudio },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageUrl {
    pub url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputAudio {
    pub data: String,
    pub format: String,
}

impl ContentPart {
    pub fn text(text: impl Into<String>) -> Self {
        ContentPart::Text { text: text.into() }
    }

    pub fn is_image(&self) -> bool {
        matches!(self, ContentPart::ImageUrl { .. })
    }
}

const FRAME_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "webp", "gif"];

/// Uniformly spaced frame indices `floor(i * total / count)` for
/// `i in 0..count`, clamped so no frame repeats when the clip is short.
pub fn sample_frame_indices(total: usize, count: usize) -> Vec<usize> {
    let count = count.min(total);
    (0..count).map(|i| i * total / count).collect()
}

/// Encodes attachments for an agent of `agent_modality`. Text always passes;
/// media must match the agent, except that video reaches image agents as
/// sampled frames.
pub fn encode_attachments(
    agent_modality: ModalityKind,
    items: &[InputItem],
    frame_count: usize,
) -> Result<Vec<ContentPart>, PoolError> {
    let mut parts = Vec::new();
    for item in items {
        match (item.modality, agent_modality) {
            (ModalityKind::Text, _) => parts.push(ContentPart::text(inline_text(item)?)),
            (ModalityKind::Image, ModalityKind::Image) => {
                parts.push(image_part(locator(item)?, &item.media_type)?)
            }
            (ModalityKind::Audio, ModalityKind::Audio) => parts.push(audio_part(locator(item)?)?),
            (ModalityKind::Video, ModalityKind::Video | ModalityKind::Image) => {
                parts.extend(video_frames(locator(item)?, frame_count)?)
            }
            (modality, agent) => {
                return Err(PoolError::ModalityMismatch {
                    agent: String::new(),
                    agent_kind: AgentKind::from(agent),
                    modality,
                })
            }
        }
    }
    Ok(parts)
}

fn inline_text(item: &InputItem) -> Result<&str, PoolError> {
    match &item.payload {
        Payload::Inline(text) => Ok(text),
        Payload::Locator(path) => Err(decode_error(path, "text input must be inline")),
    }
}

fn locator(item: &InputItem) -> Result<&Path, PoolError> {
    match &item.payload {
        Payload::Locator(path) => Ok(path),
        Payload::Inline(_) => Err(PoolError::Decode {
            path: item.id.clone(),
            reason: format!("{} input needs a file locator", item.modality),
        }),
    }
}

fn decode_error(path: &Path, reason: impl Into<String>) -> PoolError {
    PoolError::Decode {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

fn read_media(path: &Path) -> Result<Vec<u8>, PoolError> {
    let bytes = std::fs::read(path).map_err(|e| decode_error(path, e.to_string()))?;
    if bytes.is_empty() {
        return Err(decode_error(path, "file is empty"));
    }
    Ok(bytes)
}

fn image_part(path: &Path, media_type: &str) -> Result<ContentPart, PoolError> {
    let bytes = read_media(path)?;
    Ok(ContentPart::ImageUrl {
        image_url: ImageUrl {
            url: format!("data:{media_type};base64,{}", STANDARD.encode(bytes)),
        },
    })
}

fn audio_part(path: &Path) -> Result<ContentPart, PoolError> {
    let bytes = read_media(path)?;
    let format = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_else(|| "wav".to_string());
    Ok(ContentPart::InputAudio {
        input_audio: InputAudio {
            data: STANDARD.encode(bytes),
            format,
        },
    })
}

/// Video locators are directories of frame images, ordered by file name.
fn video_frames(dir: &Path, frame_count: usize) -> Result<Vec<ContentPart>, PoolError> {
    if !dir.is_dir() {
        return Err(decode_error(
            dir,
            "video must be supplied as a directory of frame images",
        ));
    }
    let mut frames: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| decode_error(dir, e.to_string()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    frames.sort();
    if frames.is_empty() {
        return Err(decode_error(dir, "no frames found"));
    }
    sample_frame_indices(frames.len(), frame_count)
        .into_iter()
        .map(|i| {
            let frame = &frames[i];
            image_part(frame, &guess_media_type(ModalityKind::Image, frame))
        })
        .collect()
}
