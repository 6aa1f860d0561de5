// SPDX-License-Identifier: Apache-2.0
//! GUI-side intents: layout text plus OCR tokens over the widget, and a
//! caption for the widget image.
//!
//! Without a neural backend, captions come from a gallery of labelled widget
//! images matched by 64-bit average hash (8x8 grayscale cells, mean
//! threshold, row-major bits with cell (0,0) as the most significant bit).

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GenericImageView};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, CaptionBackend};
use crate::layout::{extract_text_attrs, Rect, WidgetMatch};

#[derive(Debug, Error)]
pub enum GuiError {
    #[error("no caption backend and the gallery is empty")]
    EmptyGallery,
    #[error("cannot decode image {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("gallery: {0}")]
    Gallery(String),
    #[error("ocr tokens: {0}")]
    Ocr(String),
    #[error("caption backend failed: {0}")]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IntentSource {
    GuiText,
    GuiImage,
    Code,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Intent {
    #[serde(skip)]
    pub op_index: usize,
    pub source: IntentSource,
    pub text: String,
    pub confidence: f64,
}

impl Intent {
    pub fn new(source: IntentSource, text: impl Into<String>, confidence: f64) -> Intent {
        Intent { op_index: 0, source, text: text.into(), confidence: confidence.clamp(0.0, 1.0) }
    }

    pub fn for_op(mut self, index: usize) -> Intent {
        self.op_index = index;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcrToken {
    pub text: String,
    pub rect: Rect,
}

#[derive(Deserialize)]
struct RawOcrToken {
    text: String,
    #[serde(rename = "box")]
    bounds: [i32; 4],
}

/// Parse `ocr.json`: `[{"text": ..., "box": [l,t,r,b]}, ...]`. Tokens with
/// empty text or a degenerate box are dropped.
pub fn parse_ocr_tokens(json: &str) -> Result<Vec<OcrToken>, GuiError> {
    let raw: Vec<RawOcrToken> =
        serde_json::from_str(json).map_err(|e| GuiError::Ocr(e.to_string()))?;
    Ok(raw
        .into_iter()
        .map(|t| OcrToken {
            text: t.text.trim().to_string(),
            rect: Rect::new(t.bounds[0], t.bounds[1], t.bounds[2], t.bounds[3]),
        })
        .filter(|t| !t.text.is_empty() && !t.rect.is_degenerate())
        .collect())
}

/// Minimum fraction of a token's area that must lie inside the widget.
pub const OCR_OVERLAP_THRESHOLD: f64 = 0.5;

/// Texts of the tokens covering the widget, in reading order.
pub fn ocr_match(tokens: &[OcrToken], widget: Rect) -> Vec<String> {
    let mut hits: Vec<&OcrToken> = tokens
        .iter()
        .filter(|t| {
            let area = t.rect.area();
            area > 0 && t.rect.intersection_area(&widget) as f64 / area as f64 >= OCR_OVERLAP_THRESHOLD
        })
        .collect();
    hits.sort_by_key(|t| (t.rect.top, t.rect.left));
    hits.into_iter().map(|t| t.text.clone()).collect()
}

fn push_unique(out: &mut Vec<String>, seen: &mut HashSet<String>, s: &str) -> bool {
    let key = s.to_lowercase();
    if s.is_empty() || seen.contains(&key) {
        return false;
    }
    seen.insert(key);
    out.push(s.to_string());
    true
}

/// Layout attributes followed by overlapping OCR text.
pub fn textual_intent(m: &WidgetMatch, tokens: &[OcrToken]) -> Option<Intent> {
    let mut parts = Vec::new();
    let mut seen = HashSet::new();
    let mut from_layout = false;
    for a in extract_text_attrs(m) {
        from_layout |= push_unique(&mut parts, &mut seen, &a);
    }
    if let Some(bounds) = m.bounds {
        for t in ocr_match(tokens, bounds) {
            push_unique(&mut parts, &mut seen, &t);
        }
    }
    if parts.is_empty() {
        return None;
    }
    let confidence = if from_layout { 1.0 } else { 0.8 };
    Some(Intent::new(IntentSource::GuiText, parts.join(" "), confidence))
}

/// Hashes farther than this many bits from every gallery entry get no caption.
pub const MAX_CAPTION_DISTANCE: u32 = 16;

fn luma_over_white(p: [u8; 4]) -> f64 {
    let a = p[3] as f64 / 255.0;
    let y = (299.0 * p[0] as f64 + 587.0 * p[1] as f64 + 114.0 * p[2] as f64) / 1000.0;
    y * a + 255.0 * (1.0 - a)
}

/// Pixel range `[start, end)` covered by grid cell `cell` of 8 along an axis of `len` pixels.
fn cell_range(cell: u32, len: u32) -> (u32, u32) {
    let start = cell * len / 8;
    let end = ((cell + 1) * len / 8).max(start + 1).min(len.max(1));
    (start.min(len.saturating_sub(1)), end)
}

pub fn average_hash(img: &DynamicImage) -> u64 {
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return 0;
    }
    let rgba = img.to_rgba8();
    let mut cells = [0f64; 64];
    for row in 0..8 {
        let (y0, y1) = cell_range(row, h);
        for col in 0..8 {
            let (x0, x1) = cell_range(col, w);
            let mut sum = 0.0;
            for y in y0..y1 {
                for x in x0..x1 {
                    sum += luma_over_white(rgba.get_pixel(x, y).0);
                }
            }
            cells[(row * 8 + col) as usize] = sum / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }
    let mean = cells.iter().sum::<f64>() / 64.0;
    cells.iter().fold(0u64, |acc, &c| (acc << 1) | u64::from(c > mean))
}

pub fn average_hash_file(path: &Path) -> Result<u64, GuiError> {
    let img = image::open(path)
        .map_err(|e| GuiError::Image { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(average_hash(&img))
}

pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GalleryEntry {
    pub id: String,
    pub image_path: PathBuf,
    pub caption: String,
    pub hash: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Gallery {
    pub entries: Vec<GalleryEntry>,
}

impl Gallery {
    pub const INDEX_FILE: &'static str = "captions.tsv";

    /// Load `captions.tsv` (`id<TAB>image_file<TAB>caption`) and hash every image.
    pub fn load(dir: &Path) -> Result<Gallery, GuiError> {
        let index = dir.join(Self::INDEX_FILE);
        let text = fs::read_to_string(&index)
            .map_err(|e| GuiError::Gallery(format!("{}: {e}", index.display())))?;
        let mut entries = Vec::new();
        let mut ids = HashSet::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.splitn(3, '\t').collect();
            let [id, file, caption] = cols[..] else {
                return Err(GuiError::Gallery(format!("line {}: expected 3 tab-separated columns", n + 1)));
            };
            let caption = caption.trim();
            if caption.is_empty() {
                return Err(GuiError::Gallery(format!("line {}: empty caption", n + 1)));
            }
            if !ids.insert(id.to_string()) {
                return Err(GuiError::Gallery(format!("line {}: duplicate id {id:?}", n + 1)));
            }
            let image_path = dir.join(file);
            let hash = average_hash_file(&image_path)?;
            entries.push(GalleryEntry { id: id.to_string(), image_path, caption: caption.to_string(), hash });
        }
        Ok(Gallery { entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Closest entry by Hamming distance, ties broken by ascending id.
    pub fn nearest(&self, hash: u64) -> Option<(&GalleryEntry, u32)> {
        self.entries
            .iter()
            .map(|e| (e, hamming(e.hash, hash)))
            .min_by(|(a, da), (b, db)| da.cmp(db).then_with(|| a.id.cmp(&b.id)))
    }
}

pub const BACKEND_CAPTION_CONFIDENCE: f64 = 0.7;

/// Caption a widget image through `backend`, or by nearest gallery entry.
pub fn caption_widget(
    image_path: &Path,
    gallery: &Gallery,
    backend: Option<&dyn CaptionBackend>,
) -> Result<Option<Intent>, GuiError> {
    if let Some(b) = backend {
        let text = b.caption(image_path)?;
        return Ok(Some(Intent::new(IntentSource::GuiImage, text, BACKEND_CAPTION_CONFIDENCE)));
    }
    if gallery.is_empty() {
        return Err(GuiError::EmptyGallery);
    }
    let hash = average_hash_file(image_path)?;
    let Some((entry, distance)) = gallery.nearest(hash) else {
        return Err(GuiError::EmptyGallery);
    };
    if distance > MAX_CAPTION_DISTANCE {
        return Ok(None);
    }
    let confidence = 1.0 - distance as f64 / 64.0;
    Ok(Some(Intent::new(IntentSource::GuiImage, entry.caption.clone(), confidence)))
}

/// Combine visual and textual intents of one widget.
pub fn merge_gui_intents(visual: Option<Intent>, textual: Option<Intent>) -> Option<Intent> {
    match (visual, textual) {
        (Some(v), Some(t)) => {
            if v.text.to_lowercase() == t.text.to_lowercase() {
                Some(t)
            } else {
                let confidence = t.confidence.max(v.confidence);
                Some(Intent {
                    op_index: t.op_index,
                    source: IntentSource::GuiText,
                    text: format!("{} ({})", t.text, v.text),
                    confidence,
                })
            }
        }
        (v, t) => t.or(v),
    }
}
