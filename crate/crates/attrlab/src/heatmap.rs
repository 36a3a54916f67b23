//! Self-contained HTML heatmaps. Negative scores are shaded blue, positive
//! orange, with opacity equal to the display-normalized magnitude.

use std::fmt::Write as _;
use std::path::Path;

use attrlab_core::attribution::normalize_for_display;
use attrlab_core::{AttributionMap, TokenSequence};

use crate::error::{AppError, Result};
use crate::fsutil::write_atomic;

pub const POSITIVE_RGB: (u8, u8, u8) = (255, 140, 0);
pub const NEGATIVE_RGB: (u8, u8, u8) = (30, 90, 255);

const STYLE: &str = "body{font-family:sans-serif;margin:2em}\
.row{margin:0.6em 0;line-height:2em}\
.label{color:#555;font-size:0.85em}\
.tok{padding:0.15em 0.25em;margin:0 0.1em;border-radius:3px}";

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// CSS background for a score already scaled to `[-1, 1]`; `None` for zero.
pub fn background(display: f64) -> Option<String> {
    let alpha = display.abs().min(1.0);
    if alpha == 0.0 {
        return None;
    }
    let (r, g, b) = if display > 0.0 { POSITIVE_RGB } else { NEGATIVE_RGB };
    Some(format!("rgba({r},{g},{b},{alpha:.3})"))
}

/// One `<div>` with a span per token; the hover title carries the raw score.
pub fn render_row(caption: &str, sequence: &TokenSequence, map: &AttributionMap) -> Result<String> {
    map.validate(sequence.len()).map_err(AppError::from)?;
    let display = normalize_for_display(map);
    let mut html = String::new();
    let _ = write!(html, "<div class=\"row\"><div class=\"label\">{}</div>", escape_html(caption));
    for ((tok, raw), shown) in sequence.tokens().iter().zip(&map.scores).zip(&display.scores) {
        let style = background(*shown).map(|bg| format!(" style=\"background:{bg}\"")).unwrap_or_default();
        let _ = write!(
            html,
            "<span class=\"tok\"{style} title=\"{}\">{}</span>",
            escape_html(&format!("{raw:.6}")),
            escape_html(tok)
        );
    }
    html.push_str("</div>\n");
    Ok(html)
}

pub fn render_page(title: &str, rows: &[String]) -> String {
    let mut html = String::new();
    let _ = write!(
        html,
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{t}</title><style>{STYLE}</style></head>\n<body><h1>{t}</h1>\n",
        t = escape_html(title)
    );
    for r in rows {
        html.push_str(r);
    }
    html.push_str("</body></html>\n");
    html
}

pub fn export_heatmap_html(sequence: &TokenSequence, map: &AttributionMap, path: &Path) -> Result<()> {
    let row = render_row(&format!("{} / {}", map.method, map.target_label), sequence, map)?;
    write_atomic(path, render_page("attribution heatmap", &[row]).as_bytes())
}
