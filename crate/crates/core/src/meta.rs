//! Per directory `meta.txt` sidecars describing the recordings next to them.
//!
//! Each line names one recording file and gives its frame size and duration:
//!
//! ```text
//! 0001.bin 34 34 300000
//! ```

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

pub const META_FILE: &str = "meta.txt";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetaEntry {
    pub name: String,
    pub width: u16,
    pub height: u16,
    pub duration_us: u32,
}

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("meta line {line}: expected `name width height duration_us`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn parse_meta(text: &str) -> Result<Vec<MetaEntry>, MetaError> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parsed = if fields.len() == 4 {
            match (
                fields[1].parse::<u16>(),
                fields[2].parse::<u16>(),
                fields[3].parse::<u32>(),
            ) {
                (Ok(width), Ok(height), Ok(duration_us)) => Some(MetaEntry {
                    name: fields[0].to_string(),
                    width,
                    height,
                    duration_us,
                }),
                _ => None,
            }
        } else {
            None
        };
        match parsed {
            Some(entry) => entries.push(entry),
            None => {
                return Err(MetaError::Malformed {
                    line: idx + 1,
                    text: raw.to_string(),
                })
            }
        }
    }
    Ok(entries)
}

pub fn format_meta(entries: &[MetaEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&format!("{} {} {} {}\n", e.name, e.width, e.height, e.duration_us));
    }
    out
}

pub fn read_meta(dir: &Path) -> Result<Vec<MetaEntry>, MetaError> {
    let text = fs::read_to_string(dir.join(META_FILE))?;
    parse_meta(&text)
}

pub fn write_meta(dir: &Path, entries: &[MetaEntry]) -> io::Result<()> {
    fs::write(dir.join(META_FILE), format_meta(entries))
}

/// Find the entry for a recording file name.
pub fn lookup<'a>(entries: &'a [MetaEntry], name: &str) -> Option<&'a MetaEntry> {
    entries.iter().find(|e| e.name == name)
}
