//! Text annotation sidecars: an object bounding box plus outline vertices.
//!
//! ```text
//! BBOX 3 3 30 30
//! V 3 10
//! V 16 3
//! V 30 10
//! ```

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::event::PixelBox;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub bbox: PixelBox,
    pub vertices: Vec<(u16, u16)>,
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("annotation line {line}: unrecognized content {text:?}")]
    Malformed { line: usize, text: String },
    #[error("annotation line {line}: bounding box maxima precede minima")]
    InvertedBox { line: usize },
    #[error("annotation has no BBOX line")]
    MissingBox,
    #[error("annotation line {line}: second BBOX line")]
    DuplicateBox { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn parse_annotation(text: &str) -> Result<Annotation, AnnotationError> {
    let mut bbox = None;
    let mut vertices = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let malformed = || AnnotationError::Malformed {
            line: idx + 1,
            text: raw.to_string(),
        };
        match fields[0] {
            "BBOX" if fields.len() == 5 => {
                let mut nums = [0u16; 4];
                for (slot, field) in nums.iter_mut().zip(&fields[1..]) {
                    *slot = field.parse().map_err(|_| malformed())?;
                }
                if nums[2] < nums[0] || nums[3] < nums[1] {
                    return Err(AnnotationError::InvertedBox { line: idx + 1 });
                }
                if bbox.is_some() {
                    return Err(AnnotationError::DuplicateBox { line: idx + 1 });
                }
                bbox = Some(PixelBox::new(nums[0], nums[1], nums[2], nums[3]));
            }
            "V" if fields.len() == 3 => {
                let x = fields[1].parse().map_err(|_| malformed())?;
                let y = fields[2].parse().map_err(|_| malformed())?;
                vertices.push((x, y));
            }
            _ => return Err(malformed()),
        }
    }
    match bbox {
        Some(bbox) => Ok(Annotation { bbox, vertices }),
        None => Err(AnnotationError::MissingBox),
    }
}

pub fn format_annotation(annotation: &Annotation) -> String {
    let b = annotation.bbox;
    let mut out = format!("BBOX {} {} {} {}\n", b.x_min, b.y_min, b.x_max, b.y_max);
    for (x, y) in &annotation.vertices {
        out.push_str(&format!("V {x} {y}\n"));
    }
    out
}

pub fn read_annotation(path: &Path) -> Result<Annotation, AnnotationError> {
    parse_annotation(&fs::read_to_string(path)?)
}

pub fn write_annotation(path: &Path, annotation: &Annotation) -> io::Result<()> {
    fs::write(path, format_annotation(annotation))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let annotation = Annotation {
            bbox: PixelBox::new(3, 4, 30, 28),
            vertices: vec![(3, 10), (16, 4), (30, 12)],
        };
        let text = format_annotation(&annotation);
        assert_eq!(parse_annotation(&text).unwrap(), annotation);
    }

    #[test]
    fn parses_box_without_vertices() {
        let annotation = parse_annotation("BBOX 0 0 33 33\n").unwrap();
        assert_eq!(annotation.bbox, PixelBox::new(0, 0, 33, 33));
        assert!(annotation.vertices.is_empty());
    }

    #[test]
    fn rejects_inverted_box() {
        assert!(matches!(
            parse_annotation("BBOX 10 0 3 33\n"),
            Err(AnnotationError::InvertedBox { line: 1 })
        ));
    }

    #[test]
    fn rejects_garbage_with_line_number() {
        match parse_annotation("BBOX 0 0 3 3\nV 1 1\nVX 2 2\n") {
            Err(AnnotationError::Malformed { line: 3, .. }) => {}
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn requires_a_box() {
        assert!(matches!(
            parse_annotation("V 1 1\n"),
            Err(AnnotationError::MissingBox)
        ));
    }
}
