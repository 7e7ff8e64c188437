//! Procedural handwritten-style digit images for tests and demos.
//!
//! Each digit class is a small set of strokes (polylines in a unit box)
//! rasterized with randomized scale, slant, stroke width, and position, so a
//! generated set behaves like a scanned digit collection: within-class
//! variety, between-class structure.

use std::io;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::raster::IntensityImage;
use crate::seed;

pub const CLASSES: usize = 10;
pub const IMAGE_SIZE: usize = 28;

type Stroke = Vec<(f32, f32)>;

fn ellipse(cx: f32, cy: f32, rx: f32, ry: f32) -> Stroke {
    let n = 22;
    (0..=n)
        .map(|i| {
            let a = i as f32 / n as f32 * std::f32::consts::TAU;
            (cx + rx * a.cos(), cy + ry * a.sin())
        })
        .collect()
}

/// Stroke set for one digit class, in unit coordinates with y pointing down.
fn glyph(class: usize) -> Vec<Stroke> {
    match class {
        0 => vec![ellipse(0.50, 0.50, 0.30, 0.42)],
        1 => vec![
            vec![(0.56, 0.08), (0.56, 0.92)],
            vec![(0.56, 0.08), (0.40, 0.26)],
        ],
        2 => vec![
            vec![
                (0.26, 0.30),
                (0.32, 0.14),
                (0.50, 0.07),
                (0.68, 0.14),
                (0.74, 0.30),
                (0.66, 0.48),
                (0.30, 0.78),
                (0.24, 0.92),
            ],
            vec![(0.24, 0.92), (0.78, 0.92)],
        ],
        3 => vec![
            vec![
                (0.26, 0.20),
                (0.38, 0.08),
                (0.58, 0.07),
                (0.72, 0.18),
                (0.70, 0.34),
                (0.52, 0.45),
            ],
            vec![
                (0.52, 0.45),
                (0.72, 0.52),
                (0.76, 0.70),
                (0.64, 0.88),
                (0.42, 0.93),
                (0.26, 0.82),
            ],
        ],
        4 => vec![
            vec![(0.62, 0.07), (0.24, 0.60)],
            vec![(0.24, 0.60), (0.82, 0.60)],
            vec![(0.64, 0.32), (0.64, 0.93)],
        ],
        5 => vec![
            vec![(0.72, 0.08), (0.32, 0.08)],
            vec![(0.32, 0.08), (0.29, 0.44)],
            vec![
                (0.29, 0.44),
                (0.48, 0.38),
                (0.66, 0.44),
                (0.74, 0.60),
                (0.68, 0.80),
                (0.50, 0.92),
                (0.28, 0.84),
            ],
        ],
        6 => vec![
            vec![(0.64, 0.07), (0.46, 0.20), (0.32, 0.42), (0.27, 0.62)],
            ellipse(0.48, 0.70, 0.21, 0.22),
        ],
        7 => vec![
            vec![(0.24, 0.08), (0.78, 0.08)],
            vec![(0.78, 0.08), (0.40, 0.93)],
        ],
        8 => vec![
            ellipse(0.50, 0.29, 0.21, 0.20),
            ellipse(0.50, 0.71, 0.25, 0.21),
        ],
        9 => vec![
            ellipse(0.49, 0.31, 0.21, 0.22),
            vec![(0.70, 0.33), (0.69, 0.60), (0.57, 0.92)],
        ],
        _ => panic!("digit class {class} out of range"),
    }
}

fn segment_distance(p: (f32, f32), a: (f32, f32), b: (f32, f32)) -> f32 {
    let (px, py) = (p.0 - a.0, p.1 - a.1);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len_sq = dx * dx + dy * dy;
    let t = if len_sq > 0.0 {
        ((px * dx + py * dy) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (ex, ey) = (px - t * dx, py - t * dy);
    (ex * ex + ey * ey).sqrt()
}

/// One randomized 28x28 rendering of the digit class.
pub fn digit_image(class: usize, rng: &mut impl Rng) -> IntensityImage {
    let scale_y = 22.0 * rng.gen_range(0.90..1.05f32);
    let scale_x = scale_y * rng.gen_range(0.88..1.08f32);
    let shear = rng.gen_range(-0.28..0.28f32);
    let shift_x = rng.gen_range(-1.2..1.2f32);
    let shift_y = rng.gen_range(-1.0..1.0f32);
    let half_width = rng.gen_range(0.85..1.30f32);
    let center = (IMAGE_SIZE as f32 - 1.0) / 2.0;

    let strokes: Vec<Stroke> = glyph(class)
        .into_iter()
        .map(|stroke| {
            stroke
                .into_iter()
                .map(|(x, y)| {
                    let slanted = x + shear * (0.5 - y);
                    (
                        center + shift_x + scale_x * (slanted - 0.5),
                        center + shift_y + scale_y * (y - 0.5),
                    )
                })
                .collect()
        })
        .collect();

    IntensityImage::from_fn(IMAGE_SIZE, IMAGE_SIZE, |px, py| {
        let p = (px as f32, py as f32);
        let mut dist = f32::MAX;
        for stroke in &strokes {
            for pair in stroke.windows(2) {
                dist = dist.min(segment_distance(p, pair[0], pair[1]));
            }
        }
        // linear edge over one pixel around the stroke boundary
        (half_width + 0.5 - dist).clamp(0.0, 1.0)
    })
}

/// Deterministic labeled set, `per_class` renderings of each class, grouped
/// by class. Sample `i` of class `c` depends only on `(seed, c, i)`.
pub fn digit_set(per_class: usize, seed: u64) -> Vec<(IntensityImage, usize)> {
    let mut out = Vec::with_capacity(per_class * CLASSES);
    for class in 0..CLASSES {
        for i in 0..per_class {
            let sample_seed = seed::mix(seed, (class * 1_000_003 + i) as u64);
            let mut rng = ChaCha12Rng::seed_from_u64(sample_seed);
            out.push((digit_image(class, &mut rng), class));
        }
    }
    out
}

/// Write a digit set as `<dir>/<class>/<index>.pgm`, returning the paths.
pub fn write_digit_set(dir: &Path, per_class: usize, seed: u64) -> io::Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for (i, (img, class)) in digit_set(per_class, seed).into_iter().enumerate() {
        let class_dir = dir.join(class.to_string());
        std::fs::create_dir_all(&class_dir)?;
        let path = class_dir.join(format!("{:04}.pgm", i % per_class));
        img.save_pgm(&path)?;
        paths.push(path);
    }
    Ok(paths)
}
