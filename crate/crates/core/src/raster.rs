//! Grayscale intensity rasters: loading, sampling, gradients, resizing.

use std::io;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

/// Row major grayscale image with intensities nominally in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("failed to decode image: {0}")]
    Decode(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl IntensityImage {
    pub fn new(width: usize, height: usize) -> IntensityImage {
        IntensityImage {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> IntensityImage {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        IntensityImage {
            width,
            height,
            data,
        }
    }

    pub fn uniform(width: usize, height: usize, value: f32) -> IntensityImage {
        IntensityImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f32) {
        self.data[y * self.width + x] = value;
    }

    /// Bilinear sample; `None` once the position leaves the pixel center grid.
    pub fn sample_bilinear(&self, x: f32, y: f32) -> Option<f32> {
        let max_x = (self.width - 1) as f32;
        let max_y = (self.height - 1) as f32;
        if !(0.0..=max_x).contains(&x) || !(0.0..=max_y).contains(&y) {
            return None;
        }
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f32;
        let fy = y - y0 as f32;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }

    /// Horizontal intensity gradient per pixel, central differences inside,
    /// one sided at the frame edge.
    pub fn gradient_x(&self, x: usize, y: usize) -> f32 {
        if self.width < 2 {
            return 0.0;
        }
        if x == 0 {
            self.get(1, y) - self.get(0, y)
        } else if x == self.width - 1 {
            self.get(x, y) - self.get(x - 1, y)
        } else {
            (self.get(x + 1, y) - self.get(x - 1, y)) * 0.5
        }
    }

    pub fn gradient_y(&self, x: usize, y: usize) -> f32 {
        if self.height < 2 {
            return 0.0;
        }
        if y == 0 {
            self.get(x, 1) - self.get(x, 0)
        } else if y == self.height - 1 {
            self.get(x, y) - self.get(x, y - 1)
        } else {
            (self.get(x, y + 1) - self.get(x, y - 1)) * 0.5
        }
    }

    /// Bilinear resize mapping pixel centers onto pixel centers.
    pub fn resize_bilinear(&self, width: usize, height: usize) -> IntensityImage {
        assert!(width > 0 && height > 0, "resize target must be non empty");
        let sx = self.width as f32 / width as f32;
        let sy = self.height as f32 / height as f32;
        IntensityImage::from_fn(width, height, |x, y| {
            let src_x = ((x as f32 + 0.5) * sx - 0.5).clamp(0.0, (self.width - 1) as f32);
            let src_y = ((y as f32 + 0.5) * sy - 0.5).clamp(0.0, (self.height - 1) as f32);
            self.sample_bilinear(src_x, src_y).unwrap()
        })
    }

    /// Write as an 8 bit binary PGM.
    pub fn save_pgm(&self, path: &Path) -> io::Result<()> {
        let mut out = Vec::with_capacity(self.width * self.height + 32);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.extend(
            self.data
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
        std::fs::write(path, out)
    }
}

/// Load any supported raster (PNG, PGM, PPM) as grayscale in `[0, 1]`.
pub fn load_intensity(path: &Path) -> Result<IntensityImage, RasterError> {
    let img = image::open(path)?.to_luma8();
    let (width, height) = (img.width() as usize, img.height() as usize);
    let data = img.into_raw().iter().map(|&v| v as f32 / 255.0).collect();
    Ok(IntensityImage {
        width,
        height,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bilinear_interpolates_and_bounds() {
        let img = IntensityImage::from_fn(3, 3, |x, y| (x + 3 * y) as f32);
        assert_eq!(img.sample_bilinear(1.0, 1.0), Some(4.0));
        assert_relative_eq!(img.sample_bilinear(0.5, 0.0).unwrap(), 0.5);
        assert_relative_eq!(img.sample_bilinear(1.0, 1.5).unwrap(), 5.5);
        assert_eq!(img.sample_bilinear(2.0, 2.0), Some(8.0));
        assert_eq!(img.sample_bilinear(-0.01, 0.0), None);
        assert_eq!(img.sample_bilinear(2.01, 0.0), None);
    }

    #[test]
    fn gradients_use_central_differences() {
        let img = IntensityImage::from_fn(5, 5, |x, _| (x * x) as f32);
        // d/dx x^2 = 2x exactly under central differences
        assert_relative_eq!(img.gradient_x(2, 2), 4.0);
        assert_relative_eq!(img.gradient_x(0, 0), 1.0);
        assert_relative_eq!(img.gradient_x(4, 0), 7.0);
        assert_relative_eq!(img.gradient_y(2, 2), 0.0);
    }

    #[test]
    fn resize_preserves_uniform_fields() {
        let img = IntensityImage::uniform(600, 180, 0.3);
        let small = img.resize_bilinear(240, 72);
        assert_eq!((small.width, small.height), (240, 72));
        assert!(small.data.iter().all(|&v| (v - 0.3).abs() < 1e-6));
    }

    #[test]
    fn resize_identity_keeps_pixels() {
        let img = IntensityImage::from_fn(7, 5, |x, y| (x * y) as f32 * 0.01);
        assert_eq!(img.resize_bilinear(7, 5), img);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let img = IntensityImage::from_fn(9, 4, |x, y| (x as f32 + y as f32) / 12.0);
        img.save_pgm(&path).unwrap();
        let back = load_intensity(&path).unwrap();
        assert_eq!((back.width, back.height), (9, 4));
        for (a, b) in back.data.iter().zip(&img.data) {
            assert!((a - b).abs() < 0.5 / 255.0 + 1e-4);
        }
    }
}
