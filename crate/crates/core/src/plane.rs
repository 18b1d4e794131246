//! Single-channel images with real-valued pixels on the 0..255 intensity scale.

use crate::error::{Error, Result};

/// A dense H×W grayscale image, row-major.
///
/// Pixels are `f64` so intermediate results (noise, residues, filter outputs)
/// keep full precision; quantization happens only at the file boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImagePlane {
    pub fn zeros(height: usize, width: usize) -> Self {
        assert!(height >= 1 && width >= 1, "degenerate image dimensions");
        ImagePlane {
            height,
            width,
            data: vec![0.0; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::Shape(format!(
                "image data length {} does not equal {}x{}",
                data.len(),
                height,
                width
            )));
        }
        Ok(ImagePlane {
            height,
            width,
            data,
        })
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Self {
        ImagePlane {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel lookup with replicate-edge semantics for out-of-range coordinates.
    #[inline]
    pub fn at_clamped(&self, y: isize, x: isize) -> f64 {
        let y = y.clamp(0, self.height as isize - 1) as usize;
        let x = x.clamp(0, self.width as isize - 1) as usize;
        self.at(y, x)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ImagePlane {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn transpose(&self) -> Self {
        let mut out = ImagePlane::zeros(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.set(x, y, self.at(y, x));
            }
        }
        out
    }

    /// Crop `crop` pixels from every border.
    pub fn crop_border(&self, crop: usize) -> Result<Self> {
        if crop == 0 {
            return Ok(self.clone());
        }
        if 2 * crop >= self.height || 2 * crop >= self.width {
            return Err(Error::Argument(format!(
                "border crop {} leaves no pixels in a {}x{} image",
                crop, self.height, self.width
            )));
        }
        let h = self.height - 2 * crop;
        let w = self.width - 2 * crop;
        let mut out = ImagePlane::zeros(h, w);
        for y in 0..h {
            for x in 0..w {
                out.set(y, x, self.at(y + crop, x + crop));
            }
        }
        Ok(out)
    }

    pub fn same_dims(&self, other: &ImagePlane) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub(crate) fn require_same_dims(&self, other: &ImagePlane, what: &str) -> Result<()> {
        if !self.same_dims(other) {
            return Err(Error::Shape(format!(
                "{}: {}x{} vs {}x{}",
                what, self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }
}
