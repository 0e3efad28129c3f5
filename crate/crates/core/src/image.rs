//! Square-or-rectangular 8-bit RGB buffers and PNG I/O.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};
use thiserror::Error;

pub type Rgb = [u8; 3];

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image has non-positive dimensions {0}x{1}")]
    Empty(u32, u32),
    #[error("pixel buffer of {got} bytes does not match {width}x{height} RGB")]
    BadLength { width: u32, height: u32, got: usize },
    #[error("png codec: {0}")]
    Codec(#[from] image::ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Row-major RGB pixels, 3 bytes per pixel.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for ImageBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ImageBuffer({}x{})", self.width, self.height)
    }
}

impl ImageBuffer {
    pub fn filled(width: u32, height: u32, color: Rgb) -> Self {
        let data = color.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        ImageBuffer { width, height, data }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::Empty(width, height));
        }
        if data.len() != width as usize * height as usize * 3 {
            return Err(ImageError::BadLength { width, height, got: data.len() });
        }
        Ok(ImageBuffer { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Pixel at row-major index `i`.
    pub fn at(&self, i: usize) -> Rgb {
        [self.data[3 * i], self.data[3 * i + 1], self.data[3 * i + 2]]
    }

    pub fn put(&mut self, x: u32, y: u32, color: Rgb) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&color);
    }

    pub fn put_index(&mut self, i: usize, color: Rgb) {
        self.data[3 * i..3 * i + 3].copy_from_slice(&color);
    }

    pub fn to_png(&self) -> Result<Vec<u8>, ImageError> {
        let img = RgbImage::from_raw(self.width, self.height, self.data.clone())
            .ok_or(ImageError::BadLength { width: self.width, height: self.height, got: self.data.len() })?;
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    /// Decodes any PNG (gray, alpha, 16-bit) into 8-bit RGB.
    pub fn from_png(bytes: &[u8]) -> Result<Self, ImageError> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.into_rgb8();
        let (w, h) = img.dimensions();
        ImageBuffer::from_raw(w, h, img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        std::fs::write(path, self.to_png()?)?;
        Ok(())
    }

    pub fn load_png(path: &Path) -> Result<Self, ImageError> {
        Self::from_png(&std::fs::read(path)?)
    }

    pub(crate) fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.data.clone()).expect("length checked on construction")
    }

    pub(crate) fn from_rgb_image(img: RgbImage) -> Self {
        let (width, height) = img.dimensions();
        ImageBuffer { width, height, data: img.into_raw() }
    }
}

/// Largest per-channel absolute difference.
pub fn channel_distance(a: Rgb, b: Rgb) -> u8 {
    a.iter().zip(b.iter()).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
}
