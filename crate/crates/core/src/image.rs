//! Grayscale raster with intensities in `[0, 1]` (1 = white paper, 0 = ink).

use std::io::Cursor;
use std::path::Path;

use ::image::{ImageBuffer, ImageFormat, Luma};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        GrayImage { width, height, data: vec![value; width as usize * height as usize] }
    }

    /// Row-major pixels; panics if the length does not match.
    pub fn from_pixels(width: u32, height: u32, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width as usize * height as usize, "pixel buffer size");
        GrayImage { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: f32) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn to_luma8(&self) -> ImageBuffer<Luma<u8>, Vec<u8>> {
        let bytes = self.data.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
        ImageBuffer::from_raw(self.width, self.height, bytes).expect("buffer matches dimensions")
    }

    pub fn from_luma8(img: &ImageBuffer<Luma<u8>, Vec<u8>>) -> Self {
        let data = img.as_raw().iter().map(|&b| b as f32 / 255.0).collect();
        GrayImage { width: img.width(), height: img.height(), data }
    }

    /// 8-bit grayscale PNG.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.to_luma8().write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let img = ::image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
        Ok(Self::from_luma8(&img.to_luma8()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_png(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_png()?).map_err(|e| Error::io(path, e))
    }

    /// Box-filtered downsample to `w`×`h`; each output pixel averages the
    /// source pixels whose index range maps onto it.
    pub fn downsample(&self, w: u32, h: u32) -> GrayImage {
        let mut out = GrayImage::filled(w, h, 1.0);
        let (sw, sh) = (self.width as usize, self.height as usize);
        for oy in 0..h as usize {
            let y0 = oy * sh / h as usize;
            let y1 = ((oy + 1) * sh / h as usize).max(y0 + 1).min(sh);
            for ox in 0..w as usize {
                let x0 = ox * sw / w as usize;
                let x1 = ((ox + 1) * sw / w as usize).max(x0 + 1).min(sw);
                let mut acc = 0.0f64;
                for y in y0..y1 {
                    acc += self.data[y * sw + x0..y * sw + x1].iter().map(|&v| v as f64).sum::<f64>();
                }
                out.data[oy * w as usize + ox] = (acc / ((y1 - y0) * (x1 - x0)) as f64) as f32;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_preserves_8bit_levels() {
        let data: Vec<f32> = (0..64).map(|i| (i * 4) as f32 / 255.0).collect();
        let img = GrayImage::from_pixels(8, 8, data);
        let back = GrayImage::from_png(&img.to_png().unwrap()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn downsample_averages_blocks() {
        let mut img = GrayImage::filled(4, 4, 1.0);
        img.set(0, 0, 0.0);
        let d = img.downsample(2, 2);
        assert_eq!(d.pixels(), &[0.75, 1.0, 1.0, 1.0]);
    }
}
