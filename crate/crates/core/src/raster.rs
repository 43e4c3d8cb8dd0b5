//! Byte-valued raster images and their conversion into real-valued tensors.
//!
//! A [`PixelGrid`] stores interleaved 8-bit samples in row-major order and is
//! either single-channel grayscale or three-channel RGB. All geometry
//! operations (crop, resize) stay in byte space; [`to_tensor`] is the single
//! place where bytes become floats, mapping each sample to `value / 255.0`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("image decode failed: {0}")]
    Decode(String),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("unsupported channel count {0}, expected 1 or 3")]
    BadChannels(u8),
    #[error("zero-sized image {0}x{1}")]
    EmptyImage(u32, u32),
    #[error("pixel buffer holds {got} bytes, expected {expected} for {width}x{height}x{channels}")]
    BadBufferSize {
        width: u32,
        height: u32,
        channels: u8,
        got: usize,
        expected: usize,
    },
    #[error("crop {rect:?} exceeds image bounds {width}x{height}")]
    CropOutOfBounds { rect: Rect, width: u32, height: u32 },
    #[error("degenerate rect {0:?}: width and height must be positive")]
    EmptyRect(Rect),
    #[error("resize target {0}x{1} must be positive")]
    BadResizeTarget(u32, u32),
    #[error("shape {shape:?} describes {expected} values but {got} were supplied")]
    ShapeMismatch {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
}

/// Axis-aligned rectangle in pixel coordinates, `(x, y)` top-left inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }
}

/// 8-bit raster image, row-major, channels interleaved per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl PixelGrid {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyImage(width, height));
        }
        if channels != 1 && channels != 3 {
            return Err(RasterError::BadChannels(channels));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(RasterError::BadBufferSize {
                width,
                height,
                channels,
                got: data.len(),
                expected,
            });
        }
        Ok(PixelGrid {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Samples of the pixel at `(x, y)`: one byte for grayscale, three for RGB.
    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let c = self.channels as usize;
        let idx = (y as usize * self.width as usize + x as usize) * c;
        &self.data[idx..idx + c]
    }
}

/// Decodes a PNG or JPEG byte stream.
///
/// 8-bit grayscale input stays single-channel; everything else (RGB, RGBA,
/// palette, 16-bit) is converted to 8-bit RGB.
pub fn decode_image(bytes: &[u8]) -> Result<PixelGrid, RasterError> {
    let decoded = image::load_from_memory(bytes).map_err(|e| match e {
        image::ImageError::Unsupported(u) => RasterError::UnsupportedFormat(u.to_string()),
        other => RasterError::Decode(other.to_string()),
    })?;
    match decoded {
        image::DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            PixelGrid::new(w, h, 1, g.into_raw())
        }
        other => {
            let rgb = other.to_rgb8();
            let (w, h) = rgb.dimensions();
            PixelGrid::new(w, h, 3, rgb.into_raw())
        }
    }
}

/// Reads and decodes an image file.
pub fn decode_image_path(path: &std::path::Path) -> Result<PixelGrid, RasterError> {
    let bytes = std::fs::read(path).map_err(|source| RasterError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_image(&bytes)
}

/// Converts to single-channel grayscale with BT.601 luminance weights,
/// `round(0.299 R + 0.587 G + 0.114 B)`, ties rounding away from zero.
/// Grayscale input is returned unchanged, so the operation is idempotent.
pub fn to_grayscale(img: &PixelGrid) -> PixelGrid {
    if img.channels == 1 {
        return img.clone();
    }
    let mut out = Vec::with_capacity(img.width as usize * img.height as usize);
    for px in img.data.chunks_exact(3) {
        let y = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
        out.push(y.round() as u8);
    }
    PixelGrid {
        width: img.width,
        height: img.height,
        channels: 1,
        data: out,
    }
}

/// Extracts the sub-image covered by `rect`; output pixel `(i, j)` equals
/// input pixel `(rect.x + i, rect.y + j)`.
pub fn crop(img: &PixelGrid, rect: Rect) -> Result<PixelGrid, RasterError> {
    if rect.w == 0 || rect.h == 0 {
        return Err(RasterError::EmptyRect(rect));
    }
    let x_end = rect.x as u64 + rect.w as u64;
    let y_end = rect.y as u64 + rect.h as u64;
    if x_end > img.width as u64 || y_end > img.height as u64 {
        return Err(RasterError::CropOutOfBounds {
            rect,
            width: img.width,
            height: img.height,
        });
    }
    let c = img.channels as usize;
    let row_bytes = rect.w as usize * c;
    let mut out = Vec::with_capacity(rect.h as usize * row_bytes);
    for j in 0..rect.h {
        let src = ((rect.y + j) as usize * img.width as usize + rect.x as usize) * c;
        out.extend_from_slice(&img.data[src..src + row_bytes]);
    }
    Ok(PixelGrid {
        width: rect.w,
        height: rect.h,
        channels: img.channels,
        data: out,
    })
}

/// Bilinear resize with half-pixel centre alignment: destination pixel `x`
/// samples source coordinate `(x + 0.5) * src / dst - 0.5`, clamped to the
/// source grid. Resizing to the source dimensions reproduces the image
/// exactly, and constant images stay constant.
pub fn resize(img: &PixelGrid, dst_w: u32, dst_h: u32) -> Result<PixelGrid, RasterError> {
    if dst_w == 0 || dst_h == 0 {
        return Err(RasterError::BadResizeTarget(dst_w, dst_h));
    }
    let c = img.channels as usize;
    let (sw, sh) = (img.width as usize, img.height as usize);
    let x_ratio = img.width as f64 / dst_w as f64;
    let y_ratio = img.height as f64 / dst_h as f64;
    let mut out = Vec::with_capacity(dst_w as usize * dst_h as usize * c);
    for dy in 0..dst_h {
        let sy = ((dy as f64 + 0.5) * y_ratio - 0.5).clamp(0.0, (sh - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let fy = sy - y0 as f64;
        for dx in 0..dst_w {
            let sx = ((dx as f64 + 0.5) * x_ratio - 0.5).clamp(0.0, (sw - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(sw - 1);
            let fx = sx - x0 as f64;
            for ch in 0..c {
                let at = |x: usize, y: usize| img.data[(y * sw + x) * c + ch] as f64;
                let top = (1.0 - fx) * at(x0, y0) + fx * at(x1, y0);
                let bot = (1.0 - fx) * at(x0, y1) + fx * at(x1, y1);
                let v = (1.0 - fy) * top + fy * bot;
                out.push(v.round() as u8);
            }
        }
    }
    Ok(PixelGrid {
        width: dst_w,
        height: dst_h,
        channels: img.channels,
        data: out,
    })
}

/// Dense real-valued array with an explicit shape. Every element is finite;
/// construction rejects NaN and infinities.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, RasterError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(RasterError::ShapeMismatch {
                shape,
                expected,
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(RasterError::NonFinite(i));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Converts an image to a `[channels, height, width]` tensor with every
/// sample mapped to `byte / 255.0`. The mapping is exactly invertible:
/// multiplying by 255 and rounding recovers the original bytes.
pub fn to_tensor(img: &PixelGrid) -> Tensor {
    let (w, h, c) = (
        img.width as usize,
        img.height as usize,
        img.channels as usize,
    );
    let mut data = vec![0.0; c * h * w];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                data[ch * h * w + y * w + x] = img.data[(y * w + x) * c + ch] as f64 / 255.0;
            }
        }
    }
    Tensor {
        shape: vec![c, h, w],
        data,
    }
}
