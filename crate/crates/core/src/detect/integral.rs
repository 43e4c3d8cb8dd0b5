//! Summed-area tables for constant-time rectangle sums.

use super::DetectError;
use crate::raster::{to_grayscale, PixelGrid, Rect};

/// Cumulative sum and squared-sum tables of size `(w + 1) x (h + 1)`; row 0
/// and column 0 are zero, so any rectangle sum is four lookups.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: u32,
    height: u32,
    sum: Vec<u64>,
    sq_sum: Vec<u64>,
}

impl IntegralImage {
    /// Builds the tables from an image, converting to grayscale first when
    /// given RGB input.
    pub fn new(img: &PixelGrid) -> Self {
        let gray;
        let src = if img.channels() == 1 {
            img
        } else {
            gray = to_grayscale(img);
            &gray
        };
        let (w, h) = (src.width() as usize, src.height() as usize);
        let stride = w + 1;
        let mut sum = vec![0u64; stride * (h + 1)];
        let mut sq_sum = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            let mut row_sq = 0u64;
            for x in 0..w {
                let v = src.data()[y * w + x] as u64;
                row += v;
                row_sq += v * v;
                sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + row;
                sq_sum[(y + 1) * stride + x + 1] = sq_sum[y * stride + x + 1] + row_sq;
            }
        }
        IntegralImage {
            width: src.width(),
            height: src.height(),
            sum,
            sq_sum,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn table_sum(table: &[u64], stride: usize, r: Rect) -> u64 {
        let (x0, y0) = (r.x as usize, r.y as usize);
        let (x1, y1) = (x0 + r.w as usize, y0 + r.h as usize);
        table[y1 * stride + x1] + table[y0 * stride + x0]
            - table[y0 * stride + x1]
            - table[y1 * stride + x0]
    }

    fn check(&self, r: Rect) -> Result<(), DetectError> {
        if r.w == 0 || r.h == 0 {
            return Err(DetectError::EmptyRect(r));
        }
        if r.x as u64 + r.w as u64 > self.width as u64
            || r.y as u64 + r.h as u64 > self.height as u64
        {
            return Err(DetectError::RectOutOfBounds {
                rect: r,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Exact sum of the pixel values inside `r`.
    pub fn rect_sum(&self, r: Rect) -> Result<u64, DetectError> {
        self.check(r)?;
        Ok(Self::table_sum(&self.sum, self.width as usize + 1, r))
    }

    /// Exact sum of the squared pixel values inside `r`.
    pub fn rect_sq_sum(&self, r: Rect) -> Result<u64, DetectError> {
        self.check(r)?;
        Ok(Self::table_sum(&self.sq_sum, self.width as usize + 1, r))
    }

    /// Mean and standard deviation of the pixels inside `r`.
    pub fn rect_stats(&self, r: Rect) -> Result<(f64, f64), DetectError> {
        let area = r.area() as f64;
        let s = self.rect_sum(r)? as f64;
        let sq = self.rect_sq_sum(r)? as f64;
        let mean = s / area;
        let var = (sq / area - mean * mean).max(0.0);
        Ok((mean, var.sqrt()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn brute_sum(img: &PixelGrid, r: Rect) -> u64 {
        let mut total = 0u64;
        for y in r.y..r.y + r.h {
            for x in r.x..r.x + r.w {
                total += img.pixel(x, y)[0] as u64;
            }
        }
        total
    }

    fn brute_sq_sum(img: &PixelGrid, r: Rect) -> u64 {
        let mut total = 0u64;
        for y in r.y..r.y + r.h {
            for x in r.x..r.x + r.w {
                let v = img.pixel(x, y)[0] as u64;
                total += v * v;
            }
        }
        total
    }

    #[test]
    fn single_pixel_rect_is_the_pixel() {
        let img = PixelGrid::new(3, 3, 1, vec![1, 2, 3, 4, 5, 6, 7, 8, 9]).unwrap();
        let ii = IntegralImage::new(&img);
        assert_eq!(ii.rect_sum(Rect::new(1, 1, 1, 1)).unwrap(), 5);
        assert_eq!(ii.rect_sum(Rect::new(0, 0, 3, 3)).unwrap(), 45);
    }

    #[test]
    fn matches_brute_force_on_random_rects() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let data: Vec<u8> = (0..32 * 32).map(|_| rng.gen()).collect();
            let img = PixelGrid::new(32, 32, 1, data).unwrap();
            let ii = IntegralImage::new(&img);
            for _ in 0..40 {
                let x = rng.gen_range(0..32u32);
                let y = rng.gen_range(0..32u32);
                let w = rng.gen_range(1..=32 - x);
                let h = rng.gen_range(1..=32 - y);
                let r = Rect::new(x, y, w, h);
                assert_eq!(ii.rect_sum(r).unwrap(), brute_sum(&img, r));
                assert_eq!(ii.rect_sq_sum(r).unwrap(), brute_sq_sum(&img, r));
            }
        }
    }

    #[test]
    fn saturated_image_has_exact_sums() {
        let img = PixelGrid::new(64, 64, 1, vec![255; 64 * 64]).unwrap();
        let ii = IntegralImage::new(&img);
        let r = Rect::new(0, 0, 64, 64);
        assert_eq!(ii.rect_sum(r).unwrap(), 255 * 64 * 64);
        assert_eq!(ii.rect_sq_sum(r).unwrap(), 255 * 255 * 64 * 64);
    }

    #[test]
    fn rejects_out_of_bounds_and_empty() {
        let img = PixelGrid::new(4, 4, 1, vec![0; 16]).unwrap();
        let ii = IntegralImage::new(&img);
        assert!(matches!(
            ii.rect_sum(Rect::new(3, 3, 2, 1)),
            Err(DetectError::RectOutOfBounds { .. })
        ));
        assert!(matches!(
            ii.rect_sum(Rect::new(0, 0, 0, 1)),
            Err(DetectError::EmptyRect(_))
        ));
    }

    #[test]
    fn rgb_input_is_reduced_to_grayscale_first() {
        let rgb = PixelGrid::new(2, 1, 3, vec![255, 0, 0, 0, 0, 255]).unwrap();
        let ii = IntegralImage::new(&rgb);
        // luminances 76 and 29
        assert_eq!(ii.rect_sum(Rect::new(0, 0, 2, 1)).unwrap(), 76 + 29);
    }

    #[test]
    fn rect_stats_on_two_level_patch() {
        let mut data = vec![30u8; 8 * 8];
        data[32..].fill(220);
        let img = PixelGrid::new(8, 8, 1, data).unwrap();
        let ii = IntegralImage::new(&img);
        let (mean, sd) = ii.rect_stats(Rect::new(0, 0, 8, 8)).unwrap();
        assert_eq!(mean, 125.0);
        assert_eq!(sd, 95.0);
    }
}
