//! Deterministic software rasterizer and image comparison.
//!
//! No anti-aliasing: a pixel is covered iff its center lies inside the
//! shape. Compositing is source-over with straight alpha onto an opaque
//! white canvas, rounding half-up. All arithmetic is IEEE-754 basic
//! operations, so output is bit-identical across platforms.

use std::io::Write;

use crate::scene::{Geometry, Mark, Rgba, SceneGraph};

#[derive(Debug, thiserror::Error)]
pub enum RasterError {
    #[error("canvas has zero area ({width}x{height})")]
    ZeroArea { width: u32, height: u32 },

    #[error("image dimensions differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },

    #[error("blend fraction {0} outside (0, 1]")]
    BadFraction(f64),

    #[error("malformed PPM: {0}")]
    BadPpm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("png: {0}")]
    Png(String),
}

/// Row-major RGBA8, straight alpha.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RasterImage {
    /// A canvas filled with opaque white.
    pub fn blank(width: u32, height: u32) -> Result<RasterImage, RasterError> {
        RasterImage::filled(width, height, Rgba::WHITE)
    }

    pub fn filled(width: u32, height: u32, color: Rgba) -> Result<RasterImage, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::ZeroArea { width, height });
        }
        let n = width as usize * height as usize;
        let mut pixels = Vec::with_capacity(n * 4);
        for _ in 0..n {
            pixels.extend_from_slice(&[color.r, color.g, color.b, color.a]);
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgba {
        let i = self.offset(x, y);
        let p = &self.pixels[i..i + 4];
        Rgba {
            r: p[0],
            g: p[1],
            b: p[2],
            a: p[3],
        }
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, c: Rgba) {
        let i = self.offset(x, y);
        self.pixels[i..i + 4].copy_from_slice(&[c.r, c.g, c.b, c.a]);
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 4
    }

    fn blend(&mut self, x: i64, y: i64, c: Rgba, alpha: f64) {
        let i = self.offset(x as u32, y as u32);
        let dst = &mut self.pixels[i..i + 4];
        let src = [c.r, c.g, c.b];
        for k in 0..3 {
            dst[k] = round_channel(alpha * src[k] as f64 + (1.0 - alpha) * dst[k] as f64);
        }
        let da = dst[3] as f64 / 255.0;
        dst[3] = round_channel(255.0 * (alpha + (1.0 - alpha) * da));
    }

    /// Binary PPM (P6). The alpha channel is dropped; rasterized images are
    /// always opaque.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() / 4 * 3);
        for px in self.pixels.chunks_exact(4) {
            out.extend_from_slice(&px[..3]);
        }
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<RasterImage, RasterError> {
        let bad = |m: &str| RasterError::BadPpm(m.to_string());
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?);
        }
        if fields[0] != "P6" {
            return Err(bad("not P6"));
        }
        let num = |s: &str| s.parse::<u32>().map_err(|_| bad("bad number"));
        let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if maxval != 255 {
            return Err(bad("only maxval 255 is supported"));
        }
        let data = &bytes[(pos + 1).min(bytes.len())..];
        let n = width as usize * height as usize;
        if data.len() != n * 3 {
            return Err(bad("pixel data length"));
        }
        let mut img = RasterImage::blank(width, height)?;
        for (dst, src) in img.pixels.chunks_exact_mut(4).zip(data.chunks_exact(3)) {
            dst[..3].copy_from_slice(src);
            dst[3] = 255;
        }
        Ok(img)
    }

    pub fn write_ppm(&self, path: &std::path::Path) -> Result<(), RasterError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_ppm())?;
        Ok(())
    }

    /// PNG encoding for humans; not part of any bit-exact contract.
    pub fn to_png(&self) -> Result<Vec<u8>, RasterError> {
        let mut out = Vec::new();
        let mut enc = png::Encoder::new(&mut out, self.width, self.height);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc
            .write_header()
            .map_err(|e| RasterError::Png(e.to_string()))?;
        w.write_image_data(&self.pixels)
            .map_err(|e| RasterError::Png(e.to_string()))?;
        w.finish().map_err(|e| RasterError::Png(e.to_string()))?;
        Ok(out)
    }

    pub fn write_png(&self, path: &std::path::Path) -> Result<(), RasterError> {
        std::fs::write(path, self.to_png()?)?;
        Ok(())
    }

    /// Writes PNG when the extension is `.png`, PPM otherwise.
    pub fn save(&self, path: &std::path::Path) -> Result<(), RasterError> {
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png {
            self.write_png(path)
        } else {
            self.write_ppm(path)
        }
    }
}

fn round_channel(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Draws marks in draw order over white.
pub fn rasterize(scene: &SceneGraph) -> Result<RasterImage, RasterError> {
    let mut img = RasterImage::blank(scene.width, scene.height)?;
    draw_scene(&mut img, scene, 1.0);
    Ok(img)
}

/// Composites `scene` onto `img` with every mark's opacity multiplied by
/// `opacity_factor`.
pub fn draw_scene(img: &mut RasterImage, scene: &SceneGraph, opacity_factor: f64) {
    let mut order: Vec<&Mark> = scene.marks.iter().collect();
    order.sort_by_key(|m| m.draw_order);
    for m in order {
        draw_mark(img, m, opacity_factor);
    }
}

fn draw_mark(img: &mut RasterImage, mark: &Mark, opacity_factor: f64) {
    let alpha = (mark.color.a as f64 / 255.0 * mark.opacity * opacity_factor).clamp(0.0, 1.0);
    if alpha == 0.0 {
        return;
    }
    let (w, h) = (img.width as i64, img.height as i64);
    match mark.geometry {
        Geometry::Rect { x0, y0, x1, y1 } => {
            let (x0, x1) = ((x0 as i64).clamp(0, w), (x1 as i64).clamp(0, w));
            let (y0, y1) = ((y0 as i64).clamp(0, h), (y1 as i64).clamp(0, h));
            for y in y0..y1 {
                for x in x0..x1 {
                    img.blend(x, y, mark.color, alpha);
                }
            }
        }
        Geometry::Circle { cx, cy, r } => {
            let r2 = r * r;
            let (xa, xb) = pixel_range(cx - r, cx + r, w);
            let (ya, yb) = pixel_range(cy - r, cy + r, h);
            for y in ya..yb {
                let dy = y as f64 + 0.5 - cy;
                for x in xa..xb {
                    let dx = x as f64 + 0.5 - cx;
                    if dx * dx + dy * dy <= r2 {
                        img.blend(x, y, mark.color, alpha);
                    }
                }
            }
        }
        Geometry::Segment {
            x0,
            y0,
            x1,
            y1,
            width,
        } => {
            let half = width / 2.0;
            let half2 = half * half;
            let (xa, xb) = pixel_range(x0.min(x1) - half, x0.max(x1) + half, w);
            let (ya, yb) = pixel_range(y0.min(y1) - half, y0.max(y1) + half, h);
            let (dx, dy) = (x1 - x0, y1 - y0);
            let len2 = dx * dx + dy * dy;
            for y in ya..yb {
                let py = y as f64 + 0.5;
                for x in xa..xb {
                    let px = x as f64 + 0.5;
                    let t = if len2 == 0.0 {
                        0.0
                    } else {
                        (((px - x0) * dx + (py - y0) * dy) / len2).clamp(0.0, 1.0)
                    };
                    let ex = x0 + t * dx - px;
                    let ey = y0 + t * dy - py;
                    if ex * ex + ey * ey <= half2 {
                        img.blend(x, y, mark.color, alpha);
                    }
                }
            }
        }
    }
}

/// Pixel indices whose centers may fall in [lo, hi], clipped to [0, limit).
fn pixel_range(lo: f64, hi: f64, limit: i64) -> (i64, i64) {
    let a = (lo - 0.5).floor().max(0.0) as i64;
    let b = ((hi - 0.5).floor() as i64 + 1).min(limit);
    (a.min(limit), b.max(0))
}

fn check_dims(a: &RasterImage, b: &RasterImage) -> Result<(), RasterError> {
    if a.width != b.width || a.height != b.height {
        return Err(RasterError::DimensionMismatch {
            a_width: a.width,
            a_height: a.height,
            b_width: b.width,
            b_height: b.height,
        });
    }
    Ok(())
}

/// Number of pixel positions where any channel differs.
pub fn pixel_diff(a: &RasterImage, b: &RasterImage) -> Result<u64, RasterError> {
    pixel_diff_within(a, b, 0)
}

/// Number of pixel positions where some channel differs by more than
/// `tolerance`.
pub fn pixel_diff_within(
    a: &RasterImage,
    b: &RasterImage,
    tolerance: u8,
) -> Result<u64, RasterError> {
    check_dims(a, b)?;
    Ok(a.pixels
        .chunks_exact(4)
        .zip(b.pixels.chunks_exact(4))
        .filter(|(p, q)| {
            p.iter()
                .zip(q.iter())
                .any(|(x, y)| x.abs_diff(*y) > tolerance)
        })
        .count() as u64)
}

/// Chi-squared distance between per-channel 256-bin histograms, summed
/// over the four channels: sum of (a - b)^2 / (a + b) over non-empty bins.
pub fn chi2_histogram_distance(a: &RasterImage, b: &RasterImage) -> Result<f64, RasterError> {
    check_dims(a, b)?;
    let ha = histograms(a);
    let hb = histograms(b);
    let mut total = 0.0;
    for ch in 0..4 {
        for bin in 0..256 {
            let (x, y) = (ha[ch][bin] as f64, hb[ch][bin] as f64);
            if x + y > 0.0 {
                total += (x - y) * (x - y) / (x + y);
            }
        }
    }
    Ok(total)
}

fn histograms(img: &RasterImage) -> [[u64; 256]; 4] {
    let mut h = [[0u64; 256]; 4];
    for px in img.pixels.chunks_exact(4) {
        for ch in 0..4 {
            h[ch][px[ch] as usize] += 1;
        }
    }
    h
}

/// Predicts an overlap-free scene drawn at opacity scaled by `f`: each color
/// channel becomes `f * c + (1 - f) * 255`, rounded half-up.
pub fn blend_toward_background(img: &RasterImage, f: f64) -> Result<RasterImage, RasterError> {
    if !(f > 0.0 && f <= 1.0) {
        return Err(RasterError::BadFraction(f));
    }
    let mut out = img.clone();
    for px in out.pixels.chunks_exact_mut(4) {
        for c in &mut px[..3] {
            *c = round_channel(f * *c as f64 + (1.0 - f) * 255.0);
        }
    }
    Ok(out)
}
