//! Color images as pure quaternion matrices, observation masks, and the
//! PSNR/SSIM quality metrics.
//!
//! Channels are kept as `f64` planes scaled to [0,1]; 8-bit file I/O divides
//! by 255 on load and rounds back on save. A pixel (r,g,b) maps to the pure
//! quaternion r·i + g·j + b·k.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qmat::QuaternionMatrix;
use crate::quat::Quaternion;

fn clamp01(v: f64) -> f64 {
    v.min(1.0).max(0.0)
}

/// An RGB image with channels in [0,1], stored column-major like the
/// quaternion matrices it converts to.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    rows: usize,
    cols: usize,
    r: Vec<f64>,
    g: Vec<f64>,
    b: Vec<f64>,
}

impl ColorImage {
    /// Builds an image from column-major channel planes, clamping every
    /// value to [0,1].
    pub fn new(rows: usize, cols: usize, r: Vec<f64>, g: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Argument("image dimensions must be positive".into()));
        }
        let n = rows * cols;
        if r.len() != n || g.len() != n || b.len() != n {
            return Err(Error::Shape(format!(
                "channel planes must have {n} entries for a {rows}x{cols} image"
            )));
        }
        let clamp_all = |mut v: Vec<f64>| {
            for x in &mut v {
                *x = clamp01(*x);
            }
            v
        };
        Ok(Self {
            rows,
            cols,
            r: clamp_all(r),
            g: clamp_all(g),
            b: clamp_all(b),
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        let n = rows * cols;
        Self {
            rows,
            cols,
            r: vec![0.0; n],
            g: vec![0.0; n],
            b: vec![0.0; n],
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> (f64, f64, f64),
    ) -> Self {
        let mut img = Self::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                img.set(r, c, f(r, c));
            }
        }
        img
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> (f64, f64, f64) {
        let i = r + self.rows * c;
        (self.r[i], self.g[i], self.b[i])
    }

    pub fn set(&mut self, r: usize, c: usize, rgb: (f64, f64, f64)) {
        let i = r + self.rows * c;
        self.r[i] = clamp01(rgb.0);
        self.g[i] = clamp01(rgb.1);
        self.b[i] = clamp01(rgb.2);
    }

    /// Encodes the channels on the imaginary parts; the real plane is
    /// identically zero.
    pub fn to_quaternion(&self) -> QuaternionMatrix {
        QuaternionMatrix::from_fn(self.rows, self.cols, |r, c| {
            let i = r + self.rows * c;
            Quaternion::new(0.0, self.r[i], self.g[i], self.b[i])
        })
    }

    /// Reads the channels back from the imaginary parts, clamping to [0,1]
    /// and discarding the real part.
    pub fn from_quaternion(m: &QuaternionMatrix) -> Self {
        Self::from_fn(m.rows(), m.cols(), |r, c| {
            let q = m.at(r, c);
            (q.x, q.y, q.z)
        })
    }

    /// Zero-fills unobserved pixels.
    pub fn apply_mask(&self, mask: &Mask) -> Result<Self> {
        if mask.rows != self.rows || mask.cols != self.cols {
            return Err(Error::Shape(format!(
                "mask is {}x{}, image is {}x{}",
                mask.rows, mask.cols, self.rows, self.cols
            )));
        }
        let mut out = self.clone();
        for (i, &keep) in mask.data.iter().enumerate() {
            if !keep {
                out.r[i] = 0.0;
                out.g[i] = 0.0;
                out.b[i] = 0.0;
            }
        }
        Ok(out)
    }
}

/// A boolean observation plane: `true` marks an observed pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Argument("mask dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "mask plane must have {} entries for {rows}x{cols}",
                rows * cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![true; rows * cols],
        }
    }

    /// Samples exactly `round(sr·rows·cols)` observed positions with a
    /// seeded shuffle; the same seed always yields the same mask.
    pub fn random(rows: usize, cols: usize, sr: f64, seed: u64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Argument("mask dimensions must be positive".into()));
        }
        if !(sr > 0.0 && sr <= 1.0) {
            return Err(Error::Argument(format!(
                "sampling rate must be in (0, 1], got {sr}"
            )));
        }
        let n = rows * cols;
        let count = (sr * n as f64).round() as usize;
        let count = count.min(n);
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..count {
            let j = rng.gen_range(i..n);
            order.swap(i, j);
        }
        let mut data = vec![false; n];
        for &i in &order[..count] {
            data[i] = true;
        }
        Ok(Self { rows, cols, data })
    }

    /// Marks a pixel observed iff it is not pure black in the given image.
    pub fn structural(img: &ColorImage) -> Self {
        let data = (0..img.rows * img.cols)
            .map(|i| img.r[i] > 0.0 || img.g[i] > 0.0 || img.b[i] > 0.0)
            .collect();
        Self {
            rows: img.rows,
            cols: img.cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column-major plane, aligned with the image channels.
    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn at(&self, r: usize, c: usize) -> bool {
        self.data[r + self.rows * c]
    }

    pub fn observed_count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn sampling_rate(&self) -> f64 {
        self.observed_count() as f64 / self.data.len() as f64
    }

    /// Renders the mask as a black/white image for saving.
    pub fn to_image(&self) -> ColorImage {
        ColorImage::from_fn(self.rows, self.cols, |r, c| {
            if self.at(r, c) {
                (1.0, 1.0, 1.0)
            } else {
                (0.0, 0.0, 0.0)
            }
        })
    }
}

fn check_same_dims(a: &ColorImage, b: &ColorImage) -> Result<()> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::Shape(format!(
            "images are {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB with peak 1.0, the squared error pooled
/// over all three channels. Identical images give +∞.
pub fn psnr(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    check_same_dims(a, b)?;
    let n = a.rows * a.cols;
    let mut acc = 0.0;
    for i in 0..n {
        acc += (a.r[i] - b.r[i]).powi(2);
        acc += (a.g[i] - b.g[i]).powi(2);
        acc += (a.b[i] - b.b[i]).powi(2);
    }
    let mse = acc / (3 * n) as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

fn gaussian_window(len: usize, sigma: f64) -> Vec<f64> {
    let center = (len - 1) as f64 / 2.0;
    let mut w: Vec<f64> = (0..len)
        .map(|i| (-(i as f64 - center).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

fn ssim_plane(x: &[f64], y: &[f64], rows: usize, cols: usize) -> f64 {
    let win = 11.min(rows).min(cols);
    let w = gaussian_window(win, 1.5);
    let c1 = (0.01f64).powi(2);
    let c2 = (0.03f64).powi(2);
    let mut total = 0.0;
    let mut count = 0usize;
    for c0 in 0..=(cols - win) {
        for r0 in 0..=(rows - win) {
            let mut mx = 0.0;
            let mut my = 0.0;
            let mut sxx = 0.0;
            let mut syy = 0.0;
            let mut sxy = 0.0;
            for dc in 0..win {
                for dr in 0..win {
                    let weight = w[dr] * w[dc];
                    let i = (r0 + dr) + rows * (c0 + dc);
                    let xv = x[i];
                    let yv = y[i];
                    mx += weight * xv;
                    my += weight * yv;
                    sxx += weight * xv * xv;
                    syy += weight * yv * yv;
                    sxy += weight * xv * yv;
                }
            }
            let vx = sxx - mx * mx;
            let vy = syy - my * my;
            let cxy = sxy - mx * my;
            let num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
            let den = (mx * mx + my * my + c1) * (vx + vy + c2);
            total += num / den;
            count += 1;
        }
    }
    total / count as f64
}

/// Mean structural similarity with an 11×11 Gaussian window (σ = 1.5,
/// K₁ = 0.01, K₂ = 0.03), computed per channel over all fully interior
/// windows and averaged across channels. The window shrinks to the image when
/// a side is smaller than 11.
pub fn ssim(a: &ColorImage, b: &ColorImage) -> Result<f64> {
    check_same_dims(a, b)?;
    let (rows, cols) = (a.rows, a.cols);
    let score = (ssim_plane(&a.r, &b.r, rows, cols)
        + ssim_plane(&a.g, &b.g, rows, cols)
        + ssim_plane(&a.b, &b.b, rows, cols))
        / 3.0;
    Ok(score)
}

fn byte_to_unit(v: u8) -> f64 {
    v as f64 / 255.0
}

fn unit_to_byte(v: f64) -> u8 {
    (clamp01(v) * 255.0).round() as u8
}

fn load_png(path: &Path) -> Result<ColorImage> {
    let img = image::open(path)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::Io(io),
            other => Error::Format(format!("cannot decode {}: {other}", path.display())),
        })?
        .into_rgb8();
    let (w, h) = img.dimensions();
    let (rows, cols) = (h as usize, w as usize);
    let mut out = ColorImage::zeros(rows, cols);
    for (x, y, p) in img.enumerate_pixels() {
        out.set(
            y as usize,
            x as usize,
            (byte_to_unit(p[0]), byte_to_unit(p[1]), byte_to_unit(p[2])),
        );
    }
    Ok(out)
}

fn save_png(img: &ColorImage, path: &Path) -> Result<()> {
    let mut buf = image::RgbImage::new(img.cols as u32, img.rows as u32);
    for (x, y, p) in buf.enumerate_pixels_mut() {
        let (r, g, b) = img.at(y as usize, x as usize);
        *p = image::Rgb([unit_to_byte(r), unit_to_byte(g), unit_to_byte(b)]);
    }
    buf.save(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::Io(io),
        other => Error::Format(format!("cannot encode {}: {other}", path.display())),
    })
}

/// Reads one whitespace-delimited PPM header token, skipping `#` comments.
fn ppm_token(bytes: &[u8], pos: &mut usize) -> Result<String> {
    let err = || Error::Format("truncated PPM header".into());
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos >= bytes.len() {
            return Err(err());
        }
        if bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        return Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned());
    }
}

fn load_ppm(path: &Path) -> Result<ColorImage> {
    let bytes = std::fs::read(path)?;
    let mut pos = 0usize;
    if ppm_token(&bytes, &mut pos)? != "P6" {
        return Err(Error::Format("not a binary PPM (P6) file".into()));
    }
    let parse = |t: String| {
        t.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PPM header field {t:?}")))
    };
    let width = parse(ppm_token(&bytes, &mut pos)?)?;
    let height = parse(ppm_token(&bytes, &mut pos)?)?;
    let maxval = parse(ppm_token(&bytes, &mut pos)?)?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported PPM maxval {maxval}")));
    }
    if width == 0 || height == 0 {
        return Err(Error::Format("PPM dimensions must be positive".into()));
    }
    pos += 1;
    let need = 3 * width * height;
    if bytes.len() < pos + need {
        return Err(Error::Format("PPM pixel data truncated".into()));
    }
    let mut out = ColorImage::zeros(height, width);
    for row in 0..height {
        for col in 0..width {
            let i = pos + 3 * (row * width + col);
            out.set(
                row,
                col,
                (
                    byte_to_unit(bytes[i]),
                    byte_to_unit(bytes[i + 1]),
                    byte_to_unit(bytes[i + 2]),
                ),
            );
        }
    }
    Ok(out)
}

fn save_ppm(img: &ColorImage, path: &Path) -> Result<()> {
    let mut bytes = format!("P6\n{} {}\n255\n", img.cols, img.rows).into_bytes();
    for row in 0..img.rows {
        for col in 0..img.cols {
            let (r, g, b) = img.at(row, col);
            bytes.push(unit_to_byte(r));
            bytes.push(unit_to_byte(g));
            bytes.push(unit_to_byte(b));
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Loads a PNG or PPM (P6) image by file extension.
pub fn load_image(path: &Path) -> Result<ColorImage> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => load_ppm(path),
        Some("png") => load_png(path),
        _ => Err(Error::Argument(format!(
            "unsupported image extension on {} (use .png or .ppm)",
            path.display()
        ))),
    }
}

/// Saves a PNG or PPM (P6) image by file extension.
pub fn save_image(img: &ColorImage, path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => save_ppm(img, path),
        Some("png") => save_png(img, path),
        _ => Err(Error::Argument(format!(
            "unsupported image extension on {} (use .png or .ppm)",
            path.display()
        ))),
    }
}
