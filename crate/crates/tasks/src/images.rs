use std::io::{Read, Write};
use std::path::Path;

use guidelab_tensor::RngState;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TaskError};
use crate::types::{split_80_10_10, DatasetSplit, ImageExample};

/// Magic prefix of the binary image container.
pub const IMAGE_MAGIC: &[u8; 4] = b"GIMG";
pub const IMAGE_FORMAT_VERSION: u32 = 1;

/// Highest number of shape classes the synthetic generator can draw.
pub const MAX_SHAPE_CLASSES: usize = 6;

/// Settings for the synthetic labelled-shape generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthImageSpec {
    pub classes: usize,
    #[serde(default = "default_channels")]
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub n: usize,
    #[serde(default = "default_noise")]
    pub noise: f64,
}

fn default_channels() -> usize {
    1
}

fn default_noise() -> f64 {
    0.05
}

impl Default for SynthImageSpec {
    fn default() -> Self {
        Self {
            classes: 4,
            channels: 1,
            height: 16,
            width: 16,
            n: 4000,
            noise: default_noise(),
        }
    }
}

impl SynthImageSpec {
    fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.classes > MAX_SHAPE_CLASSES {
            return Err(TaskError::InvalidConfig(format!(
                "classes must be in 2..={MAX_SHAPE_CLASSES}, got {}",
                self.classes
            )));
        }
        if self.channels == 0 || self.n == 0 {
            return Err(TaskError::InvalidConfig(
                "channels and n must be positive".into(),
            ));
        }
        if self.height < 8 || self.width < 8 {
            return Err(TaskError::InvalidConfig(
                "shape canvas needs at least 8x8 pixels".into(),
            ));
        }
        if !(0.0..=0.5).contains(&self.noise) {
            return Err(TaskError::InvalidConfig(
                "noise amplitude must be in 0.0..=0.5".into(),
            ));
        }
        Ok(())
    }
}

/// Quantize a `[0, 1]` pixel back to the byte it was loaded from.
pub(crate) fn pixel_to_byte(p: f32) -> u8 {
    (p.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn byte_to_pixel(b: u8) -> f32 {
    f32::from(b) / 255.0
}

/// Render one shape of class `label` onto a fresh plane, then jitter and
/// quantize. Class ids map to: 0 filled rectangle, 1 disk, 2 cross,
/// 3 diagonal stripes, 4 hollow square, 5 checkerboard.
fn render_shape(spec: &SynthImageSpec, label: usize, rng: &mut RngState) -> ImageExample {
    let (h, w, c) = (spec.height, spec.width, spec.channels);
    let r_hi = (h.min(w) / 2).saturating_sub(1).max(3);
    let rx = rng.next_range_inclusive(2, r_hi) as i64;
    let ry = rng.next_range_inclusive(2, r_hi) as i64;
    // Square-ish footprint for every class except the free rectangle.
    let (rx, ry) = if label == 0 { (rx, ry) } else { (rx, rx) };
    let cx = rng.next_range_inclusive(rx as usize, w - 1 - rx as usize) as i64;
    let cy = rng.next_range_inclusive(ry as usize, h - 1 - ry as usize) as i64;
    let fg = 0.6 + 0.4 * rng.next_uniform_f64(0.0, 1.0);
    let thick = (rx / 3).max(1);
    let period = (rx / 2).max(2);

    let mut plane = vec![0.0f64; h * w];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let (dx, dy) = (x - cx, y - cy);
            let inside_box = dx.abs() <= rx && dy.abs() <= ry;
            let on = match label {
                0 => inside_box,
                1 => dx * dx + dy * dy <= rx * rx,
                2 => (dx.abs() <= thick && dy.abs() <= ry) || (dy.abs() <= thick && dx.abs() <= rx),
                3 => inside_box && ((x + y).rem_euclid(2 * period) < period),
                4 => inside_box && dx.abs().max(dy.abs()) >= rx - thick,
                5 => inside_box && ((dx + rx) / period + (dy + ry) / period) % 2 == 0,
                _ => unreachable!("label checked against MAX_SHAPE_CLASSES"),
            };
            if on {
                plane[(y * w as i64 + x) as usize] = fg;
            }
        }
    }

    let mut pixels = Vec::with_capacity(c * h * w);
    for _ in 0..c {
        let tint = if c == 1 {
            1.0
        } else {
            0.5 + 0.5 * rng.next_uniform_f64(0.0, 1.0)
        };
        for &v in &plane {
            let jitter = spec.noise * (2.0 * rng.next_uniform_f64(0.0, 1.0) - 1.0);
            let p = (v * tint + jitter).clamp(0.0, 1.0);
            pixels.push(byte_to_pixel(pixel_to_byte(p as f32)));
        }
    }
    ImageExample {
        pixels,
        channels: c,
        height: h,
        width: w,
        label,
    }
}

/// Generate a synthetic shape dataset split 80/10/10.
///
/// Labels cycle through the classes so counts stay balanced; geometry, tone,
/// and noise come from the seeded stream, making the manifest reproducible.
pub fn gen_images(spec: &SynthImageSpec, seed: u64) -> Result<DatasetSplit<ImageExample>> {
    spec.validate()?;
    let mut rng = RngState::new(seed);
    let mut items = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        items.push(render_shape(spec, i % spec.classes, &mut rng));
    }
    // Shuffle so every split holds all classes even when n % classes != 0.
    rng.shuffle(&mut items);
    Ok(split_80_10_10(items, seed))
}

/// Load a binary image file, shuffle with `seed`, and split 80/10/10.
pub fn load_image_dataset(
    path: impl AsRef<Path>,
    seed: u64,
) -> Result<DatasetSplit<ImageExample>> {
    let mut items = load_images(path)?;
    let mut rng = RngState::new(seed);
    rng.shuffle(&mut items);
    Ok(split_80_10_10(items, seed))
}

/// Write images in the binary container: magic, version, u32 counts and
/// dims, raw u8 pixels, then u16 little-endian labels.
pub fn save_images(path: impl AsRef<Path>, items: &[ImageExample]) -> Result<()> {
    let path = path.as_ref();
    let first = items.first().ok_or_else(|| {
        TaskError::InvalidConfig("cannot save an empty image dataset".into())
    })?;
    let (c, h, w) = (first.channels, first.height, first.width);
    let mut buf = Vec::with_capacity(24 + items.len() * (c * h * w + 2));
    buf.extend_from_slice(IMAGE_MAGIC);
    buf.extend_from_slice(&IMAGE_FORMAT_VERSION.to_le_bytes());
    for dim in [items.len(), c, h, w] {
        buf.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for ex in items {
        if (ex.channels, ex.height, ex.width) != (c, h, w) {
            return Err(TaskError::InvalidConfig(
                "all images in a file must share one shape".into(),
            ));
        }
        if ex.pixels.len() != c * h * w {
            return Err(TaskError::SizeMismatch {
                what: "image pixels",
                expect: c * h * w,
                got: ex.pixels.len(),
            });
        }
        buf.extend(ex.pixels.iter().map(|&p| pixel_to_byte(p)));
    }
    for ex in items {
        if ex.label > u16::MAX as usize {
            return Err(TaskError::LabelOutOfRange {
                label: ex.label,
                classes: u16::MAX as usize + 1,
            });
        }
        buf.extend_from_slice(&(ex.label as u16).to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| TaskError::io(path, e))?;
    file.write_all(&buf).map_err(|e| TaskError::io(path, e))
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        match self.pos.checked_add(len).filter(|&e| e <= self.buf.len()) {
            Some(end) => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(TaskError::bad_format(
                self.path,
                format!("truncated {what}"),
            )),
        }
    }

    fn read_u32(&mut self, what: &str) -> Result<usize> {
        let bytes = self.take(4, what)?;
        Ok(u32::from_le_bytes(bytes.try_into().unwrap()) as usize)
    }
}

/// Read a binary image file back into memory.
pub fn load_images(path: impl AsRef<Path>) -> Result<Vec<ImageExample>> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| TaskError::io(path, e))?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf)
        .map_err(|e| TaskError::io(path, e))?;

    let mut r = ByteReader {
        buf: &buf,
        pos: 0,
        path,
    };
    if r.take(4, "magic")? != IMAGE_MAGIC {
        return Err(TaskError::bad_format(path, "bad magic"));
    }
    let version = r.read_u32("version")?;
    if version != IMAGE_FORMAT_VERSION as usize {
        return Err(TaskError::bad_format(
            path,
            format!("unsupported version {version}"),
        ));
    }
    let n = r.read_u32("count")?;
    let c = r.read_u32("channels")?;
    let h = r.read_u32("height")?;
    let w = r.read_u32("width")?;
    if n == 0 || c == 0 || h == 0 || w == 0 {
        return Err(TaskError::bad_format(path, "zero-sized header field"));
    }
    let per = c * h * w;
    let pixel_bytes = r.take(n * per, "pixel block")?.to_vec();
    let label_bytes = r.take(2 * n, "label block")?.to_vec();
    if r.pos != buf.len() {
        return Err(TaskError::bad_format(path, "trailing bytes after labels"));
    }

    let mut items = Vec::with_capacity(n);
    for i in 0..n {
        let pixels = pixel_bytes[i * per..(i + 1) * per]
            .iter()
            .map(|&b| byte_to_pixel(b))
            .collect();
        let label = u16::from_le_bytes([label_bytes[2 * i], label_bytes[2 * i + 1]]) as usize;
        items.push(ImageExample {
            pixels,
            channels: c,
            height: h,
            width: w,
            label,
        });
    }
    Ok(items)
}
