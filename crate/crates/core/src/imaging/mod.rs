//! Segmentation of character images into fixed-size binary segments.
//!
//! The pipeline is: adaptive threshold → connected components → drop small
//! components → resample each component to `S×S` → flatten to a signal
//! vector.

mod io;

pub use io::{read_gray, write_binary_pgm, write_gray_pgm};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_SEGMENT_SIZE: usize = 16;
pub const DEFAULT_WINDOW: usize = 15;
pub const DEFAULT_OFFSET: f64 = 0.05;
pub const DEFAULT_MIN_PIXELS: usize = 30;

/// Grayscale raster with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image must be at least 1x1"));
        }
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} pixels for {}x{}, got {}",
                width * height,
                width,
                height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("intensity {bad} outside [0,1]")));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

/// Binary raster, `1` = foreground (ink), row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} pixels for {}x{}, got {}",
                width * height,
                width,
                height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|&p| p > 1) {
            return Err(Error::invalid("binary pixels must be 0 or 1"));
        }
        Ok(BinaryImage {
            width,
            height,
            pixels,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        BinaryImage {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    /// Builds an image from rows of `'#'`/`'1'` (foreground) and anything
    /// else (background). Handy for fixtures.
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        if rows.iter().any(|r| r.chars().count() != width) {
            return Err(Error::invalid("ragged ascii image"));
        }
        let pixels = rows
            .iter()
            .flat_map(|r| r.chars().map(|c| u8::from(c == '#' || c == '1')))
            .collect();
        Ok(BinaryImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.pixels[row * self.width + col] = u8::from(value);
    }

    pub fn count_foreground(&self) -> usize {
        self.pixels.iter().map(|&p| p as usize).sum()
    }
}

/// Axis-aligned box in source-image coordinates: `x0` is the column, `y0` the row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

/// A maximal connected foreground region.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub bbox: BBox,
    /// Only this component's pixels, cropped to `bbox`.
    pub mask: BinaryImage,
    pub pixel_count: usize,
}

/// A component resampled to a fixed `S×S` raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    pub image: BinaryImage,
    pub source_bbox: BBox,
}

impl Segment {
    /// Wraps an already square image; the bbox covers the whole image.
    pub fn from_image(image: BinaryImage) -> Result<Self> {
        if image.width() != image.height() {
            return Err(Error::invalid(format!(
                "segment must be square, got {}x{}",
                image.width(),
                image.height()
            )));
        }
        let source_bbox = BBox {
            x0: 0,
            y0: 0,
            w: image.width(),
            h: image.height(),
        };
        Ok(Segment { image, source_bbox })
    }

    pub fn size(&self) -> usize {
        self.image.width()
    }
}

/// Flattened segment: `values[r * cols + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalVector<T> {
    pub values: Vec<T>,
    pub dims: (usize, usize),
}

impl<T: Scalar> SignalVector<T> {
    pub fn new(values: Vec<T>, dims: (usize, usize)) -> Result<Self> {
        if values.len() != dims.0 * dims.1 {
            return Err(Error::invalid(format!(
                "signal length {} does not match dims {}x{}",
                values.len(),
                dims.0,
                dims.1
            )));
        }
        Ok(SignalVector { values, dims })
    }

    /// A 1-D signal (`dims = (1, n)`).
    pub fn from_vec(values: Vec<T>) -> Self {
        let n = values.len();
        SignalVector {
            values,
            dims: (1, n),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    DarkOnLight,
    LightOnDark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
            Connectivity::Eight => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }
}

/// Local-mean adaptive threshold.
///
/// A pixel is foreground when it is darker (or lighter, per `polarity`) than
/// the mean of its `window×window` neighbourhood by more than `offset`.
/// Border windows are truncated to the in-bounds pixels.
pub fn binarize_adaptive(
    img: &GrayImage,
    window: usize,
    offset: f64,
    polarity: Polarity,
) -> Result<BinaryImage> {
    let (w, h) = (img.width, img.height);
    if window % 2 == 0 || window < 3 || window > w.min(h) {
        return Err(Error::invalid(format!(
            "window must be odd and in [3, {}], got {window}",
            w.min(h)
        )));
    }
    if !(0.0..=1.0).contains(&offset) {
        return Err(Error::invalid(format!("offset {offset} outside [0,1]")));
    }

    // Summed-area table with a zero guard row/column.
    let mut sat = vec![0.0f64; (w + 1) * (h + 1)];
    for r in 0..h {
        let mut row_sum = 0.0;
        for c in 0..w {
            row_sum += img.get(r, c);
            sat[(r + 1) * (w + 1) + c + 1] = sat[r * (w + 1) + c + 1] + row_sum;
        }
    }

    let half = window / 2;
    let mut pixels = vec![0u8; w * h];
    for r in 0..h {
        let (r0, r1) = (r.saturating_sub(half), (r + half + 1).min(h));
        for c in 0..w {
            let (c0, c1) = (c.saturating_sub(half), (c + half + 1).min(w));
            let sum = sat[r1 * (w + 1) + c1] - sat[r0 * (w + 1) + c1] - sat[r1 * (w + 1) + c0]
                + sat[r0 * (w + 1) + c0];
            let mean = sum / ((r1 - r0) * (c1 - c0)) as f64;
            let v = img.get(r, c);
            let fg = match polarity {
                Polarity::DarkOnLight => v < mean - offset,
                Polarity::LightOnDark => v > mean + offset,
            };
            pixels[r * w + c] = u8::from(fg);
        }
    }
    Ok(BinaryImage {
        width: w,
        height: h,
        pixels,
    })
}

/// Global threshold at 0.5 where the minority side is taken as foreground.
/// Ties count dark pixels as foreground.
pub fn binarize_majority(img: &GrayImage) -> BinaryImage {
    let dark = img.pixels.iter().filter(|&&v| v < 0.5).count();
    let dark_is_fg = dark * 2 <= img.pixels.len();
    let pixels = img
        .pixels
        .iter()
        .map(|&v| u8::from((v < 0.5) == dark_is_fg))
        .collect();
    BinaryImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Labels maximal connected foreground regions.
///
/// Components are ordered by the top-left corner of their bbox (`y0`, then
/// `x0`), ties by decreasing pixel count.
pub fn connected_components(bin: &BinaryImage, connectivity: Connectivity) -> Vec<Component> {
    let (w, h) = (bin.width, bin.height);
    let mut label = vec![usize::MAX; w * h];
    let mut regions: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    for start in 0..w * h {
        if bin.pixels[start] == 0 || label[start] != usize::MAX {
            continue;
        }
        let id = regions.len();
        let mut members = Vec::new();
        label[start] = id;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            members.push(idx);
            let (r, c) = ((idx / w) as isize, (idx % w) as isize);
            for &(dr, dc) in connectivity.offsets() {
                let (nr, nc) = (r + dr, c + dc);
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                let n = nr as usize * w + nc as usize;
                if bin.pixels[n] == 1 && label[n] == usize::MAX {
                    label[n] = id;
                    queue.push_back(n);
                }
            }
        }
        regions.push(members);
    }

    let mut components: Vec<Component> = regions
        .into_iter()
        .map(|members| {
            let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
            for &idx in &members {
                let (r, c) = (idx / w, idx % w);
                x0 = x0.min(c);
                y0 = y0.min(r);
                x1 = x1.max(c);
                y1 = y1.max(r);
            }
            let bbox = BBox {
                x0,
                y0,
                w: x1 - x0 + 1,
                h: y1 - y0 + 1,
            };
            let mut mask = BinaryImage::zeros(bbox.w, bbox.h);
            for &idx in &members {
                mask.set(idx / w - y0, idx % w - x0, true);
            }
            Component {
                bbox,
                mask,
                pixel_count: members.len(),
            }
        })
        .collect();
    components.sort_by(|a, b| {
        (a.bbox.y0, a.bbox.x0)
            .cmp(&(b.bbox.y0, b.bbox.x0))
            .then(b.pixel_count.cmp(&a.pixel_count))
    });
    components
}

pub fn filter_small(components: Vec<Component>, min_pixels: usize) -> Vec<Component> {
    components
        .into_iter()
        .filter(|c| c.pixel_count >= min_pixels)
        .collect()
}

/// Bilinear resample of a binary raster to `out_w×out_h`, re-thresholded at 0.5.
///
/// Pixel centres are aligned: output pixel `i` samples source coordinate
/// `(i + 0.5)·src/out − 0.5`, clamped to the source extent. Aspect ratio is
/// not preserved.
pub fn resample_binary(src: &BinaryImage, out_w: usize, out_h: usize) -> BinaryImage {
    let coord = |i: usize, src_len: usize, out_len: usize| -> (usize, usize, f64) {
        let s = ((i as f64 + 0.5) * src_len as f64 / out_len as f64 - 0.5)
            .clamp(0.0, (src_len - 1) as f64);
        let lo = s.floor() as usize;
        let hi = (lo + 1).min(src_len - 1);
        (lo, hi, s - lo as f64)
    };
    let mut out = BinaryImage::zeros(out_w, out_h);
    for r in 0..out_h {
        let (r0, r1, fr) = coord(r, src.height, out_h);
        for c in 0..out_w {
            let (c0, c1, fc) = coord(c, src.width, out_w);
            let px = |rr: usize, cc: usize| src.get(rr, cc) as f64;
            let top = px(r0, c0) * (1.0 - fc) + px(r0, c1) * fc;
            let bottom = px(r1, c0) * (1.0 - fc) + px(r1, c1) * fc;
            let v = top * (1.0 - fr) + bottom * fr;
            out.set(r, c, v >= 0.5);
        }
    }
    out
}

/// Scales a component's mask to a `target×target` segment.
pub fn normalize_segment(comp: &Component, target: usize) -> Result<Segment> {
    if target < 2 {
        return Err(Error::invalid(format!(
            "segment size must be at least 2, got {target}"
        )));
    }
    Ok(Segment {
        image: resample_binary(&comp.mask, target, target),
        source_bbox: comp.bbox,
    })
}

/// Row-major flattening, foreground → 1, background → 0.
pub fn flatten<T: Scalar>(seg: &Segment) -> SignalVector<T> {
    let img = &seg.image;
    SignalVector {
        values: img
            .pixels
            .iter()
            .map(|&p| if p == 1 { T::one() } else { T::zero() })
            .collect(),
        dims: (img.height, img.width),
    }
}

/// Inverse of [`flatten`]; values at or above 0.5 become foreground.
pub fn unflatten<T: Scalar>(signal: &SignalVector<T>) -> BinaryImage {
    let half = T::of(0.5);
    BinaryImage {
        width: signal.dims.1,
        height: signal.dims.0,
        pixels: signal.values.iter().map(|&v| u8::from(v >= half)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    pub window: usize,
    pub offset: f64,
    pub polarity: Polarity,
    pub connectivity: Connectivity,
    pub min_pixels: usize,
    pub size: usize,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            window: DEFAULT_WINDOW,
            offset: DEFAULT_OFFSET,
            polarity: Polarity::DarkOnLight,
            connectivity: Connectivity::Eight,
            min_pixels: DEFAULT_MIN_PIXELS,
            size: DEFAULT_SEGMENT_SIZE,
        }
    }
}

/// Binarizes a plate image and keeps the components of at least
/// `params.min_pixels` pixels, in component order. The window is shrunk to
/// the largest odd size that fits when the image is smaller than
/// `params.window`.
pub fn segment_components(img: &GrayImage, params: &SegmentParams) -> Result<Vec<Component>> {
    let limit = img.width.min(img.height);
    let mut window = params.window.min(limit);
    if window % 2 == 0 {
        window -= 1;
    }
    let bin = binarize_adaptive(img, window, params.offset, params.polarity)?;
    Ok(filter_small(
        connected_components(&bin, params.connectivity),
        params.min_pixels,
    ))
}

/// Full segmentation of a plate image into `params.size` square segments.
pub fn segment_image(img: &GrayImage, params: &SegmentParams) -> Result<Vec<Segment>> {
    segment_components(img, params)?
        .iter()
        .map(|c| normalize_segment(c, params.size))
        .collect()
}
