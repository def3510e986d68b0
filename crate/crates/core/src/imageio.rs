//! Image loading, region extraction and map rendering.
//!
//! Inputs are 8-bit PNG or binary PPM. Channel values are divided by 255
//! and raised to a clamp floor so the optical-density log stays finite.

use std::path::Path;

use image::{ColorType, ImageFormat, ImageReader};

use crate::error::{Error, Result};

pub const DEFAULT_CLAMP_FLOOR: f64 = 1.0 / 255.0;

/// Row-major grid of reflectance triples, each channel in `(0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[f64; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[f64; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroSizeImage);
        }
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} pixels supplied for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().flatten().find(|v| !(**v > 0.0 && **v <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "reflectance {bad} outside (0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.data[y * self.width + x]
    }
}

/// Grayscale map normalized so its minimum is 0 and maximum is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayMap {
    /// Min–max normalizes `values`. A constant input renders as all zeros.
    pub fn normalized(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "{} values supplied for a {width}x{height} map",
                values.len()
            )));
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let data = if span > 0.0 && span.is_finite() {
            values.iter().map(|v| (v - lo) / span).collect()
        } else {
            vec![0.0; values.len()]
        };
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    /// 8-bit encoding, `round(v * 255)`.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().map(|v| to_byte(*v)).collect()
    }
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Loads an 8-bit PNG or PPM and maps each channel `v` to `max(v/255, clamp_floor)`.
pub fn load_image(path: &Path, clamp_floor: f64) -> Result<RgbImage> {
    if !(clamp_floor > 0.0 && clamp_floor <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "clamp floor {clamp_floor} outside (0, 1]"
        )));
    }
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let reader = ImageReader::open(path)?.with_guessed_format()?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        Some(other) => return Err(Error::UnsupportedFormat(format!("{other:?}"))),
        None => return Err(Error::UnsupportedFormat("unrecognized".into())),
    }
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::Limits(_) | image::ImageError::Parameter(_) => Error::ZeroSizeImage,
        other => Error::UnsupportedFormat(other.to_string()),
    })?;
    match decoded.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => {}
        other => return Err(Error::UnsupportedFormat(format!("{other:?}"))),
    }
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::ZeroSizeImage);
    }
    let data = rgb
        .pixels()
        .map(|p| p.0.map(|c| (c as f64 / 255.0).max(clamp_floor)))
        .collect();
    RgbImage::new(w, h, data)
}

/// Axis-aligned pixel rectangle, written `x,y,w,h` on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Region {
    pub fn full(img: &RgbImage) -> Self {
        Self {
            x0: 0,
            y0: 0,
            width: img.width,
            height: img.height,
        }
    }

    pub fn extract(&self, img: &RgbImage) -> Result<RgbImage> {
        extract_region(img, self.x0, self.y0, self.width, self.height)
    }
}

impl std::str::FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<usize> = s
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidArgument(format!("region '{s}' is not x,y,w,h")))?;
        match parts[..] {
            [x0, y0, width, height] => Ok(Self {
                x0,
                y0,
                width,
                height,
            }),
            _ => Err(Error::InvalidArgument(format!(
                "region '{s}' is not x,y,w,h"
            ))),
        }
    }
}

/// The `w x h` sub-grid with top-left corner `(x0, y0)`.
pub fn extract_region(
    img: &RgbImage,
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
) -> Result<RgbImage> {
    let fits = w > 0
        && h > 0
        && x0.checked_add(w).is_some_and(|x1| x1 <= img.width)
        && y0.checked_add(h).is_some_and(|y1| y1 <= img.height);
    if !fits {
        return Err(Error::RegionOutOfBounds {
            x0,
            y0,
            w,
            h,
            width: img.width,
            height: img.height,
        });
    }
    let data = (y0..y0 + h)
        .flat_map(|y| (x0..x0 + w).map(move |x| (x, y)))
        .map(|(x, y)| img.pixel(x, y))
        .collect();
    RgbImage::new(w, h, data)
}

/// Box-filter downsampling by an integer factor. Trailing rows/columns that
/// do not fill a whole block are dropped.
pub fn downsample(img: &RgbImage, factor: usize) -> Result<RgbImage> {
    if factor == 0 {
        return Err(Error::InvalidArgument(
            "downsample factor must be >= 1".into(),
        ));
    }
    let (w, h) = (img.width / factor, img.height / factor);
    if w == 0 || h == 0 {
        return Err(Error::ZeroSizeImage);
    }
    let area = (factor * factor) as f64;
    let mut data = Vec::with_capacity(w * h);
    for by in 0..h {
        for bx in 0..w {
            let mut acc = [0.0; 3];
            for y in by * factor..(by + 1) * factor {
                for x in bx * factor..(bx + 1) * factor {
                    let p = img.pixel(x, y);
                    for c in 0..3 {
                        acc[c] += p[c];
                    }
                }
            }
            data.push(acc.map(|v| v / area));
        }
    }
    RgbImage::new(w, h, data)
}

pub(crate) fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|ext| ext.eq_ignore_ascii_case("png"))
}

fn netpbm(magic: &str, w: usize, h: usize, bytes: &[u8]) -> Vec<u8> {
    let mut out = format!("{magic}\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(bytes);
    out
}

fn png_bytes(w: usize, h: usize, bytes: &[u8], color: image::ExtendedColorType) -> Result<Vec<u8>> {
    use image::ImageEncoder;
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(bytes, w as u32, h as u32, color)
        .map_err(image_io_error)?;
    Ok(out)
}

/// File contents for a map: 8-bit PGM (P5), or PNG when `png` is set.
pub fn encode_map(map: &GrayMap, png: bool) -> Result<Vec<u8>> {
    let bytes = map.to_bytes();
    if png {
        png_bytes(map.width, map.height, &bytes, image::ExtendedColorType::L8)
    } else {
        Ok(netpbm("P5", map.width, map.height, &bytes))
    }
}

/// File contents for an image: 8-bit PPM (P6), or PNG when `png` is set.
pub fn encode_rgb(img: &RgbImage, png: bool) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = img.data.iter().flat_map(|p| p.map(to_byte)).collect();
    if png {
        png_bytes(
            img.width,
            img.height,
            &bytes,
            image::ExtendedColorType::Rgb8,
        )
    } else {
        Ok(netpbm("P6", img.width, img.height, &bytes))
    }
}

/// Writes a PGM, or PNG when the extension is `.png`.
pub fn save_map(map: &GrayMap, path: &Path) -> Result<()> {
    std::fs::write(path, encode_map(map, is_png(path))?)?;
    Ok(())
}

/// Writes a PPM, or PNG when the extension is `.png`.
pub fn save_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_rgb(img, is_png(path))?)?;
    Ok(())
}

fn image_io_error(e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(other.to_string())),
    }
}
