use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Planar image, `data[(c·height + y)·width + x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T = f64> {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    data: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<T>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::Image(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Image(format!("empty image {width}×{height}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::Image(format!(
                "{} values for a {width}×{height}×{channels} image",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: T) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        (self.width, self.height, self.channels) == (other.width, other.height, other.channels)
    }

    /// Image of the same shape holding `data`.
    pub fn with_data(&self, data: Vec<T>) -> Result<Self> {
        Self::new(self.width, self.height, self.channels, data)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> T {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Values clamped to `[0, 1]`.
    pub fn clamped(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self
                .data
                .iter()
                .map(|v| v.max(T::zero()).min(T::one()))
                .collect(),
        }
    }
}

/// `10·log10(1/MSE)` for unit-range images; `None` flags identical images.
pub fn psnr<T: Real>(a: &Image<T>, b: &Image<T>) -> Result<Option<f64>> {
    if !a.same_shape(b) {
        return Err(Error::Dimension(format!(
            "PSNR of {}×{}×{} and {}×{}×{} images",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    let sse: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&u, &v)| (u - v).as_f64().powi(2))
        .sum();
    let mse = sse / a.len() as f64;
    Ok((mse > 0.0).then(|| -10.0 * mse.log10()))
}

/// Reads a binary PGM (P5) or PPM (P6) file, scaling values to `[0, 1]`.
pub fn load_image(path: &Path) -> Result<Image<f64>> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_pnm(&bytes).map_err(|e| match e {
        Error::Image(message) => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Writes `img` as P5 or P6 with maxval 255, clamping and rounding to nearest.
pub fn save_image<T: Real>(path: &Path, img: &Image<T>) -> Result<()> {
    fs::write(path, encode_pnm(img)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn encode_pnm<T: Real>(img: &Image<T>) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    for y in 0..img.height {
        for x in 0..img.width {
            for c in 0..img.channels {
                let v = img.get(c, y, x).as_f64().clamp(0.0, 1.0);
                out.push((v * 255.0).round() as u8);
            }
        }
    }
    out
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Image<f64>> {
    let bad = |m: &str| Error::Image(m.to_string());
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(bad("expected P5 or P6 magic number")),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for f in &mut fields {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(bad("malformed header"));
        }
        *f = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("header field out of range"))?;
    }
    let [width, height, maxval] = fields;
    if !(1..=255).contains(&maxval) {
        return Err(bad("only 8-bit maxval is supported"));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(bad("malformed header"));
    }
    pos += 1;
    let n = width * height * channels;
    let payload = bytes
        .get(pos..pos + n)
        .ok_or_else(|| bad("truncated payload"))?;
    let scale = 1.0 / maxval as f64;
    let mut data = vec![0.0; n];
    for (i, &b) in payload.iter().enumerate() {
        let (pix, c) = (i / channels, i % channels);
        if b as usize > maxval {
            return Err(bad("sample exceeds maxval"));
        }
        data[c * width * height + pix] = b as f64 * scale;
    }
    Image::new(width, height, channels, data)
}
