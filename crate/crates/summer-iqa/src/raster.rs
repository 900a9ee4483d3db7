//! Image rasters and bit-exact, dependency-light file formats.
//!
//! Reads binary PPM (P6, maxval 255) and 8-bit PNG; writes binary PPM and
//! grayscale PGM (P5). 8-bit samples are mapped to reals by dividing by 255
//! so that white is exactly 1.0.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{IqaError, Result};

/// A single real-valued sample grid. Error maps and spectra live here, so the
/// sample range is unbounded; operations must keep every value finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    samples: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, samples: Vec<f64>) -> Self {
        assert_eq!(samples.len(), width * height, "sample count must be width*height");
        Plane {
            width,
            height,
            samples,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Plane::new(width, height, vec![0.0; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                samples.push(f(row, col));
            }
        }
        Plane::new(width, height, samples)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.samples[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.samples[row * self.width + col] = value;
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn same_shape(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Per-sample map into a new plane.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &self.samples {
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }
}

/// An H×W×3 RGB raster with samples in [0,1]; the unit of all scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    planes: [Plane; 3],
}

impl RasterImage {
    /// Builds an image from R, G, B planes of identical dimensions.
    pub fn from_planes(r: Plane, g: Plane, b: Plane) -> Result<Self> {
        if !r.same_shape(&g) || !r.same_shape(&b) {
            return Err(IqaError::ShapeMismatch {
                width_a: r.width,
                height_a: r.height,
                width_b: g.width,
                height_b: g.height,
            });
        }
        Ok(RasterImage { planes: [r, g, b] })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let r = Plane::from_fn(width, height, |row, col| f(0, row, col));
        let g = Plane::from_fn(width, height, |row, col| f(1, row, col));
        let b = Plane::from_fn(width, height, |row, col| f(2, row, col));
        RasterImage { planes: [r, g, b] }
    }

    pub fn width(&self) -> usize {
        self.planes[0].width
    }

    pub fn height(&self) -> usize {
        self.planes[0].height
    }

    pub fn plane(&self, channel: usize) -> &Plane {
        &self.planes[channel]
    }

    pub fn planes(&self) -> &[Plane; 3] {
        &self.planes
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width() == other.width() && self.height() == other.height()
    }

    pub(crate) fn shape_error(&self, other: &RasterImage) -> IqaError {
        IqaError::ShapeMismatch {
            width_a: self.width(),
            height_a: self.height(),
            width_b: other.width(),
            height_b: other.height(),
        }
    }
}

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B. Output stays in [0,1] because
/// the weights are convex.
pub fn to_grayscale(img: &RasterImage) -> Plane {
    let (w, h) = (img.width(), img.height());
    let r = img.plane(0).samples();
    let g = img.plane(1).samples();
    let b = img.plane(2).samples();
    let samples = (0..w * h)
        .map(|i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i])
        .collect();
    Plane::new(w, h, samples)
}

/// Loads a PPM (P6) or PNG raster, dispatching on the file's magic bytes.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IqaError::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut magic = [0u8; 2];
    reader
        .read_exact(&mut magic)
        .map_err(|e| IqaError::io(path, e))?;
    match &magic {
        b"P6" => load_ppm_body(path, reader),
        [0x89, b'P'] => {
            drop(reader);
            load_png(path)
        }
        other => Err(IqaError::format(
            path,
            format!("unrecognized magic bytes {:02x} {:02x}", other[0], other[1]),
        )),
    }
}

// Reads a single whitespace-delimited ASCII token, skipping `#` comments.
fn read_token(reader: &mut impl BufRead, path: &Path) -> Result<String> {
    let mut token = Vec::new();
    let mut in_comment = false;
    loop {
        let mut byte = [0u8; 1];
        match reader.read(&mut byte) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => return Err(IqaError::io(path, e)),
        }
        let b = byte[0];
        if in_comment {
            if b == b'\n' {
                in_comment = false;
            }
            continue;
        }
        if b == b'#' {
            in_comment = true;
            continue;
        }
        if b.is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(b);
    }
    if token.is_empty() {
        return Err(IqaError::format(path, "truncated header"));
    }
    String::from_utf8(token).map_err(|_| IqaError::format(path, "non-ASCII header token"))
}

fn load_ppm_body(path: &Path, mut reader: BufReader<File>) -> Result<RasterImage> {
    let width: usize = read_token(&mut reader, path)?
        .parse()
        .map_err(|_| IqaError::format(path, "bad width field"))?;
    let height: usize = read_token(&mut reader, path)?
        .parse()
        .map_err(|_| IqaError::format(path, "bad height field"))?;
    let maxval: usize = read_token(&mut reader, path)?
        .parse()
        .map_err(|_| IqaError::format(path, "bad maxval field"))?;
    if maxval != 255 {
        return Err(IqaError::format(
            path,
            format!("unsupported maxval {maxval} (only 255)"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(IqaError::format(
            path,
            format!("degenerate dimensions {width}x{height}"),
        ));
    }
    let mut raw = vec![0u8; width * height * 3];
    reader
        .read_exact(&mut raw)
        .map_err(|e| IqaError::io(path, e))?;
    Ok(rgb8_to_raster(width, height, &raw, 3))
}

fn load_png(path: &Path) -> Result<RasterImage> {
    let file = File::open(path).map_err(|e| IqaError::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let mut png_reader = decoder
        .read_info()
        .map_err(|e| IqaError::format(path, format!("png decode: {e}")))?;
    let mut buf = vec![0u8; png_reader.output_buffer_size()];
    let info = png_reader
        .next_frame(&mut buf)
        .map_err(|e| IqaError::format(path, format!("png decode: {e}")))?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(IqaError::format(
            path,
            format!("unsupported png bit depth {:?} (only 8-bit)", info.bit_depth),
        ));
    }
    let (width, height) = (info.width as usize, info.height as usize);
    let raw = &buf[..info.buffer_size()];
    // Alpha is discarded; grayscale is replicated to three channels.
    let image = match info.color_type {
        png::ColorType::Rgb => rgb8_to_raster(width, height, raw, 3),
        png::ColorType::Rgba => rgb8_to_raster(width, height, raw, 4),
        png::ColorType::Grayscale => gray8_to_raster(width, height, raw, 1),
        png::ColorType::GrayscaleAlpha => gray8_to_raster(width, height, raw, 2),
        other => {
            return Err(IqaError::format(
                path,
                format!("unsupported png color type {other:?}"),
            ))
        }
    };
    Ok(image)
}

fn rgb8_to_raster(width: usize, height: usize, raw: &[u8], stride: usize) -> RasterImage {
    let n = width * height;
    let mut r = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for px in raw.chunks_exact(stride) {
        r.push(px[0] as f64 / 255.0);
        g.push(px[1] as f64 / 255.0);
        b.push(px[2] as f64 / 255.0);
    }
    RasterImage {
        planes: [
            Plane::new(width, height, r),
            Plane::new(width, height, g),
            Plane::new(width, height, b),
        ],
    }
}

fn gray8_to_raster(width: usize, height: usize, raw: &[u8], stride: usize) -> RasterImage {
    let samples: Vec<f64> = raw
        .chunks_exact(stride)
        .map(|px| px[0] as f64 / 255.0)
        .collect();
    let p = Plane::new(width, height, samples);
    RasterImage {
        planes: [p.clone(), p.clone(), p],
    }
}

/// Round half away from zero, then clamp to u8. Pinned so golden files are
/// stable across platforms.
fn quantize_u8(value: f64) -> u8 {
    let rounded = if value >= 0.0 {
        (value + 0.5).floor()
    } else {
        (value - 0.5).ceil()
    };
    rounded.clamp(0.0, 255.0) as u8
}

/// Writes a binary PPM (P6, maxval 255). Samples are treated as [0,1] and
/// quantized with round-half-away-from-zero, so `load(save(load(x)))` is
/// sample-exact for 8-bit sources.
pub fn save_image_ppm(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| IqaError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let (w, h) = (img.width(), img.height());
    write!(writer, "P6\n{w} {h}\n255\n").map_err(|e| IqaError::io(path, e))?;
    let r = img.plane(0).samples();
    let g = img.plane(1).samples();
    let b = img.plane(2).samples();
    let mut row = Vec::with_capacity(w * 3);
    for y in 0..h {
        row.clear();
        for x in 0..w {
            let i = y * w + x;
            row.push(quantize_u8(r[i] * 255.0));
            row.push(quantize_u8(g[i] * 255.0));
            row.push(quantize_u8(b[i] * 255.0));
        }
        writer.write_all(&row).map_err(|e| IqaError::io(path, e))?;
    }
    writer.flush().map_err(|e| IqaError::io(path, e))
}

/// Writes a plane as an 8-bit grayscale PGM (P5).
///
/// With `normalize` the value range [min,max] is affinely mapped to [0,255]
/// (a constant plane writes all zeros); without it samples are treated as
/// [0,1] and clamped.
pub fn save_plane_map(plane: &Plane, path: impl AsRef<Path>, normalize: bool) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| IqaError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let (w, h) = (plane.width(), plane.height());
    write!(writer, "P5\n{w} {h}\n255\n").map_err(|e| IqaError::io(path, e))?;
    let bytes: Vec<u8> = if normalize {
        let (min, max) = plane.min_max();
        if max > min {
            let scale = 255.0 / (max - min);
            plane
                .samples()
                .iter()
                .map(|&v| quantize_u8((v - min) * scale))
                .collect()
        } else {
            vec![0u8; w * h]
        }
    } else {
        plane.samples().iter().map(|&v| quantize_u8(v * 255.0)).collect()
    };
    writer.write_all(&bytes).map_err(|e| IqaError::io(path, e))?;
    writer.flush().map_err(|e| IqaError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(bytes: &[u8]) -> tempfile::NamedTempFile {
        use std::io::Write as _;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn ppm_2x2_direct_byte_mapping() {
        let mut data = b"P6\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[255, 0, 0, 0, 255, 0, 0, 0, 255, 255, 255, 255]);
        let f = write_temp(&data);
        let img = load_image(f.path()).unwrap();
        assert_eq!(img.plane(0).samples(), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(img.plane(1).samples(), &[0.0, 1.0, 0.0, 1.0]);
        assert_eq!(img.plane(2).samples(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn ppm_all_zero_8x8() {
        let mut data = b"P6\n# zeros\n8 8\n255\n".to_vec();
        data.extend_from_slice(&[0u8; 8 * 8 * 3]);
        let f = write_temp(&data);
        let img = load_image(f.path()).unwrap();
        assert_eq!(img.width(), 8);
        assert_eq!(img.height(), 8);
        assert!(img.planes().iter().all(|p| p.samples().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn ppm_rejects_bad_maxval() {
        let data = b"P6\n2 2\n65535\n".to_vec();
        let f = write_temp(&data);
        let err = load_image(f.path()).unwrap_err();
        assert!(matches!(err, IqaError::Format { .. }), "{err}");
        assert!(err.to_string().contains("65535"));
    }

    #[test]
    fn unknown_magic_is_format_error() {
        let f = write_temp(b"GIF89a");
        assert!(matches!(load_image(f.path()).unwrap_err(), IqaError::Format { .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_image("/nonexistent/nope.ppm").unwrap_err();
        assert!(matches!(err, IqaError::Io { .. }));
    }

    #[test]
    fn grayscale_known_pixels() {
        let img = RasterImage::from_fn(2, 1, |c, _, col| match (col, c) {
            (0, 0) => 1.0, // pure red
            (0, _) => 0.0,
            (1, _) => 1.0, // pure white
            _ => unreachable!(),
        });
        let gray = to_grayscale(&img);
        assert!((gray.get(0, 0) - 0.299).abs() < 1e-15);
        assert!((gray.get(0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grayscale_gray_axis_identity() {
        let img = RasterImage::from_fn(1, 1, |_, _, _| 0.5);
        assert!((to_grayscale(&img).get(0, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pgm_constant_plane_normalized_writes_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        save_plane_map(&Plane::new(2, 2, vec![3.5; 4]), &path, true).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes, b"P5\n2 2\n255\n\0\0\0\0");
    }

    #[test]
    fn pgm_endpoint_and_midpoint_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        save_plane_map(&Plane::new(2, 1, vec![0.0, 10.0]), &path, true).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[bytes.len() - 2..], &[0, 255]);

        // 127.5 rounds away from zero to 128.
        let path = dir.path().join("m3.pgm");
        save_plane_map(&Plane::new(3, 1, vec![0.0, 5.0, 10.0]), &path, true).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[bytes.len() - 3..], &[0, 128, 255]);
    }

    #[test]
    fn ppm_save_load_is_idempotent_on_8bit_data() {
        let dir = tempfile::tempdir().unwrap();
        let img = RasterImage::from_fn(5, 3, |c, row, col| {
            ((c * 89 + row * 31 + col * 7) % 256) as f64 / 255.0
        });
        let p1 = dir.path().join("a.ppm");
        save_image_ppm(&img, &p1).unwrap();
        let loaded = load_image(&p1).unwrap();
        assert_eq!(loaded, img);
        let p2 = dir.path().join("b.ppm");
        save_image_ppm(&loaded, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }
}
