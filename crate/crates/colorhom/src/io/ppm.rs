//! PPM (P3/P6) chart images and grid-mean patch extraction.
//!
//! Pixel values are divided by maxval and treated as linear RGB; apply
//! `srgb_decode` afterwards if a file is known to be sRGB-encoded.

use std::path::Path;

use super::io_err;
use crate::patch::PatchSet;
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major, values in [0,1].
    pub pixels: Vec<[f64; 3]>,
}

impl Image {
    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }
}

struct Tokens<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_filler(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn next(&mut self) -> Option<&'a [u8]> {
        self.skip_filler();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn next_int(&mut self, what: &str) -> Result<usize, Error> {
        let tok = self.next().ok_or_else(|| truncated(what))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "bad {what} {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }
}

fn truncated(what: &str) -> Error {
    Error::InvalidInput(format!("truncated image: missing {what}"))
}

pub fn parse_ppm(bytes: &[u8]) -> Result<Image, Error> {
    let mut t = Tokens { bytes, pos: 0 };
    let magic = t.next().unwrap_or(b"");
    let binary = match magic {
        b"P3" => false,
        b"P6" => true,
        other => {
            return Err(Error::UnsupportedImageFormat(
                String::from_utf8_lossy(other).into_owned(),
            ))
        }
    };
    let width = t.next_int("width")?;
    let height = t.next_int("height")?;
    let maxval = t.next_int("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput("empty image".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::InvalidInput(format!("bad maxval {maxval}")));
    }

    let count = width * height * 3;
    let mut samples = Vec::with_capacity(count);
    if binary {
        t.pos += 1; // single whitespace byte after maxval
        let wide = maxval > 255;
        let bytes_per = if wide { 2 } else { 1 };
        let data = bytes
            .get(t.pos..t.pos + count * bytes_per)
            .ok_or_else(|| truncated("pixel data"))?;
        for chunk in data.chunks_exact(bytes_per) {
            let v = if wide {
                (chunk[0] as usize) << 8 | chunk[1] as usize
            } else {
                chunk[0] as usize
            };
            if v > maxval {
                return Err(Error::InvalidInput(format!("sample {v} exceeds maxval")));
            }
            samples.push(v);
        }
    } else {
        for _ in 0..count {
            let v = t.next_int("sample")?;
            if v > maxval {
                return Err(Error::InvalidInput(format!("sample {v} exceeds maxval")));
            }
            samples.push(v);
        }
    }

    let scale = 1.0 / maxval as f64;
    let pixels = samples
        .chunks_exact(3)
        .map(|c| [c[0] as f64 * scale, c[1] as f64 * scale, c[2] as f64 * scale])
        .collect();
    Ok(Image {
        width,
        height,
        pixels,
    })
}

pub fn load_ppm(path: &Path) -> Result<Image, Error> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    parse_ppm(&bytes)
}

/// An axis-aligned patch grid over an image, with a border fraction of each
/// cell ignored to avoid edge bleed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Fraction of each cell trimmed from every border, in [0, 0.5).
    pub inset: f64,
}

impl GridSpec {
    pub fn new(rows: usize, cols: usize) -> Self {
        GridSpec {
            rows,
            cols,
            inset: 0.25,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.rows * self.cols < 4 {
            return Err(Error::InvalidInput("grid needs at least 4 cells".into()));
        }
        if !(0.0..0.5).contains(&self.inset) {
            return Err(Error::InvalidInput("inset must be in [0, 0.5)".into()));
        }
        Ok(())
    }
}

// pixels whose centers fall in [lo, hi] (closed on both ends)
fn span(lo: f64, hi: f64) -> std::ops::Range<usize> {
    let first = (lo - 0.5).ceil().max(0.0) as usize;
    let last = (hi - 0.5).floor() as isize;
    if last < first as isize {
        first..first
    } else {
        first..(last as usize + 1)
    }
}

/// Mean RGB of each inset-trimmed grid cell, row-major.
pub fn extract_grid(img: &Image, spec: &GridSpec) -> Result<PatchSet, Error> {
    spec.validate()?;
    if img.width < spec.cols || img.height < spec.rows {
        return Err(Error::InvalidInput("image smaller than grid".into()));
    }
    let mut rows = Vec::with_capacity(spec.rows * spec.cols);
    for r in 0..spec.rows {
        let y0 = r as f64 * img.height as f64 / spec.rows as f64;
        let y1 = (r + 1) as f64 * img.height as f64 / spec.rows as f64;
        let ys = span(y0 + spec.inset * (y1 - y0), y1 - spec.inset * (y1 - y0));
        for c in 0..spec.cols {
            let x0 = c as f64 * img.width as f64 / spec.cols as f64;
            let x1 = (c + 1) as f64 * img.width as f64 / spec.cols as f64;
            let xs = span(x0 + spec.inset * (x1 - x0), x1 - spec.inset * (x1 - x0));
            if ys.is_empty() || xs.is_empty() {
                return Err(Error::InsetLeavesNoPixels);
            }
            let mut acc = [0.0; 3];
            let mut count = 0usize;
            for y in ys.clone() {
                for x in xs.clone() {
                    let p = img.pixel(x, y);
                    acc[0] += p[0];
                    acc[1] += p[1];
                    acc[2] += p[2];
                    count += 1;
                }
            }
            let n = count as f64;
            rows.push([acc[0] / n, acc[1] / n, acc[2] / n]);
        }
    }
    PatchSet::from_rows(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paint(width: usize, height: usize, rows: usize, cols: usize, colors: &[[u8; 3]]) -> Image {
        assert_eq!(colors.len(), rows * cols);
        let mut pixels = vec![[0.0; 3]; width * height];
        for y in 0..height {
            for x in 0..width {
                let r = y * rows / height;
                let c = x * cols / width;
                let col = colors[r * cols + c];
                pixels[y * width + x] =
                    [col[0] as f64 / 255.0, col[1] as f64 / 255.0, col[2] as f64 / 255.0];
            }
        }
        Image {
            width,
            height,
            pixels,
        }
    }

    #[test]
    fn parse_p3_with_comments() {
        let text = "P3 # comment\n# another\n2 1 255\n255 0 0  0 128 255\n";
        let img = parse_ppm(text.as_bytes()).unwrap();
        assert_eq!((img.width, img.height), (2, 1));
        assert_eq!(img.pixel(0, 0), [1.0, 0.0, 0.0]);
        assert!((img.pixel(1, 0)[1] - 128.0 / 255.0).abs() < 1e-15);
    }

    #[test]
    fn parse_p6_matches_p3() {
        let p3 = parse_ppm(b"P3\n2 2 255\n10 20 30 40 50 60 70 80 90 100 110 120\n").unwrap();
        let mut p6 = b"P6\n2 2\n255\n".to_vec();
        p6.extend([10, 20, 30, 40, 50, 60, 70, 80, 90, 100, 110, 120]);
        assert_eq!(parse_ppm(&p6).unwrap(), p3);
    }

    #[test]
    fn parse_p6_sixteen_bit() {
        let mut data = b"P6 1 1 65535\n".to_vec();
        data.extend([0xFF, 0xFF, 0x80, 0x00, 0x00, 0x01]);
        let img = parse_ppm(&data).unwrap();
        let p = img.pixel(0, 0);
        assert_eq!(p[0], 1.0);
        assert!((p[1] - 32768.0 / 65535.0).abs() < 1e-12);
        assert!((p[2] - 1.0 / 65535.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_unknown_format_by_name() {
        let err = parse_ppm(b"P5\n1 1 255\n\x00").unwrap_err();
        assert_eq!(err.to_string(), "unsupported image format \"P5\"");
        let png = b"\x89PNG\r\n\x1a\n";
        assert!(matches!(
            parse_ppm(png),
            Err(Error::UnsupportedImageFormat(_))
        ));
    }

    #[test]
    fn rejects_bad_samples_and_truncation() {
        assert!(parse_ppm(b"P3\n1 1 255\n256 0 0\n").is_err());
        assert!(parse_ppm(b"P3\n1 1 255\n255 0\n").is_err());
        let mut short = b"P6\n2 1 255\n".to_vec();
        short.extend([1, 2, 3]);
        assert!(parse_ppm(&short).is_err());
        assert!(parse_ppm(b"P3\n1 1 0\n0 0 0\n").is_err());
    }

    #[test]
    fn uniform_gray_grid() {
        let img = paint(8, 8, 2, 2, &[[128; 3]; 4]);
        let p = extract_grid(&img, &GridSpec::new(2, 2)).unwrap();
        assert_eq!(p.len(), 4);
        for row in p.rows() {
            assert_eq!(row, [128.0 / 255.0; 3]);
        }
    }

    #[test]
    fn painted_cells_recovered() {
        let colors: Vec<[u8; 3]> = vec![
            [230, 30, 20],
            [20, 200, 60],
            [25, 60, 210],
            [240, 230, 40],
            [150, 80, 170],
            [90, 90, 90],
        ];
        // uneven cell sizes: 13×7 image on a 2×3 grid
        let img = paint(13, 7, 2, 3, &colors);
        let p = extract_grid(&img, &GridSpec::new(2, 3)).unwrap();
        for (row, want) in p.rows().iter().zip(&colors) {
            for ch in 0..3 {
                assert!(
                    (row[ch] - want[ch] as f64 / 255.0).abs() <= 1.0 / 255.0,
                    "{row:?} vs {want:?}"
                );
            }
        }
    }

    #[test]
    fn grid_validation() {
        let img = paint(4, 4, 2, 2, &[[0; 3]; 4]);
        let mut spec = GridSpec::new(1, 2);
        assert!(extract_grid(&img, &spec).is_err());
        spec = GridSpec {
            inset: 0.5,
            ..GridSpec::new(2, 2)
        };
        assert!(extract_grid(&img, &spec).is_err());
        assert!(extract_grid(&img, &GridSpec::new(5, 5)).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("colorhom-ppm-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("img.ppm");
        std::fs::write(&path, b"P3\n2 2 255\n1 2 3 4 5 6 7 8 9 10 11 12\n").unwrap();
        let img = load_ppm(&path).unwrap();
        assert_eq!(img.width, 2);
        assert!((img.pixel(1, 1)[2] - 12.0 / 255.0).abs() < 1e-15);
    }
}
