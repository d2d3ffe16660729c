//! Patch-set CSV: header `R,G,B` (case-insensitive, optional fourth
//! `label` column), one patch per row. Values are written with shortest
//! round-trip float formatting, so save → load is lossless.

use std::fmt::Write as _;
use std::path::Path;

use super::{atomic_write, io_err};
use crate::colorspace::srgb_decode;
use crate::patch::PatchSet;
use crate::Error;

/// How CSV values map to linear RGB.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Values are linear RGB, taken as-is.
    Linear,
    /// Values are 8-bit sRGB in [0,255]; decoded to linear.
    Srgb8,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses CSV text; `line` numbers in errors are 1-based over the raw text.
pub fn parse_patch_csv(text: &str, enc: Encoding) -> Result<PatchSet, Error> {
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if !saw_header {
            let lower: Vec<String> = fields.iter().map(|f| f.to_ascii_lowercase()).collect();
            if lower != ["r", "g", "b"] && lower != ["r", "g", "b", "label"] {
                return Err(parse_err(line, "expected header R,G,B"));
            }
            saw_header = true;
            continue;
        }
        if fields.len() != 3 && fields.len() != 4 {
            return Err(parse_err(line, "expected 3 fields"));
        }
        let mut row = [0.0; 3];
        for (i, field) in fields[..3].iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("invalid number {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, "non-finite value"));
            }
            row[i] = match enc {
                Encoding::Linear => v,
                Encoding::Srgb8 => {
                    if !(0.0..=255.0).contains(&v) {
                        return Err(parse_err(line, "invalid 8-bit value"));
                    }
                    srgb_decode(v / 255.0)
                }
            };
        }
        rows.push(row);
    }
    if !saw_header {
        return Err(parse_err(1, "expected header R,G,B"));
    }
    PatchSet::from_rows(&rows)
}

pub fn load_patch_csv(path: &Path, enc: Encoding) -> Result<PatchSet, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_patch_csv(&text, enc)
}

pub fn format_patch_csv(patches: &PatchSet) -> String {
    let mut out = String::from("R,G,B\n");
    for row in patches.rows() {
        let _ = writeln!(out, "{},{},{}", row[0], row[1], row[2]);
    }
    out
}

/// Atomic save in linear encoding.
pub fn save_patch_csv(path: &Path, patches: &PatchSet) -> Result<(), Error> {
    atomic_write(path, format_patch_csv(patches).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_parse() {
        let p = parse_patch_csv("R,G,B\n1,0,0\n0,1,0\n0,0,1\n1,1,1\n", Encoding::Linear).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.row(0), [1.0, 0.0, 0.0]);
        assert_eq!(p.row(3), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn header_variants_and_label_column() {
        assert!(parse_patch_csv("r , G ,b\n0.5,0.5,0.5\n", Encoding::Linear).is_ok());
        let p = parse_patch_csv(
            "R,G,B,label\n0.1,0.2,0.3,dark skin\n0.4,0.5,0.6,foliage\n",
            Encoding::Linear,
        )
        .unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.row(1), [0.4, 0.5, 0.6]);
        match parse_patch_csv("R;G;B\n1,2,3\n", Encoding::Linear) {
            Err(Error::Parse { line: 1, msg }) => assert_eq!(msg, "expected header R,G,B"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_column_names_line() {
        let err = parse_patch_csv("R,G,B\n1,0,0\n0,1\n0,0,1\n", Encoding::Linear).unwrap_err();
        assert_eq!(err.to_string(), "line 3: expected 3 fields");
    }

    #[test]
    fn bad_values() {
        let err = parse_patch_csv("R,G,B\n1,zero,0\n", Encoding::Linear).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_patch_csv("R,G,B\n1,inf,0\n", Encoding::Linear).unwrap_err();
        assert_eq!(err.to_string(), "line 2: non-finite value");
        let err = parse_patch_csv("R,G,B\n1,300,0\n", Encoding::Srgb8).unwrap_err();
        assert_eq!(err.to_string(), "line 2: invalid 8-bit value");
    }

    #[test]
    fn srgb8_decoding() {
        let p = parse_patch_csv("R,G,B\n255,0,128\n", Encoding::Srgb8).unwrap();
        let row = p.row(0);
        assert_eq!(row[0], 1.0);
        assert_eq!(row[1], 0.0);
        assert!((row[2] - srgb_decode(128.0 / 255.0)).abs() < 1e-15);
    }

    #[test]
    fn round_trip_is_lossless() {
        let rows: Vec<[f64; 3]> = (0..24)
            .map(|i| {
                let x = i as f64;
                [
                    (x * 0.618_033_988_749_894_9).fract(),
                    1.0 / (x + 3.0),
                    x.sin().abs(),
                ]
            })
            .collect();
        let p = PatchSet::from_rows(&rows).unwrap();
        let text = format_patch_csv(&p);
        let q = parse_patch_csv(&text, Encoding::Linear).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn save_and_load_file() {
        let dir = std::env::temp_dir().join("colorhom-csv-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("patches.csv");
        let p = PatchSet::from_rows(&[[0.25, 0.5, 0.75], [1e-9, 0.1, 3.0]]).unwrap();
        save_patch_csv(&path, &p).unwrap();
        let q = load_patch_csv(&path, Encoding::Linear).unwrap();
        assert_eq!(p, q);
        assert!(load_patch_csv(&dir.join("missing.csv"), Encoding::Linear).is_err());
    }
}
