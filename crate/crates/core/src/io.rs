//! Curve exchange files: `x,y` CSV plus a JSON sidecar.
//!
//! Coordinates are written with Rust's shortest round-trip float formatting,
//! so a written curve re-parses to the identical vertex list.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{CurveError, DiscreteCurve};
use crate::geometry::Vec2;
use crate::symmetry::SymmetrySpec;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("sidecar: {0}")]
    Sidecar(#[from] serde_json::Error),
    #[error("invalid curve: {0}")]
    Curve(#[from] CurveError),
}

/// JSON descriptor stored next to a curve CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveDescriptor {
    pub closed: bool,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetrySpec>,
}

pub fn curve_to_csv(curve: &DiscreteCurve) -> String {
    let mut out = String::with_capacity(32 * curve.len() + 4);
    out.push_str("x,y\n");
    for v in curve.vertices() {
        let _ = writeln!(out, "{},{}", v.x, v.y);
    }
    out
}

/// Parses `x,y` rows. Line numbers in errors are 1-based and count the header.
pub fn parse_curve_csv(text: &str, closed: bool) -> Result<DiscreteCurve, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "x,y" => {}
        Some((_, header)) => {
            return Err(IoError::Parse {
                line: 1,
                message: format!("expected header `x,y`, found {header:?}"),
            })
        }
        None => {
            return Err(IoError::Parse {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut vertices: Vec<Vec2> = Vec::new();
    let mut rows: Vec<usize> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let mut fields = raw.split(',');
        let (Some(xs), Some(ys), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(IoError::Parse {
                line,
                message: format!("expected two fields, found {raw:?}"),
            });
        };
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| IoError::Parse {
                line,
                message: format!("bad number {s:?}: {e}"),
            })
        };
        let v = Vec2::new(parse(xs)?, parse(ys)?);
        if !v.is_finite() {
            return Err(IoError::Parse {
                line,
                message: "non-finite coordinate".into(),
            });
        }
        if vertices.last() == Some(&v) {
            return Err(IoError::Parse {
                line,
                message: format!("duplicate consecutive vertex ({}, {})", v.x, v.y),
            });
        }
        vertices.push(v);
        rows.push(line);
    }
    if closed && vertices.len() > 1 && vertices.first() == vertices.last() {
        return Err(IoError::Parse {
            line: *rows.last().unwrap(),
            message: "last vertex repeats the first; closed curves close implicitly".into(),
        });
    }
    DiscreteCurve::new(vertices, closed).map_err(|e| match e {
        CurveError::DegenerateEdge { index } => IoError::Parse {
            line: rows[index],
            message: "degenerate edge".into(),
        },
        other => IoError::Curve(other),
    })
}

/// Writes `<stem>.csv` and `<stem>.json`.
pub fn write_curve(
    dir: &Path,
    stem: &str,
    curve: &DiscreteCurve,
    name: &str,
    symmetry: Option<SymmetrySpec>,
) -> Result<PathBuf, IoError> {
    let csv_path = dir.join(format!("{stem}.csv"));
    write_file(&csv_path, &curve_to_csv(curve))?;
    let descriptor = CurveDescriptor {
        closed: curve.is_closed(),
        name: name.to_string(),
        symmetry,
    };
    write_file(
        &dir.join(format!("{stem}.json")),
        &serde_json::to_string_pretty(&descriptor)?,
    )?;
    Ok(csv_path)
}

/// Reads a curve CSV and its sidecar (same path with a `.json` extension).
/// A missing sidecar means a closed, unnamed curve.
pub fn read_curve(csv_path: &Path) -> Result<(DiscreteCurve, CurveDescriptor), IoError> {
    let text = read_file(csv_path)?;
    let sidecar = csv_path.with_extension("json");
    let descriptor = if sidecar.exists() {
        serde_json::from_str(&read_file(&sidecar)?)?
    } else {
        CurveDescriptor {
            closed: true,
            name: csv_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            symmetry: None,
        }
    };
    let curve = parse_curve_csv(&text, descriptor.closed)?;
    Ok((curve, descriptor))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn read_file(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Fs {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use proptest::prelude::*;

    #[test]
    fn duplicate_row_is_named() {
        let text = "x,y\n0,0\n1,0\n1,0\n0,1\n";
        match parse_curve_csv(text, true) {
            Err(IoError::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_number_and_header() {
        assert!(matches!(
            parse_curve_csv("x,y\n0,0\n1,zz\n", false),
            Err(IoError::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_curve_csv("a,b\n0,0\n", false),
            Err(IoError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_curve_csv("x,y\n0,0\n1,0,3\n", false),
            Err(IoError::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn files_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let c = shapes::perturbed_covered_circle(2, 4, 0.05, 1.0, 64);
        let spec = SymmetrySpec::new(2, 4).unwrap();
        let path = write_curve(dir.path(), "c", &c, "perturbed", Some(spec)).unwrap();
        let (back, desc) = read_curve(&path).unwrap();
        assert_eq!(back, c);
        assert_eq!(desc.symmetry, Some(spec));
        assert_eq!(desc.name, "perturbed");
        let json = std::fs::read_to_string(dir.path().join("c.json")).unwrap();
        assert!(json.contains("\"i\": 2"));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(coords in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 3..40)) {
            let pts: Vec<Vec2> = coords.into_iter().map(|(x, y)| Vec2::new(x, y)).collect();
            if let Ok(c) = DiscreteCurve::closed(pts) {
                if c.vertices().windows(2).all(|w| w[0] != w[1]) && c.vertices()[0] != *c.vertices().last().unwrap() {
                    let back = parse_curve_csv(&curve_to_csv(&c), true).unwrap();
                    prop_assert_eq!(back, c);
                }
            }
        }
    }
}
