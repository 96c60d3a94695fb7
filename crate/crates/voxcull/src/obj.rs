//! Minimal ASCII OBJ ingestion: positions and faces only, polygons fan
//! triangulated, primitive ids assigned in file order.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::geometry::{Triangle, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum ObjError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no triangles in {0}")]
    Empty(String),
}

/// Load triangles from an OBJ file. Normals/UVs are ignored; faces with more
/// than three vertices are fan triangulated; negative indices are relative.
pub fn load_obj(path: &Path) -> Result<Vec<Triangle>, ObjError> {
    let file = File::open(path).map_err(|source| ObjError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<Triangle> = Vec::new();

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|source| ObjError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    let tok = tokens.next().ok_or_else(|| ObjError::Parse {
                        line: line_no,
                        msg: "vertex needs three coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| ObjError::Parse {
                        line: line_no,
                        msg: format!("bad coordinate '{tok}'"),
                    })?;
                }
                vertices.push(Vec3::from_array(coords));
            }
            Some("f") => {
                let mut idx: Vec<usize> = Vec::new();
                for tok in tokens {
                    let first = tok.split('/').next().unwrap_or("");
                    let raw: i64 = first.parse().map_err(|_| ObjError::Parse {
                        line: line_no,
                        msg: format!("bad face index '{tok}'"),
                    })?;
                    let resolved = if raw > 0 {
                        raw as usize - 1
                    } else if raw < 0 {
                        let n = vertices.len() as i64 + raw;
                        if n < 0 {
                            return Err(ObjError::Parse {
                                line: line_no,
                                msg: format!("relative index {raw} out of range"),
                            });
                        }
                        n as usize
                    } else {
                        return Err(ObjError::Parse {
                            line: line_no,
                            msg: "face index 0 is invalid".into(),
                        });
                    };
                    if resolved >= vertices.len() {
                        return Err(ObjError::Parse {
                            line: line_no,
                            msg: format!("face index {raw} out of range"),
                        });
                    }
                    idx.push(resolved);
                }
                if idx.len() < 3 {
                    return Err(ObjError::Parse {
                        line: line_no,
                        msg: "face needs at least three vertices".into(),
                    });
                }
                for i in 1..idx.len() - 1 {
                    let id = triangles.len() as u32;
                    triangles.push(Triangle::new(
                        vertices[idx[0]],
                        vertices[idx[i]],
                        vertices[idx[i + 1]],
                        id,
                    ));
                }
            }
            // Comments, groups, materials, normals, UVs: ignored.
            _ => {}
        }
    }

    if triangles.is_empty() {
        return Err(ObjError::Empty(path.display().to_string()));
    }
    Ok(triangles)
}

/// Write triangles as a vertex-soup OBJ. Coordinates round-trip exactly
/// through `load_obj`.
pub fn write_obj<W: Write>(triangles: &[Triangle], w: &mut W) -> std::io::Result<()> {
    for tri in triangles {
        for v in [tri.v0, tri.v1, tri.v2] {
            writeln!(w, "v {:?} {:?} {:?}", v.x, v.y, v.z)?;
        }
    }
    for i in 0..triangles.len() {
        let base = 3 * i + 1;
        writeln!(w, "f {} {} {}", base, base + 1, base + 2)?;
    }
    Ok(())
}
