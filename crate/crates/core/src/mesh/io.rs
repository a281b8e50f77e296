use std::fmt::Write as _;
use std::path::Path;

use super::{SurfaceMesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    /// Guess the format from a file extension.
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "off" => Some(MeshFormat::Off),
            _ => None,
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<SurfaceMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::Obj => parse_obj(&text),
        MeshFormat::Off => parse_off(&text),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("invalid number `{tok}`")))
}

/// Split a polygon into a triangle fan.
fn fan(poly: &[usize], out: &mut Vec<[usize; 3]>) {
    for k in 1..poly.len() - 1 {
        out.push([poly[0], poly[k], poly[k + 1]]);
    }
}

/// Parse Wavefront OBJ text. Only `v` and `f` records are interpreted;
/// polygons are fan-triangulated and `v/vt/vn` references use the vertex part.
pub fn parse_obj(text: &str) -> Result<SurfaceMesh> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<&str> = toks.collect();
                if c.len() < 3 {
                    return Err(parse_err(line, "vertex needs three coordinates"));
                }
                vertices.push([
                    parse_f64(c[0], line)?,
                    parse_f64(c[1], line)?,
                    parse_f64(c[2], line)?,
                ]);
            }
            Some("f") => {
                let mut idx = Vec::new();
                for t in toks {
                    let head = t.split('/').next().unwrap_or("");
                    let v: i64 = head
                        .parse()
                        .map_err(|_| parse_err(line, format!("invalid face index `{t}`")))?;
                    idx.push(v);
                }
                if idx.len() < 3 {
                    return Err(parse_err(line, "face needs at least three vertices"));
                }
                faces.push((line, idx));
            }
            _ => {}
        }
    }
    let nv = vertices.len() as i64;
    let mut triangles = Vec::new();
    for (line, idx) in faces {
        let mut poly = Vec::with_capacity(idx.len());
        for v in idx {
            // OBJ indices are 1-based; negative values count back from the end.
            let abs = if v > 0 {
                v - 1
            } else if v < 0 {
                nv + v
            } else {
                return Err(parse_err(line, "face index 0 is invalid (indices are 1-based)"));
            };
            if abs < 0 || abs >= nv {
                return Err(parse_err(line, format!("face index {v} out of range")));
            }
            poly.push(abs as usize);
        }
        fan(&poly, &mut triangles);
    }
    SurfaceMesh::new(vertices, triangles)
}

/// Parse OFF text (optionally with `#` comments).
pub fn parse_off(text: &str) -> Result<SurfaceMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    // The counts may follow the keyword on the same line.
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| parse_err(hline, "missing OFF header"))?
        .trim();
    let (cline, counts) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| parse_err(hline, "missing element counts"))?
    } else {
        (hline, rest)
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| parse_err(cline, "invalid element counts"))?;
    if counts.len() < 2 {
        return Err(parse_err(cline, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in vertex list"))?;
        let c: Vec<&str> = l.split_whitespace().collect();
        if c.len() < 3 {
            return Err(parse_err(line, "vertex needs three coordinates"));
        }
        vertices.push([
            parse_f64(c[0], line)?,
            parse_f64(c[1], line)?,
            parse_f64(c[2], line)?,
        ]);
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "unexpected end of file in face list"))?;
        let t: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(line, "invalid face record"))?;
        let k = *t.first().ok_or_else(|| parse_err(line, "empty face record"))?;
        if k < 3 || t.len() < k + 1 {
            return Err(parse_err(line, "face record too short"));
        }
        let poly = &t[1..=k];
        if let Some(&bad) = poly.iter().find(|&&v| v >= nv) {
            return Err(parse_err(line, format!("face index {bad} out of range")));
        }
        fan(poly, &mut triangles);
    }
    SurfaceMesh::new(vertices, triangles)
}

/// Serialise as OFF with 17 significant digits, which round-trips exactly.
pub fn write_off(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF");
    let _ = writeln!(s, "{} {} 0", mesh.n_vertices(), mesh.n_triangles());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2]);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn save_off(mesh: &SurfaceMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_off(mesh)).map_err(|e| Error::io(path, e))
}
