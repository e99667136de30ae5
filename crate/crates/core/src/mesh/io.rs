//! OBJ and PLY input/output plus the JSON region-label sidecar.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{Mesh, Point, RegionLabels};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }

    /// Sniffs the format from file content; PLY files start with the `ply` magic line.
    pub fn sniff(bytes: &[u8]) -> Self {
        if bytes.starts_with(b"ply\n") || bytes.starts_with(b"ply\r\n") {
            MeshFormat::Ply
        } else {
            MeshFormat::Obj
        }
    }
}

/// Loads a mesh; the format is taken from the extension, falling back to content sniffing.
pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<Mesh> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .unwrap_or_else(|| MeshFormat::sniff(&bytes));
    parse_mesh(&bytes, format)
}

/// Loads a mesh together with its label sidecar. An explicit `labels` path wins; otherwise
/// `<stem>.labels.json` next to the mesh is used when present.
pub fn load_mesh_with_labels(
    path: impl AsRef<Path>,
    labels: Option<&Path>,
) -> Result<Mesh> {
    let path = path.as_ref();
    let mesh = load_mesh(path, None)?;
    let sidecar = labels.map(Path::to_path_buf).or_else(|| {
        let candidate = sidecar_path(path);
        candidate.exists().then_some(candidate)
    });
    match sidecar {
        Some(p) => mesh.with_labels(load_labels(&p)?),
        None => Ok(mesh),
    }
}

pub(crate) fn sidecar_path(mesh_path: &Path) -> PathBuf {
    mesh_path.with_extension("labels.json")
}

pub fn parse_mesh(bytes: &[u8], format: MeshFormat) -> Result<Mesh> {
    match format {
        MeshFormat::Obj => parse_obj(bytes),
        MeshFormat::Ply => parse_ply(bytes),
    }
}

pub fn load_labels(path: &Path) -> Result<RegionLabels> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels: RegionLabels = serde_json::from_str(&text)?;
    for idx in labels.labels.values_mut() {
        idx.sort_unstable();
        idx.dedup();
    }
    Ok(labels)
}

pub fn save_labels(labels: &RegionLabels, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(labels)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_obj(bytes: &[u8]) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut polygons: Vec<(usize, Vec<i64>)> = Vec::new();
    for (lineno, line) in BufReader::new(bytes).lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    let tok = tokens.next().ok_or_else(|| Error::Parse {
                        line: line_no,
                        message: "vertex needs three coordinates".into(),
                    })?;
                    *c = tok.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad coordinate `{tok}`"),
                    })?;
                }
                vertices.push(Point::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in tokens {
                    let head = tok.split('/').next().unwrap_or("");
                    let i: i64 = head.parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("bad face index `{tok}`"),
                    })?;
                    idx.push(i);
                }
                polygons.push((line_no, idx));
            }
            _ => {}
        }
    }

    let n = vertices.len();
    let mut faces = Vec::with_capacity(polygons.len());
    for (_, poly) in &polygons {
        let resolved: Vec<usize> = poly
            .iter()
            .map(|&i| {
                // 1-based, negatives count back from the current end.
                let r = if i > 0 { i - 1 } else if i < 0 { n as i64 + i } else { -1 };
                if r < 0 || r as usize >= n {
                    Err(Error::OutOfRangeIndex { index: i, len: n })
                } else {
                    Ok(r as usize)
                }
            })
            .collect::<Result<_>>()?;
        if resolved.len() < 3 {
            return Err(Error::NonTriangle { face: faces.len() });
        }
        for k in 1..resolved.len() - 1 {
            faces.push([resolved[0], resolved[k], resolved[k + 1]]);
        }
    }
    Mesh::new(vertices, faces)
}

#[derive(Debug, Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

fn parse_ply(bytes: &[u8]) -> Result<Mesh> {
    let perr = |line: usize, message: &str| Error::Parse {
        line,
        message: message.to_string(),
    };
    let mut pos = 0;
    let mut line_no = 0;
    let mut next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let end = bytes[*pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|e| *pos + e)
            .unwrap_or(bytes.len());
        let line = String::from_utf8_lossy(&bytes[*pos..end]).trim().to_string();
        *pos = (end + 1).min(bytes.len());
        line_no += 1;
        Some(line)
    };

    if next_line(&mut pos).as_deref() != Some("ply") {
        return Err(perr(1, "missing ply magic"));
    }
    let mut binary = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut header_lines = 1;
    loop {
        let line = next_line(&mut pos).ok_or_else(|| perr(header_lines, "unterminated header"))?;
        header_lines += 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "binary_little_endian", _] => binary = Some(true),
            ["format", "ascii", _] => binary = Some(false),
            ["format", other, _] => {
                return Err(perr(header_lines, &format!("unsupported format `{other}`")))
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| perr(header_lines, "bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", count, item, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| perr(header_lines, "property before element"))?;
                el.props.push(Property::List {
                    name: name.to_string(),
                    count: Scalar::parse(count).ok_or_else(|| perr(header_lines, "bad type"))?,
                    item: Scalar::parse(item).ok_or_else(|| perr(header_lines, "bad type"))?,
                });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| perr(header_lines, "property before element"))?;
                el.props.push(Property::Scalar {
                    name: name.to_string(),
                    ty: Scalar::parse(ty).ok_or_else(|| perr(header_lines, "bad type"))?,
                });
            }
            ["end_header"] => break,
            _ => {}
        }
    }
    let binary = binary.ok_or_else(|| perr(header_lines, "missing format line"))?;

    let mut vertices = Vec::new();
    let mut polygons: Vec<Vec<i64>> = Vec::new();
    let body = &bytes[pos..];
    let mut cursor = 0usize;
    let mut ascii_tokens = if binary {
        None
    } else {
        Some(std::str::from_utf8(body).map_err(|_| perr(header_lines, "ascii body is not utf-8"))?
            .split_whitespace())
    };
    let mut read = |ty: Scalar| -> Result<f64> {
        match ascii_tokens.as_mut() {
            None => {
                let sz = ty.size();
                if cursor + sz > body.len() {
                    return Err(perr(header_lines, "truncated binary body"));
                }
                let v = ty.read_le(&body[cursor..cursor + sz]);
                cursor += sz;
                Ok(v)
            }
            Some(tokens) => tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| perr(header_lines, "truncated ascii body")),
        }
    };

    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [0.0; 3];
            let mut poly = Vec::new();
            for prop in &el.props {
                match prop {
                    Property::Scalar { name, ty } => {
                        let v = read(*ty)?;
                        match name.as_str() {
                            "x" => xyz[0] = v,
                            "y" => xyz[1] = v,
                            "z" => xyz[2] = v,
                            _ => {}
                        }
                    }
                    Property::List { name, count, item } => {
                        let k = read(*count)? as usize;
                        let keep = name == "vertex_indices" || name == "vertex_index";
                        for _ in 0..k {
                            let v = read(*item)?;
                            if keep {
                                poly.push(v as i64);
                            }
                        }
                    }
                }
            }
            match el.name.as_str() {
                "vertex" => vertices.push(Point::new(xyz[0], xyz[1], xyz[2])),
                "face" => polygons.push(poly),
                _ => {}
            }
        }
    }

    let n = vertices.len();
    let mut faces = Vec::with_capacity(polygons.len());
    for poly in polygons {
        if poly.len() < 3 {
            return Err(Error::NonTriangle { face: faces.len() });
        }
        if let Some(&bad) = poly.iter().find(|&&i| i < 0 || i as usize >= n) {
            return Err(Error::OutOfRangeIndex { index: bad, len: n });
        }
        for k in 1..poly.len() - 1 {
            faces.push([poly[0] as usize, poly[k] as usize, poly[k + 1] as usize]);
        }
    }
    Mesh::new(vertices, faces)
}

/// Writes OBJ or binary little-endian PLY depending on the extension (OBJ by default).
pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = match MeshFormat::from_path(path).unwrap_or(MeshFormat::Obj) {
        MeshFormat::Obj => write_obj(mesh),
        MeshFormat::Ply => write_ply(mesh),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_obj(mesh: &Mesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(mesh.vertices.len() * 48 + mesh.faces.len() * 24);
    for v in &mesh.vertices {
        // `{:?}` on f64 is the shortest representation that round-trips exactly.
        writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z).unwrap();
    }
    for f in &mesh.faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    out
}

pub fn write_ply(mesh: &Mesh) -> Vec<u8> {
    let mut out = Vec::new();
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.faces.len()
    )
    .unwrap();
    for v in &mesh.vertices {
        for c in [v.x, v.y, v.z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for f in &mesh.faces {
        out.push(3);
        for &i in f {
            out.extend_from_slice(&(i as u32).to_le_bytes());
        }
    }
    out
}
