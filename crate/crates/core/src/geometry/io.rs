//! Mesh and cloud file formats: OBJ, PLY (ascii / binary little endian) and `.tet`.

use super::{PointCloud, TetMesh, TriMesh, Vec3};
use crate::error::{Error, Result};
use std::fs;
use std::io::Write;
use std::path::Path;

/// Loads a triangle mesh from `.obj` or `.ply`, chosen by extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let (vertices, faces) = match ext.as_deref() {
        Some("obj") => parse_obj(path, &bytes)?,
        Some("ply") => {
            let ply = parse_ply(path, &bytes)?;
            let faces = ply.faces.clone();
            (ply.positions(), faces)
        }
        _ => {
            return Err(Error::parse(
                path,
                "extension",
                "unsupported mesh format (expected .obj or .ply)",
            ))
        }
    };
    TriMesh::new(vertices, faces).map_err(|e| Error::parse(path, "faces", e.to_string()))
}

fn parse_obj(path: &Path, bytes: &[u8]) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse(path, "utf-8", e.to_string()))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let loc = || format!("line {}", ln + 1);
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = it
                        .next()
                        .ok_or_else(|| Error::parse(path, loc(), "vertex needs 3 coordinates"))?;
                    *slot = tok
                        .parse()
                        .map_err(|_| Error::parse(path, loc(), format!("bad coordinate `{tok}`")))?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in it {
                    let head = tok.split('/').next().unwrap_or("");
                    let raw: i64 = head
                        .parse()
                        .map_err(|_| Error::parse(path, loc(), format!("bad face index `{tok}`")))?;
                    let idx = if raw > 0 {
                        raw - 1
                    } else if raw < 0 {
                        vertices.len() as i64 + raw
                    } else {
                        return Err(Error::parse(path, loc(), "face index 0 is invalid in OBJ"));
                    };
                    if idx < 0 || idx as usize >= vertices.len() {
                        return Err(Error::parse(
                            path,
                            loc(),
                            format!("face index {raw} out of range ({} vertices)", vertices.len()),
                        ));
                    }
                    poly.push(idx as usize);
                }
                if poly.len() < 3 {
                    return Err(Error::parse(path, loc(), "face needs at least 3 vertices"));
                }
                for k in 1..poly.len() - 1 {
                    faces.push([poly[0], poly[k], poly[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

#[derive(Debug, Clone, Copy, PartialEq)]
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

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Format {
    Ascii,
    BinaryLe,
}

/// Parsed PLY contents restricted to what this crate consumes.
#[derive(Debug, Default)]
struct PlyData {
    columns: Vec<(String, Vec<f64>)>,
    faces: Vec<[usize; 3]>,
}

impl PlyData {
    fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    fn vec3(&self, names: [&str; 3]) -> Option<Vec<Vec3>> {
        let x = self.column(names[0])?;
        let y = self.column(names[1])?;
        let z = self.column(names[2])?;
        Some((0..x.len()).map(|i| Vec3::new(x[i], y[i], z[i])).collect())
    }

    fn positions(&self) -> Vec<Vec3> {
        self.vec3(["x", "y", "z"]).unwrap_or_default()
    }
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<(Format, Vec<Element>, usize)> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| Error::parse(path, "header", "missing end_header"))?;
    let mut body = end + END.len();
    if bytes.get(body) == Some(&b'\r') {
        body += 1;
    }
    if bytes.get(body) == Some(&b'\n') {
        body += 1;
    }
    let header = std::str::from_utf8(&bytes[..end])
        .map_err(|e| Error::parse(path, "header", e.to_string()))?;
    let mut lines = header.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse(path, "line 1", "missing `ply` magic")),
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for (ln, line) in lines {
        let loc = || format!("line {}", ln + 1);
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first().copied() {
            Some("format") => {
                format = Some(match toks.get(1).copied() {
                    Some("ascii") => Format::Ascii,
                    Some("binary_little_endian") => Format::BinaryLe,
                    other => {
                        return Err(Error::parse(
                            path,
                            loc(),
                            format!("unsupported format {other:?}"),
                        ))
                    }
                })
            }
            Some("element") => {
                if toks.len() != 3 {
                    return Err(Error::parse(path, loc(), "malformed element line"));
                }
                let count = toks[2]
                    .parse()
                    .map_err(|_| Error::parse(path, loc(), "bad element count"))?;
                elements.push(Element {
                    name: toks[1].to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, loc(), "property before element"))?;
                let bad = || Error::parse(path, loc(), "malformed property line");
                if toks.get(1) == Some(&"list") {
                    if toks.len() != 5 {
                        return Err(bad());
                    }
                    let count = Scalar::parse(toks[2]).ok_or_else(bad)?;
                    let item = Scalar::parse(toks[3]).ok_or_else(bad)?;
                    el.props.push(Property::List {
                        name: toks[4].to_string(),
                        count,
                        item,
                    });
                } else {
                    if toks.len() != 3 {
                        return Err(bad());
                    }
                    let ty = Scalar::parse(toks[1]).ok_or_else(bad)?;
                    el.props.push(Property::Scalar {
                        name: toks[2].to_string(),
                        ty,
                    });
                }
            }
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => {
                return Err(Error::parse(path, loc(), format!("unknown header keyword `{other}`")))
            }
        }
    }
    let format = format.ok_or_else(|| Error::parse(path, "header", "missing format line"))?;
    Ok((format, elements, body))
}

fn parse_ply(path: &Path, bytes: &[u8]) -> Result<PlyData> {
    let (format, elements, body) = parse_header(path, bytes)?;
    let mut data = PlyData::default();
    let vertex_count = elements
        .iter()
        .find(|e| e.name == "vertex")
        .map(|e| e.count)
        .unwrap_or(0);

    // Values are fed through a small cursor so both encodings share element handling.
    enum Cursor<'a> {
        Ascii {
            tokens: std::iter::Peekable<std::str::SplitWhitespace<'a>>,
            line_of: Box<dyn Fn(usize) -> usize + 'a>,
            consumed: usize,
        },
        Binary {
            bytes: &'a [u8],
            pos: usize,
        },
    }

    impl Cursor<'_> {
        fn next(&mut self, ty: Scalar, path: &Path) -> Result<f64> {
            match self {
                Cursor::Ascii {
                    tokens,
                    line_of,
                    consumed,
                } => {
                    let tok = tokens.next().ok_or_else(|| {
                        Error::parse(path, format!("token {}", *consumed), "unexpected end of data")
                    })?;
                    *consumed += 1;
                    tok.parse::<f64>().map_err(|_| {
                        Error::parse(
                            path,
                            format!("line {}", line_of(*consumed)),
                            format!("bad number `{tok}`"),
                        )
                    })
                }
                Cursor::Binary { bytes, pos } => {
                    let n = ty.size();
                    if *pos + n > bytes.len() {
                        return Err(Error::parse(
                            path,
                            format!("byte {}", *pos),
                            "unexpected end of binary data",
                        ));
                    }
                    let v = ty.read_le(&bytes[*pos..*pos + n]);
                    *pos += n;
                    Ok(v)
                }
            }
        }

        fn location(&self) -> String {
            match self {
                Cursor::Ascii {
                    line_of, consumed, ..
                } => format!("line {}", line_of(*consumed + 1)),
                Cursor::Binary { pos, .. } => format!("byte {pos}"),
            }
        }
    }

    let mut cursor = match format {
        Format::Ascii => {
            let text = std::str::from_utf8(&bytes[body..])
                .map_err(|e| Error::parse(path, format!("byte {body}"), e.to_string()))?;
            // token index -> 1-based data line, computed lazily from line starts
            let header_lines = bytes[..body].iter().filter(|&&b| b == b'\n').count();
            let mut ends = Vec::new();
            let mut count = 0usize;
            for line in text.lines() {
                count += line.split_whitespace().count();
                ends.push(count);
            }
            Cursor::Ascii {
                tokens: text.split_whitespace().peekable(),
                line_of: Box::new(move |tok: usize| {
                    header_lines + ends.partition_point(|&e| e < tok.max(1)) + 1
                }),
                consumed: 0,
            }
        }
        Format::BinaryLe => Cursor::Binary {
            bytes,
            pos: body,
        },
    };

    for el in &elements {
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        let mut cols: Vec<Vec<f64>> = Vec::new();
        if is_vertex {
            cols = vec![Vec::with_capacity(el.count); el.props.len()];
        }
        for row in 0..el.count {
            for (pi, prop) in el.props.iter().enumerate() {
                match prop {
                    Property::Scalar { ty, .. } => {
                        let v = cursor.next(*ty, path)?;
                        if is_vertex {
                            cols[pi].push(v);
                        }
                    }
                    Property::List { name, count, item } => {
                        let loc = cursor.location();
                        let n = cursor.next(*count, path)? as usize;
                        let mut idx = Vec::with_capacity(n);
                        for _ in 0..n {
                            idx.push(cursor.next(*item, path)?);
                        }
                        if is_face && (name == "vertex_indices" || name == "vertex_index") {
                            if n < 3 {
                                return Err(Error::parse(
                                    path,
                                    loc,
                                    format!("face {row} has {n} vertices"),
                                ));
                            }
                            let mut poly = Vec::with_capacity(n);
                            for v in idx {
                                if v < 0.0 || v as usize >= vertex_count {
                                    return Err(Error::parse(
                                        path,
                                        loc,
                                        format!(
                                            "face {row} index {v} out of range ({vertex_count} vertices)"
                                        ),
                                    ));
                                }
                                poly.push(v as usize);
                            }
                            for k in 1..poly.len() - 1 {
                                data.faces.push([poly[0], poly[k], poly[k + 1]]);
                            }
                        }
                    }
                }
            }
        }
        if is_vertex {
            for (prop, col) in el.props.iter().zip(cols) {
                if let Property::Scalar { name, .. } = prop {
                    data.columns.push((name.clone(), col));
                }
            }
        }
    }
    Ok(data)
}

/// Reads the vertex element of a PLY file as a cloud (normals when `nx ny nz` exist).
pub fn read_ply_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let ply = parse_ply(path, &bytes)?;
    if ply.column("x").is_none() {
        return Err(Error::parse(path, "header", "vertex element lacks x/y/z"));
    }
    let cloud = PointCloud {
        points: ply.positions(),
        normals: ply.vec3(["nx", "ny", "nz"]),
    };
    cloud
        .validate()
        .map_err(|e| Error::parse(path, "vertex data", e.to_string()))?;
    Ok(cloud)
}

/// Output encoding for PLY files written by this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    /// `binary_little_endian`, `double` properties (exact round trip).
    BinaryF64,
    /// `binary_little_endian`, `float` properties.
    BinaryF32,
    Ascii,
}

/// Writes a point cloud, optionally with faces, as PLY.
pub fn write_ply_cloud(
    path: impl AsRef<Path>,
    cloud: &PointCloud,
    faces: Option<&[[usize; 3]]>,
    encoding: PlyEncoding,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_ply(cloud, faces.unwrap_or(&[]), encoding);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_ply(cloud: &PointCloud, faces: &[[usize; 3]], encoding: PlyEncoding) -> Vec<u8> {
    let (format, ty) = match encoding {
        PlyEncoding::BinaryF64 => ("binary_little_endian", "double"),
        PlyEncoding::BinaryF32 => ("binary_little_endian", "float"),
        PlyEncoding::Ascii => ("ascii", "float"),
    };
    let mut out = Vec::new();
    let mut header = format!(
        "ply\nformat {format} 1.0\nelement vertex {}\nproperty {ty} x\nproperty {ty} y\nproperty {ty} z\n",
        cloud.len()
    );
    if cloud.normals.is_some() {
        header.push_str(&format!(
            "property {ty} nx\nproperty {ty} ny\nproperty {ty} nz\n"
        ));
    }
    if !faces.is_empty() {
        header.push_str(&format!(
            "element face {}\nproperty list uchar int vertex_indices\n",
            faces.len()
        ));
    }
    header.push_str("end_header\n");
    out.extend_from_slice(header.as_bytes());

    let rows = cloud.points.iter().enumerate().map(|(i, p)| {
        let mut row = vec![p.x, p.y, p.z];
        if let Some(n) = &cloud.normals {
            row.extend_from_slice(&[n[i].x, n[i].y, n[i].z]);
        }
        row
    });
    match encoding {
        PlyEncoding::BinaryF64 => {
            for row in rows {
                for v in row {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        PlyEncoding::BinaryF32 => {
            for row in rows {
                for v in row {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
        PlyEncoding::Ascii => {
            for row in rows {
                let line: Vec<String> = row.iter().map(|v| format!("{}", *v as f32)).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
        }
    }
    for f in faces {
        match encoding {
            PlyEncoding::Ascii => {
                writeln!(out, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
            }
            _ => {
                out.push(3u8);
                for &v in f {
                    out.extend_from_slice(&(v as i32).to_le_bytes());
                }
            }
        }
    }
    out
}

/// Loads a `.tet` file: `V T` header, V coordinate lines, T index lines (0-based).
pub fn load_tet_mesh(path: impl AsRef<Path>) -> Result<TetMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (ln, head) = lines
        .next()
        .ok_or_else(|| Error::parse(path, "line 1", "empty file"))?;
    let counts: Vec<usize> = head
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(path, format!("line {}", ln + 1), "expected `V T` counts"))?;
    if counts.len() != 2 {
        return Err(Error::parse(path, format!("line {}", ln + 1), "expected `V T` counts"));
    }
    let (nv, nt) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(path, "eof", "missing vertex lines"))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, format!("line {}", ln + 1), "bad vertex"))?;
        if c.len() != 3 {
            return Err(Error::parse(path, format!("line {}", ln + 1), "vertex needs 3 values"));
        }
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    for _ in 0..nt {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::parse(path, "eof", "missing tet lines"))?;
        let c: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, format!("line {}", ln + 1), "bad tet"))?;
        if c.len() != 4 {
            return Err(Error::parse(path, format!("line {}", ln + 1), "tet needs 4 indices"));
        }
        if let Some(&bad) = c.iter().find(|&&v| v >= nv) {
            return Err(Error::parse(
                path,
                format!("line {}", ln + 1),
                format!("tet index {bad} out of range ({nv} vertices)"),
            ));
        }
        tets.push([c[0], c[1], c[2], c[3]]);
    }
    TetMesh::new(vertices, tets).map_err(|e| Error::parse(path, "tets", e.to_string()))
}

pub fn write_tet_mesh(path: impl AsRef<Path>, mesh: &TetMesh) -> Result<()> {
    let path = path.as_ref();
    let mut s = format!("{} {}\n", mesh.vertices.len(), mesh.tets.len());
    for v in &mesh.vertices {
        s.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    for t in &mesh.tets {
        s.push_str(&format!("{} {} {} {}\n", t[0], t[1], t[2], t[3]));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}
