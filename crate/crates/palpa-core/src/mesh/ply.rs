//! Stanford PLY, ascii and binary (either endianness).
//!
//! The `vertex` element must carry `x y z` and `red green blue`; `nx ny nz`
//! are used when present. Faces come from the `face` element's
//! `vertex_indices` (or `vertex_index`) list and are fan-triangulated.
//! Integer `uchar`/`uint8` colors are divided by 255, float colors pass
//! through. Other elements and properties are parsed and skipped.

use std::fmt::Write as _;

use super::{MeshCodec, MeshError, RawMesh, TriMesh};
use crate::registry::Named;
use crate::Vec3;

pub struct PlyCodec;

impl Named for PlyCodec {
    fn name(&self) -> &'static str {
        "ply"
    }
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
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
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

    fn is_float(self) -> bool {
        matches!(self, Scalar::F32 | Scalar::F64)
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Encoding {
    Ascii,
    LittleEndian,
    BigEndian,
}

/// Value source over either the ascii token stream or the binary body.
enum Body<'a> {
    Ascii {
        tokens: std::str::SplitAsciiWhitespace<'a>,
    },
    Binary {
        data: &'a [u8],
        pos: usize,
        big_endian: bool,
    },
}

impl Body<'_> {
    fn read(&mut self, ty: Scalar) -> Result<f64, MeshError> {
        match self {
            Body::Ascii { tokens } => {
                let tok = tokens
                    .next()
                    .ok_or_else(|| MeshError::parse(0, "unexpected end of ascii body"))?;
                tok.parse::<f64>()
                    .map_err(|_| MeshError::parse(0, format!("bad number `{tok}`")))
            }
            Body::Binary {
                data,
                pos,
                big_endian,
            } => {
                let n = ty.size();
                let end = *pos + n;
                let bytes = data
                    .get(*pos..end)
                    .ok_or_else(|| MeshError::parse(0, "unexpected end of binary body"))?;
                *pos = end;
                let mut buf = [0u8; 8];
                buf[..n].copy_from_slice(bytes);
                if *big_endian {
                    buf[..n].reverse();
                }
                Ok(match ty {
                    Scalar::I8 => buf[0] as i8 as f64,
                    Scalar::U8 => buf[0] as f64,
                    Scalar::I16 => i16::from_le_bytes([buf[0], buf[1]]) as f64,
                    Scalar::U16 => u16::from_le_bytes([buf[0], buf[1]]) as f64,
                    Scalar::I32 => i32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]) as f64,
                    Scalar::U32 => u32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]) as f64,
                    Scalar::F32 => f32::from_le_bytes([buf[0], buf[1], buf[2], buf[3]]) as f64,
                    Scalar::F64 => f64::from_le_bytes(buf),
                })
            }
        }
    }
}

fn parse_header(bytes: &[u8]) -> Result<(Encoding, Vec<Element>, usize), MeshError> {
    const END: &[u8] = b"end_header";
    let end_pos = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| MeshError::parse(0, "missing end_header"))?;
    let mut body_start = end_pos + END.len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let header = std::str::from_utf8(&bytes[..end_pos])
        .map_err(|_| MeshError::parse(0, "header is not utf-8"))?;

    let mut lines = header.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(MeshError::parse(1, "missing `ply` magic")),
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::LittleEndian,
                    "binary_big_endian" => Encoding::BigEndian,
                    other => return Err(MeshError::parse(lineno, format!("unknown format `{other}`"))),
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| MeshError::parse(lineno, "bad element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count, item, name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| MeshError::parse(lineno, "property before element"))?;
                let (Some(count), Some(item)) = (Scalar::parse(count), Scalar::parse(item)) else {
                    return Err(MeshError::parse(lineno, "bad list property type"));
                };
                element.properties.push(Property::List {
                    name: name.to_string(),
                    count,
                    item,
                });
            }
            ["property", ty, name] => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| MeshError::parse(lineno, "property before element"))?;
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| MeshError::parse(lineno, format!("bad property type `{ty}`")))?;
                element.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty,
                });
            }
            _ => return Err(MeshError::parse(lineno, format!("unrecognized header line `{line}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| MeshError::parse(0, "missing format line"))?;
    Ok((encoding, elements, body_start))
}

impl MeshCodec for PlyCodec {
    fn extensions(&self) -> &'static [&'static str] {
        &["ply"]
    }

    fn decode(&self, bytes: &[u8]) -> Result<RawMesh, MeshError> {
        let (encoding, elements, body_start) = parse_header(bytes)?;
        let body_bytes = &bytes[body_start..];
        let mut body = match encoding {
            Encoding::Ascii => Body::Ascii {
                tokens: std::str::from_utf8(body_bytes)
                    .map_err(|_| MeshError::parse(0, "ascii body is not utf-8"))?
                    .split_ascii_whitespace(),
            },
            Encoding::LittleEndian | Encoding::BigEndian => Body::Binary {
                data: body_bytes,
                pos: 0,
                big_endian: encoding == Encoding::BigEndian,
            },
        };

        let mut raw = RawMesh::default();
        for element in &elements {
            match element.name.as_str() {
                "vertex" => read_vertices(element, &mut body, &mut raw)?,
                "face" => read_faces(element, &mut body, &mut raw)?,
                _ => skip_element(element, &mut body)?,
            }
        }
        Ok(raw)
    }

    fn encode(&self, mesh: &TriMesh, out: &mut Vec<u8>) -> Result<(), MeshError> {
        let mut s = String::new();
        let _ = writeln!(s, "ply\nformat ascii 1.0\ncomment palpa mesh {}", mesh.name);
        let _ = writeln!(s, "element vertex {}", mesh.vertex_count());
        for p in ["x", "y", "z", "nx", "ny", "nz"] {
            let _ = writeln!(s, "property double {p}");
        }
        for p in ["red", "green", "blue"] {
            let _ = writeln!(s, "property double {p}");
        }
        let _ = writeln!(s, "element face {}", mesh.triangle_count());
        let _ = writeln!(s, "property list uchar int vertex_indices\nend_header");
        for ((v, n), c) in mesh
            .vertices
            .iter()
            .zip(&mesh.vertex_normals)
            .zip(&mesh.vertex_rgb)
        {
            let _ = writeln!(
                s,
                "{} {} {} {} {} {} {} {} {}",
                v.x, v.y, v.z, n.x, n.y, n.z, c[0], c[1], c[2]
            );
        }
        for t in &mesh.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        out.extend_from_slice(s.as_bytes());
        Ok(())
    }
}

fn read_vertices(element: &Element, body: &mut Body, raw: &mut RawMesh) -> Result<(), MeshError> {
    let find = |name: &str| {
        element.properties.iter().position(|p| p.name() == name)
    };
    let xyz = [find("x"), find("y"), find("z")];
    let rgb = [find("red"), find("green"), find("blue")];
    let nrm = [find("nx"), find("ny"), find("nz")];
    if xyz.iter().any(Option::is_none) {
        return Err(MeshError::parse(0, "vertex element lacks x/y/z"));
    }
    let has_color = rgb.iter().all(Option::is_some);
    let has_normals = nrm.iter().all(Option::is_some);
    let color_scale = if has_color {
        let mut scale = None;
        for idx in rgb.iter().flatten() {
            let s = match &element.properties[*idx] {
                Property::Scalar { ty, .. } if ty.is_float() => 1.0,
                Property::Scalar { ty: Scalar::U8, .. } => 1.0 / 255.0,
                other => {
                    return Err(MeshError::Material(format!(
                        "unsupported color property `{}`",
                        other.name()
                    )))
                }
            };
            scale = Some(s);
        }
        scale.unwrap_or(1.0)
    } else {
        1.0
    };

    let mut normals = Vec::with_capacity(if has_normals { element.count } else { 0 });
    let mut values = vec![0.0; element.properties.len()];
    for _ in 0..element.count {
        for (slot, prop) in values.iter_mut().zip(&element.properties) {
            *slot = match prop {
                Property::Scalar { ty, .. } => body.read(*ty)?,
                Property::List { count, item, .. } => {
                    let n = body.read(*count)? as usize;
                    for _ in 0..n {
                        body.read(*item)?;
                    }
                    0.0
                }
            };
        }
        let get = |i: Option<usize>| values[i.unwrap()];
        let p = Vec3::new(get(xyz[0]), get(xyz[1]), get(xyz[2]));
        if !p.iter().all(|c| c.is_finite()) {
            return Err(MeshError::parse(0, "non-finite vertex position"));
        }
        raw.positions.push(p);
        if has_color {
            raw.colors.push([
                get(rgb[0]) * color_scale,
                get(rgb[1]) * color_scale,
                get(rgb[2]) * color_scale,
            ]);
        }
        if has_normals {
            normals.push(Vec3::new(get(nrm[0]), get(nrm[1]), get(nrm[2])));
        }
    }
    if has_normals {
        if let Some(i) = normals.iter().position(|n| !(n.norm() > 0.0)) {
            return Err(MeshError::Geometry(format!("vertex {i}: zero-length normal")));
        }
        raw.normals = Some(normals);
    }
    Ok(())
}

fn read_faces(element: &Element, body: &mut Body, raw: &mut RawMesh) -> Result<(), MeshError> {
    let index_prop = element
        .properties
        .iter()
        .position(|p| matches!(p, Property::List { name, .. } if name == "vertex_indices" || name == "vertex_index"))
        .ok_or_else(|| MeshError::parse(0, "face element lacks vertex_indices"))?;
    let mut corners = Vec::new();
    for _ in 0..element.count {
        for (i, prop) in element.properties.iter().enumerate() {
            match prop {
                Property::Scalar { ty, .. } => {
                    body.read(*ty)?;
                }
                Property::List { count, item, .. } => {
                    let n = body.read(*count)? as usize;
                    corners.clear();
                    for _ in 0..n {
                        let v = body.read(*item)?;
                        if v < 0.0 || v.fract() != 0.0 {
                            return Err(MeshError::Geometry(format!("invalid vertex index {v}")));
                        }
                        corners.push(v as usize);
                    }
                    if i == index_prop {
                        if corners.len() < 3 {
                            return Err(MeshError::parse(0, "face with fewer than 3 corners"));
                        }
                        for k in 1..corners.len() - 1 {
                            raw.triangles.push([corners[0], corners[k], corners[k + 1]]);
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn skip_element(element: &Element, body: &mut Body) -> Result<(), MeshError> {
    for _ in 0..element.count {
        for prop in &element.properties {
            match prop {
                Property::Scalar { ty, .. } => {
                    body.read(*ty)?;
                }
                Property::List { count, item, .. } => {
                    let n = body.read(*count)? as usize;
                    for _ in 0..n {
                        body.read(*item)?;
                    }
                }
            }
        }
    }
    Ok(())
}
