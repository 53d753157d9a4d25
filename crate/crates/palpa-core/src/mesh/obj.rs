//! Wavefront OBJ with per-vertex colors on `v` lines.
//!
//! Accepted subset:
//! - `v x y z r g b` (colors required on every vertex line)
//! - `f a b c ...` where each corner is `i`, `i/t`, `i//n` or `i/t/n`;
//!   indices are 1-based, negative indices count back from the last vertex;
//!   polygons are fan-triangulated
//! - `o name` / `g name` set the mesh name (first one wins)
//! - everything else (`vn`, `vt`, `s`, `usemtl`, `mtllib`, comments) is ignored
//!
//! Colors are floats in `[0, 1]`. If any channel in the file exceeds 1 the
//! whole file is read as 8-bit: every channel must then be an integer in
//! `0..=255` and is divided by 255.

use super::{MeshCodec, MeshError, RawMesh, TriMesh};
use crate::registry::Named;
use crate::Vec3;

pub struct ObjCodec;

impl Named for ObjCodec {
    fn name(&self) -> &'static str {
        "obj"
    }
}

impl MeshCodec for ObjCodec {
    fn extensions(&self) -> &'static [&'static str] {
        &["obj"]
    }

    fn decode(&self, bytes: &[u8]) -> Result<RawMesh, MeshError> {
        let text = std::str::from_utf8(bytes)
            .map_err(|e| MeshError::parse(0, format!("not utf-8: {e}")))?;
        let mut raw = RawMesh::default();
        let mut colors: Vec<[f64; 3]> = Vec::new();
        let mut missing_color_line = None;

        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            let mut tokens = line.split_whitespace();
            let Some(tag) = tokens.next() else { continue };
            match tag {
                "v" => {
                    let nums = tokens
                        .map(|t| {
                            t.parse::<f64>()
                                .map_err(|_| MeshError::parse(lineno, format!("bad number `{t}`")))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    match nums.len() {
                        3 => missing_color_line = missing_color_line.or(Some(lineno)),
                        6 => colors.push([nums[3], nums[4], nums[5]]),
                        n => {
                            return Err(MeshError::parse(
                                lineno,
                                format!("vertex line has {n} numbers, expected 6"),
                            ))
                        }
                    }
                    if !nums[..3].iter().all(|c| c.is_finite()) {
                        return Err(MeshError::parse(lineno, "non-finite vertex position"));
                    }
                    raw.positions.push(Vec3::new(nums[0], nums[1], nums[2]));
                }
                "f" => {
                    let count = raw.positions.len();
                    let corners = tokens
                        .map(|t| parse_corner(t, count, lineno))
                        .collect::<Result<Vec<_>, _>>()?;
                    if corners.len() < 3 {
                        return Err(MeshError::parse(lineno, "face with fewer than 3 corners"));
                    }
                    for k in 1..corners.len() - 1 {
                        raw.triangles.push([corners[0], corners[k], corners[k + 1]]);
                    }
                }
                "o" | "g" => {
                    if raw.name.is_none() {
                        let name: Vec<&str> = tokens.collect();
                        if !name.is_empty() {
                            raw.name = Some(name.join(" "));
                        }
                    }
                }
                _ => {}
            }
        }

        if let Some(line) = missing_color_line {
            return Err(MeshError::Material(format!(
                "vertex at line {line} has no color"
            )));
        }
        raw.colors = normalize_colors(colors)?;
        Ok(raw)
    }

    fn encode(&self, mesh: &TriMesh, out: &mut Vec<u8>) -> Result<(), MeshError> {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "o {}", mesh.name);
        for (v, c) in mesh.vertices.iter().zip(&mesh.vertex_rgb) {
            let _ = writeln!(s, "v {} {} {} {} {} {}", v.x, v.y, v.z, c[0], c[1], c[2]);
        }
        for t in &mesh.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        out.extend_from_slice(s.as_bytes());
        Ok(())
    }
}

fn parse_corner(token: &str, count: usize, lineno: usize) -> Result<usize, MeshError> {
    let index_str = token.split('/').next().unwrap_or("");
    let index: i64 = index_str
        .parse()
        .map_err(|_| MeshError::parse(lineno, format!("bad face index `{token}`")))?;
    let resolved = if index > 0 {
        index - 1
    } else if index < 0 {
        count as i64 + index
    } else {
        return Err(MeshError::parse(lineno, "face index 0 is invalid"));
    };
    if resolved < 0 {
        return Err(MeshError::Geometry(format!(
            "line {lineno}: relative index {index} precedes the first vertex"
        )));
    }
    // Forward references are resolved against the final vertex count by TriMesh::new.
    Ok(resolved as usize)
}

fn normalize_colors(colors: Vec<[f64; 3]>) -> Result<Vec<[f64; 3]>, MeshError> {
    let eight_bit = colors.iter().flatten().any(|&c| c > 1.0);
    if !eight_bit {
        return Ok(colors);
    }
    colors
        .into_iter()
        .map(|rgb| {
            let mut out = [0.0; 3];
            for (o, c) in out.iter_mut().zip(rgb) {
                if !(0.0..=255.0).contains(&c) || c.fract() != 0.0 {
                    return Err(MeshError::Material(format!(
                        "8-bit color channel {c} is not an integer in 0..=255"
                    )));
                }
                *o = c / 255.0;
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::{parse_mesh, MeshFormat};
    use super::*;

    const TETRA: &str = "\
# unit tetrahedron
o tetra
v 0 0 0 1 1 1
v 1 0 0 1 1 1
v 0 1 0 1 1 1
v 0 0 1 1 1 1
f 1 3 2
f 1 2 4
f 1 4 3
f 2 3 4
";

    #[test]
    fn loads_white_tetrahedron() {
        let mesh = parse_mesh(TETRA.as_bytes(), MeshFormat::Obj, "x").unwrap();
        assert_eq!(mesh.name, "tetra");
        assert_eq!(mesh.vertex_count(), 4);
        assert_eq!(mesh.triangle_count(), 4);
        assert!(mesh.vertex_rgb.iter().all(|c| *c == [1.0, 1.0, 1.0]));
    }

    #[test]
    fn eight_bit_colors_are_divided_by_255() {
        let src = TETRA.replacen("v 0 0 0 1 1 1", "v 0 0 0 128 0 255", 1);
        let mesh = parse_mesh(src.as_bytes(), MeshFormat::Obj, "x").unwrap();
        assert_eq!(mesh.vertex_rgb[0], [128.0 / 255.0, 0.0, 1.0]);
        assert!((mesh.vertex_rgb[0][0] - 0.50196).abs() < 1e-5);
        // other vertices were "1 1 1" and are read as 1/255 in 8-bit mode
        assert_eq!(mesh.vertex_rgb[1], [1.0 / 255.0; 3]);
    }

    #[test]
    fn dangling_index_is_geometry_error() {
        let src = TETRA.replace("f 2 3 4", "f 2 3 99");
        let err = parse_mesh(src.as_bytes(), MeshFormat::Obj, "x").unwrap_err();
        assert!(matches!(err, MeshError::Geometry(_)), "{err}");
    }

    #[test]
    fn missing_color_is_material_error() {
        let src = TETRA.replace("v 1 0 0 1 1 1", "v 1 0 0");
        let err = parse_mesh(src.as_bytes(), MeshFormat::Obj, "x").unwrap_err();
        assert!(matches!(err, MeshError::Material(_)));
    }

    #[test]
    fn out_of_range_eight_bit_is_material_error() {
        let src = TETRA.replacen("v 0 0 0 1 1 1", "v 0 0 0 300 0 0", 1);
        let err = parse_mesh(src.as_bytes(), MeshFormat::Obj, "x").unwrap_err();
        assert!(matches!(err, MeshError::Material(_)));
    }

    #[test]
    fn malformed_number_is_parse_error() {
        let src = TETRA.replace("v 0 1 0 1 1 1", "v 0 one 0 1 1 1");
        let err = parse_mesh(src.as_bytes(), MeshFormat::Obj, "x").unwrap_err();
        assert!(matches!(err, MeshError::Parse { line: 5, .. }), "{err}");
    }

    #[test]
    fn quads_and_slash_corners_are_triangulated() {
        let src = "v 0 0 0 0 0 0\nv 1 0 0 0 0 0\nv 1 1 0 0 0 0\nv 0 1 0 0 0 0\nf 1/1/1 2/2/1 -2//1 -1\n";
        let mesh = parse_mesh(src.as_bytes(), MeshFormat::Obj, "quad").unwrap();
        assert_eq!(mesh.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(mesh.name, "quad");
    }

    #[test]
    fn encode_decode_is_lossless() {
        let mut mesh = parse_mesh(TETRA.as_bytes(), MeshFormat::Obj, "x").unwrap();
        mesh.vertex_rgb[1] = [0.1 + 0.2, 1.0 / 3.0, 0.0];
        mesh.vertices[3].z = 0.7000000000000001;
        let mut buf = Vec::new();
        ObjCodec.encode(&mesh, &mut buf).unwrap();
        let back = parse_mesh(&buf, MeshFormat::Obj, "x").unwrap();
        assert_eq!(back.vertices, mesh.vertices);
        assert_eq!(back.vertex_rgb, mesh.vertex_rgb);
        assert_eq!(back.triangles, mesh.triangles);
    }
}
