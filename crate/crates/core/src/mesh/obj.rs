//! Wavefront OBJ reading and writing.
//!
//! Supported records: `v`, `vt`, `vn`, `f` with 1-based indices and
//! triangular faces only. Texture and normal indices are folded onto the
//! position index so the mesh carries one UV / one normal per vertex; a
//! vertex referenced with two different `vt` (or `vn`) indices is an error
//! rather than a silent split.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nalgebra::{Point3, Vector2, Vector3};

use super::TriangleMesh;
use crate::error::{Error, Result};

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    parse_obj(BufReader::new(file), path)
}

pub fn parse_obj(reader: impl BufRead, path: &Path) -> Result<TriangleMesh> {
    let err = |line: usize, message: String| Error::ObjParse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut positions: Vec<Point3<f64>> = Vec::new();
    let mut texcoords: Vec<Vector2<f64>> = Vec::new();
    let mut normals: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    // Per-vertex attribute assignment discovered from face records.
    let mut uv_of_vertex: Vec<Option<usize>> = Vec::new();
    let mut normal_of_vertex: Vec<Option<usize>> = Vec::new();
    let mut any_uv = false;
    let mut any_normal = false;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap();
        match keyword {
            "v" => {
                let coords = parse_floats(&mut tokens, 3)
                    .map_err(|m| err(lineno, format!("vertex: {m}")))?;
                positions.push(Point3::new(coords[0], coords[1], coords[2]));
                uv_of_vertex.push(None);
                normal_of_vertex.push(None);
            }
            "vt" => {
                let coords = parse_floats(&mut tokens, 2)
                    .map_err(|m| err(lineno, format!("texture coordinate: {m}")))?;
                texcoords.push(Vector2::new(coords[0], coords[1]));
            }
            "vn" => {
                let coords = parse_floats(&mut tokens, 3)
                    .map_err(|m| err(lineno, format!("normal: {m}")))?;
                normals.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(err(
                        lineno,
                        format!(
                            "face has {} vertices; only triangles are supported \
                             (triangulate quads and n-gons first)",
                            refs.len()
                        ),
                    ));
                }
                let mut face = [0usize; 3];
                for (slot, r) in refs.iter().enumerate() {
                    let (vi, vti, vni) = parse_face_ref(r)
                        .map_err(|m| err(lineno, m))?;
                    let v = resolve_index(vi, positions.len())
                        .map_err(|m| err(lineno, format!("vertex index {m}")))?;
                    face[slot] = v;
                    if let Some(vti) = vti {
                        any_uv = true;
                        let t = resolve_index(vti, texcoords.len())
                            .map_err(|m| err(lineno, format!("texture index {m}")))?;
                        match uv_of_vertex[v] {
                            None => uv_of_vertex[v] = Some(t),
                            Some(prev) if prev == t => {}
                            Some(prev) => {
                                return Err(err(
                                    lineno,
                                    format!(
                                        "vertex {} referenced with conflicting texture \
                                         coordinates ({} vs {}); per-vertex UVs are required",
                                        v + 1,
                                        prev + 1,
                                        t + 1
                                    ),
                                ))
                            }
                        }
                    }
                    if let Some(vni) = vni {
                        any_normal = true;
                        let n = resolve_index(vni, normals.len())
                            .map_err(|m| err(lineno, format!("normal index {m}")))?;
                        match normal_of_vertex[v] {
                            None => normal_of_vertex[v] = Some(n),
                            Some(prev) if prev == n => {}
                            Some(prev) => {
                                return Err(err(
                                    lineno,
                                    format!(
                                        "vertex {} referenced with conflicting normals \
                                         ({} vs {})",
                                        v + 1,
                                        prev + 1,
                                        n + 1
                                    ),
                                ))
                            }
                        }
                    }
                }
                faces.push(face);
            }
            // Material / group / smoothing records carry no geometry.
            "mtllib" | "usemtl" | "o" | "g" | "s" | "l" | "vp" => {}
            other => {
                return Err(err(lineno, format!("unsupported record '{other}'")));
            }
        }
    }

    let uvs = if any_uv {
        Some(
            uv_of_vertex
                .iter()
                .map(|slot| slot.map(|t| texcoords[t]).unwrap_or_else(Vector2::zeros))
                .collect(),
        )
    } else {
        None
    };
    let vertex_normals = if any_normal {
        Some(
            normal_of_vertex
                .iter()
                .map(|slot| slot.map(|n| normals[n]).unwrap_or_else(Vector3::z))
                .collect(),
        )
    } else {
        None
    };

    TriangleMesh::new(positions, faces, uvs, vertex_normals)
}

fn parse_floats<'a>(
    tokens: &mut impl Iterator<Item = &'a str>,
    at_least: usize,
) -> std::result::Result<Vec<f64>, String> {
    let values: Vec<f64> = tokens
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number '{t}'")))
        .collect::<std::result::Result<_, _>>()?;
    if values.len() < at_least {
        return Err(format!("expected {at_least} components, got {}", values.len()));
    }
    Ok(values)
}

/// Parse `v`, `v/vt`, `v//vn` or `v/vt/vn`.
fn parse_face_ref(r: &str) -> std::result::Result<(i64, Option<i64>, Option<i64>), String> {
    let parts: Vec<&str> = r.split('/').collect();
    if parts.len() > 3 {
        return Err(format!("malformed face reference '{r}'"));
    }
    let parse = |s: &str| -> std::result::Result<i64, String> {
        s.parse::<i64>().map_err(|_| format!("bad index '{s}'"))
    };
    let v = parse(parts[0])?;
    let vt = match parts.get(1) {
        Some(&"") | None => None,
        Some(s) => Some(parse(s)?),
    };
    let vn = match parts.get(2) {
        None => None,
        Some(s) => Some(parse(s)?),
    };
    Ok((v, vt, vn))
}

fn resolve_index(idx: i64, len: usize) -> std::result::Result<usize, String> {
    if idx < 1 {
        return Err(format!("{idx} is not a positive 1-based index"));
    }
    let i = (idx - 1) as usize;
    if i >= len {
        return Err(format!("{idx} out of range (have {len})"));
    }
    Ok(i)
}

/// Serialize a mesh to OBJ text. `material` optionally emits
/// `mtllib`/`usemtl` records referencing an external material file.
pub fn obj_string(mesh: &TriangleMesh, material: Option<(&str, &str)>) -> String {
    let mut out = String::new();
    if let Some((mtllib, usemtl)) = material {
        let _ = writeln!(out, "mtllib {mtllib}");
        let _ = writeln!(out, "usemtl {usemtl}");
    }
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    if let Some(uvs) = &mesh.uvs {
        for uv in uvs {
            let _ = writeln!(out, "vt {} {}", uv.x, uv.y);
        }
    }
    if let Some(normals) = &mesh.vertex_normals {
        for n in normals {
            let _ = writeln!(out, "vn {} {} {}", n.x, n.y, n.z);
        }
    }
    let has_uv = mesh.uvs.is_some();
    let has_n = mesh.vertex_normals.is_some();
    for f in &mesh.faces {
        let refs: Vec<String> = f
            .iter()
            .map(|&v| {
                let i = v + 1;
                match (has_uv, has_n) {
                    (true, true) => format!("{i}/{i}/{i}"),
                    (true, false) => format!("{i}/{i}"),
                    (false, true) => format!("{i}//{i}"),
                    (false, false) => format!("{i}"),
                }
            })
            .collect();
        let _ = writeln!(out, "f {} {} {}", refs[0], refs[1], refs[2]);
    }
    out
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, obj_string(mesh, None))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::unit_cube;
    use std::io::Cursor;

    fn parse(text: &str) -> Result<TriangleMesh> {
        parse_obj(Cursor::new(text), Path::new("test.obj"))
    }

    #[test]
    fn round_trip_preserves_mesh() {
        let cube = unit_cube();
        let text = obj_string(&cube, None);
        let back = parse(&text).unwrap();
        assert_eq!(back.vertices, cube.vertices);
        assert_eq!(back.faces, cube.faces);
        assert_eq!(back.uvs, cube.uvs);
        assert_eq!(back.vertex_normals, cube.vertex_normals);
    }

    #[test]
    fn quads_rejected_with_clear_error() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let err = parse(text).unwrap_err();
        assert!(err.to_string().contains("only triangles"));
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = parse("v 0 0 0\nf 1 2 3\n").unwrap_err();
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn negative_index_rejected() {
        let err = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -1 -2 -3\n").unwrap_err();
        assert!(err.to_string().contains("1-based"));
    }

    #[test]
    fn conflicting_uv_assignment_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\n\
                    vt 0 0\nvt 1 0\nvt 0 1\nvt 1 1\n\
                    f 1/1 2/2 3/3\nf 2/4 4/4 3/3\n";
        let err = parse(text).unwrap_err();
        assert!(err.to_string().contains("conflicting texture"));
    }

    #[test]
    fn slash_variants_parse() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n";
        let mesh = parse(text).unwrap();
        assert!(mesh.uvs.is_none());
        assert_eq!(
            mesh.vertex_normals.as_ref().unwrap()[0],
            Vector3::new(0.0, 0.0, 1.0)
        );
    }

    #[test]
    fn comments_and_groups_skipped() {
        let text = "# hello\no thing\ng grp\ns off\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        assert_eq!(parse(text).unwrap().face_count(), 1);
    }

    #[test]
    fn out_of_range_uv_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 2 0\nvt 0 0\nvt 1 1\nf 1/1 2/2 3/3\n";
        assert!(parse(text).is_err());
    }

    #[test]
    fn material_records_emitted() {
        let text = obj_string(&unit_cube(), Some(("asset.mtl", "albedo")));
        assert!(text.starts_with("mtllib asset.mtl\nusemtl albedo\n"));
        assert!(parse(&text).is_ok());
    }
}
