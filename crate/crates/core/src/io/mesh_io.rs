//! ASCII OBJ and binary little-endian PLY mesh files.

use nalgebra::Vector3;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::geometry::SceneMesh;

use super::IoError;

pub fn write_obj(path: &Path, mesh: &SceneMesh<f64>) -> Result<(), IoError> {
    let mut out = BufWriter::new(File::create(path)?);
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn read_obj(path: &Path) -> Result<SceneMesh<f64>, IoError> {
    let reader = BufReader::new(File::open(path)?);
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = |what: &str| -> Result<f64, IoError> {
                    parts
                        .next()
                        .ok_or_else(|| IoError::Malformed {
                            path: path.display().to_string(),
                            line: lineno + 1,
                            what: format!("missing {what}"),
                        })?
                        .parse()
                        .map_err(|_| IoError::Malformed {
                            path: path.display().to_string(),
                            line: lineno + 1,
                            what: format!("bad {what}"),
                        })
                };
                let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
                vertices.push(Vector3::new(x, y, z));
            }
            Some("f") => {
                let mut idx = [0u32; 3];
                for slot in &mut idx {
                    let token = parts.next().ok_or_else(|| IoError::Malformed {
                        path: path.display().to_string(),
                        line: lineno + 1,
                        what: "face needs 3 indices".into(),
                    })?;
                    let first = token.split('/').next().unwrap_or(token);
                    let one_based: i64 = first.parse().map_err(|_| IoError::Malformed {
                        path: path.display().to_string(),
                        line: lineno + 1,
                        what: "bad face index".into(),
                    })?;
                    if one_based < 1 {
                        return Err(IoError::Malformed {
                            path: path.display().to_string(),
                            line: lineno + 1,
                            what: "face indices are 1-based".into(),
                        });
                    }
                    *slot = (one_based - 1) as u32;
                }
                if parts.next().is_some() {
                    return Err(IoError::Malformed {
                        path: path.display().to_string(),
                        line: lineno + 1,
                        what: "only triangles are supported".into(),
                    });
                }
                faces.push(idx);
            }
            _ => {}
        }
    }
    SceneMesh::new(vertices, faces).map_err(IoError::from)
}

/// Binary little-endian PLY with float32 positions; `scalar` adds one extra
/// float vertex property (used for per-vertex error maps).
pub fn write_ply(
    path: &Path,
    mesh: &SceneMesh<f64>,
    scalar: Option<(&str, &[f64])>,
) -> Result<(), IoError> {
    if let Some((_, values)) = scalar {
        if values.len() != mesh.n_vertices() {
            return Err(IoError::Malformed {
                path: path.display().to_string(),
                line: 0,
                what: "scalar channel length != vertex count".into(),
            });
        }
    }
    let mut out = BufWriter::new(File::create(path)?);
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n",
        mesh.n_vertices()
    )?;
    if let Some((name, _)) = scalar {
        writeln!(out, "property float {name}")?;
    }
    write!(
        out,
        "element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.n_faces()
    )?;
    for (i, v) in mesh.vertices().iter().enumerate() {
        out.write_all(&(v.x as f32).to_le_bytes())?;
        out.write_all(&(v.y as f32).to_le_bytes())?;
        out.write_all(&(v.z as f32).to_le_bytes())?;
        if let Some((_, values)) = scalar {
            out.write_all(&(values[i] as f32).to_le_bytes())?;
        }
    }
    for f in mesh.faces() {
        out.write_all(&[3u8])?;
        for &idx in f {
            out.write_all(&(idx as i32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_ply(path: &Path) -> Result<SceneMesh<f64>, IoError> {
    let mut reader = BufReader::new(File::open(path)?);
    let malformed = |what: &str| IoError::Malformed {
        path: path.display().to_string(),
        line: 0,
        what: what.into(),
    };

    let mut header = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(malformed("unterminated header"));
        }
        header.push_str(&line);
        if line.trim_end() == "end_header" {
            break;
        }
    }
    let mut n_vertices = 0usize;
    let mut n_faces = 0usize;
    let mut vertex_props: Vec<String> = Vec::new();
    let mut in_vertex = false;
    for line in header.lines() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", fmt, _] if *fmt != "binary_little_endian" => {
                return Err(malformed("only binary_little_endian is supported"));
            }
            ["element", "vertex", n] => {
                n_vertices = n.parse().map_err(|_| malformed("bad vertex count"))?;
                in_vertex = true;
            }
            ["element", "face", n] => {
                n_faces = n.parse().map_err(|_| malformed("bad face count"))?;
                in_vertex = false;
            }
            ["element", ..] => in_vertex = false,
            ["property", "float", name] if in_vertex => {
                vertex_props.push((*name).to_string());
            }
            ["property", kind, name] if in_vertex => {
                return Err(malformed(&format!(
                    "unsupported vertex property {kind} {name}"
                )));
            }
            _ => {}
        }
    }
    let x_at = vertex_props.iter().position(|p| p == "x");
    let y_at = vertex_props.iter().position(|p| p == "y");
    let z_at = vertex_props.iter().position(|p| p == "z");
    let (Some(xi), Some(yi), Some(zi)) = (x_at, y_at, z_at) else {
        return Err(malformed("vertex element must contain x, y, z"));
    };

    let mut vertices = Vec::with_capacity(n_vertices);
    let stride = vertex_props.len();
    let mut buf = vec![0u8; 4 * stride];
    for _ in 0..n_vertices {
        reader.read_exact(&mut buf)?;
        let get = |k: usize| {
            f32::from_le_bytes([buf[4 * k], buf[4 * k + 1], buf[4 * k + 2], buf[4 * k + 3]])
                as f64
        };
        vertices.push(Vector3::new(get(xi), get(yi), get(zi)));
    }
    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let mut count = [0u8; 1];
        reader.read_exact(&mut count)?;
        if count[0] != 3 {
            return Err(malformed("only triangle faces are supported"));
        }
        let mut idx = [0u8; 12];
        reader.read_exact(&mut idx)?;
        let f = |k: usize| {
            i32::from_le_bytes([idx[4 * k], idx[4 * k + 1], idx[4 * k + 2], idx[4 * k + 3]])
                as u32
        };
        faces.push([f(0), f(1), f(2)]);
    }
    SceneMesh::new(vertices, faces).map_err(IoError::from)
}
