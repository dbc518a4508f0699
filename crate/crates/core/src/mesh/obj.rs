//! Wavefront OBJ subset: `v x y z` and `f i j k` lines with 1-based indices.
//!
//! Coordinates are written with the shortest decimal that parses back to the same `f64`,
//! so `write(read(write(m)))` reproduces the file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::marching::TriangleMesh;
use crate::error::{Error, Result};

pub fn obj_string(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).unwrap();
    }
    out
}

pub fn export_obj(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    std::fs::write(path, obj_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh> {
    let mut mesh = TriangleMesh::default();
    for (n, line) in text.lines().enumerate() {
        let err = |msg: &str| Error::Parse(format!("OBJ line {}: {msg}", n + 1));
        let mut parts = line.split_whitespace();
        match parts.next() {
            None => {}
            Some(tag) if tag.starts_with('#') => {}
            Some("v") => {
                let c: Vec<f64> = parts
                    .map(|p| p.parse::<f64>().map_err(|_| err("bad coordinate")))
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(err("vertex needs 3 coordinates"));
                }
                mesh.vertices.push(Vector3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|p| {
                        // Accept `i/vt/vn` forms and keep the vertex index.
                        let i = p.split('/').next().unwrap_or("");
                        i.parse::<usize>().map_err(|_| err("bad face index"))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 || idx.iter().any(|&i| i == 0 || i > mesh.vertices.len()) {
                    return Err(err("face needs 3 indices referring to earlier vertices"));
                }
                mesh.triangles.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            Some(other) => return Err(err(&format!("unsupported record `{other}`"))),
        }
    }
    Ok(mesh)
}

pub fn read_obj(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text)
}
