use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::Vector3;
use rayon::prelude::*;

use super::occupancy::OccupancyVolume;

/// Indexed triangle mesh. Triangles are wound counter-clockwise seen from the side where
/// the field is below the iso level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn indices_in_range(&self) -> bool {
        self.triangles.iter().flatten().all(|&i| i < self.vertices.len())
    }

    fn corners(&self, t: &[usize; 3]) -> [Vector3<f64>; 3] {
        t.map(|i| self.vertices[i])
    }

    pub fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| self.triangle_area(t)).sum()
    }

    /// Enclosed volume by the divergence theorem; positive for outward winding.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// Number of triangles using each undirected edge.
    pub fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Every edge shared by exactly two triangles.
    pub fn is_watertight(&self) -> bool {
        !self.is_empty() && self.edge_counts().values().all(|&c| c == 2)
    }

    /// `V - E + F` over the vertices referenced by triangles.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for &i in self.triangles.iter().flatten() {
            used[i] = true;
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_counts().len() as i64 + self.triangles.len() as i64
    }

    pub fn translated(&self, offset: &Vector3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v + offset).collect(),
            triangles: self.triangles.clone(),
        }
    }
}

fn corner_offset(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

/// The 12 cube edges as (lower corner, axis).
fn cube_edges() -> [(usize, usize); 12] {
    let mut edges = [(0, 0); 12];
    let mut n = 0;
    for axis in 0..3 {
        for c in 0..8 {
            if c & (1 << axis) == 0 {
                edges[n] = (c, axis);
                n += 1;
            }
        }
    }
    edges
}

fn edge_between(a: usize, b: usize) -> usize {
    let lo = a.min(b);
    let axis = (a ^ b).trailing_zeros() as usize;
    cube_edges().iter().position(|&e| e == (lo, axis)).expect("adjacent corners")
}

/// Corners of each face in counter-clockwise order seen from outside the cube.
fn cube_faces() -> Vec<[usize; 4]> {
    let mut faces = Vec::with_capacity(6);
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        for side in 0..2 {
            let at = |ub: usize, uc: usize| (side << a) | (ub << b) | (uc << c);
            let mut f = [at(0, 0), at(1, 0), at(1, 1), at(0, 1)];
            if side == 0 {
                f.reverse();
            }
            faces.push(f);
        }
    }
    faces
}

/// Faces (as `axis * 2 + side`) containing cube edge `e`.
fn edge_faces(e: usize) -> [usize; 2] {
    let (c, axis) = cube_edges()[e];
    let mut out = [0; 2];
    for (n, b) in (0..3).filter(|&b| b != axis).enumerate() {
        out[n] = b * 2 + ((c >> b) & 1);
    }
    out
}

/// Triangles (as cube-edge triples) for one of the 256 corner sign cases.
///
/// On every face the iso-line runs from each inside-to-outside crossing back to the
/// nearest preceding outside-to-inside crossing, which keeps inside corners separated on
/// ambiguous faces. Both cells sharing a face see the same corners, so they agree on the
/// segments and the surface closes up. Segments chain into loops, and each loop is
/// triangulated without chords between two points of one face: the neighbor across that
/// face could pick the same chord and the edge would be shared by four triangles.
fn triangulate_case(case: usize) -> Vec<[u8; 3]> {
    let inside = |c: usize| case & (1 << c) != 0;
    let mut next = [usize::MAX; 12];
    for face in cube_faces() {
        let crossing = |k: usize| {
            let (p, q) = (face[k], face[(k + 1) % 4]);
            (inside(p) != inside(q)).then_some((inside(p), edge_between(p, q)))
        };
        for k in 0..4 {
            if let Some((true, start)) = crossing(k) {
                let end = (1..4)
                    .map(|back| crossing((k + 4 - back) % 4))
                    .find_map(|c| match c {
                        Some((false, e)) => Some(e),
                        _ => None,
                    })
                    .expect("crossings alternate around a face");
                next[start] = end;
            }
        }
    }
    let mut seen = [false; 12];
    let mut triangles = Vec::new();
    for first in 0..12 {
        if next[first] == usize::MAX || seen[first] {
            continue;
        }
        let mut ring = Vec::new();
        let mut e = first;
        while !seen[e] {
            seen[e] = true;
            ring.push(e);
            e = next[e];
        }
        triangulate_ring(&ring, &mut triangles);
    }
    triangles
}

fn triangulate_ring(ring: &[usize], out: &mut Vec<[u8; 3]>) {
    let n = ring.len();
    let chord_ok = |a: usize, b: usize| {
        let adjacent = a.abs_diff(b) == 1 || a.abs_diff(b) == n - 1;
        let (fa, fb) = (edge_faces(ring[a]), edge_faces(ring[b]));
        adjacent || !fa.iter().any(|f| fb.contains(f))
    };
    // split[i][j]: apex of the triangle on side (i, j) of sub-polygon i..=j.
    let mut split = vec![vec![None; n]; n];
    for len in 2..n {
        for i in 0..n - len {
            let j = i + len;
            if !chord_ok(i, j) {
                continue;
            }
            split[i][j] = (i + 1..j).find(|&k| {
                (k == i + 1 || split[i][k].is_some()) && (j == k + 1 || split[k][j].is_some())
            });
        }
    }
    fn emit(ring: &[usize], split: &[Vec<Option<usize>>], i: usize, j: usize, out: &mut Vec<[u8; 3]>) {
        if j <= i + 1 {
            return;
        }
        let k = split[i][j].expect("triangulable loop");
        // Reverse of ring order so normals face away from the inside.
        out.push([ring[i] as u8, ring[j] as u8, ring[k] as u8]);
        emit(ring, split, i, k, out);
        emit(ring, split, k, j, out);
    }
    emit(ring, &split, 0, n - 1, out);
}

fn case_table() -> &'static [Vec<[u8; 3]>] {
    static TABLE: OnceLock<Vec<Vec<[u8; 3]>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..256).map(triangulate_case).collect())
}

/// Extracts the `iso` level set. Grid points with value `> iso` count as inside.
///
/// Vertices are welded per grid edge and interpolated linearly along it; cells are
/// visited in z, y, x order so the output is deterministic.
pub fn marching_cubes(volume: &OccupancyVolume, iso: f64) -> TriangleMesh {
    let [nx, ny, nz] = volume.dims();
    if nx < 2 || ny < 2 || nz < 2 {
        return TriangleMesh::default();
    }
    let edges = cube_edges();
    let table = case_table();
    let key = |i: usize, j: usize, k: usize, axis: usize| (volume.index(i, j, k) * 3 + axis) as u64;
    let layers: Vec<Vec<[u64; 3]>> = (0..nz - 1)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::new();
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    let mut case = 0;
                    for c in 0..8 {
                        let [dx, dy, dz] = corner_offset(c);
                        if volume.get(i + dx, j + dy, k + dz) > iso {
                            case |= 1 << c;
                        }
                    }
                    for tri in &table[case] {
                        out.push(tri.map(|e| {
                            let (c, axis) = edges[e as usize];
                            let [dx, dy, dz] = corner_offset(c);
                            key(i + dx, j + dy, k + dz, axis)
                        }));
                    }
                }
            }
            out
        })
        .collect();

    let mut index_of: HashMap<u64, usize> = HashMap::new();
    let mut mesh = TriangleMesh::default();
    for tri in layers.iter().flatten() {
        let t = tri.map(|key| {
            *index_of.entry(key).or_insert_with(|| {
                mesh.vertices.push(edge_vertex(volume, key, iso));
                mesh.vertices.len() - 1
            })
        });
        mesh.triangles.push(t);
    }
    mesh
}

/// Grid-space position of the iso crossing on the edge encoded by `key`.
fn edge_vertex_grid(volume: &OccupancyVolume, key: u64, iso: f64) -> Vector3<f64> {
    let [nx, ny, _] = volume.dims();
    let (lin, axis) = ((key / 3) as usize, (key % 3) as usize);
    let (i, j, k) = (lin % nx, (lin / nx) % ny, lin / (nx * ny));
    let mut hi = [i, j, k];
    hi[axis] += 1;
    let (a, b) = (volume.get(i, j, k), volume.get(hi[0], hi[1], hi[2]));
    // Clamped away from the corners so a grid value equal to iso cannot collapse a triangle.
    let t = ((iso - a) / (b - a)).clamp(1e-9, 1.0 - 1e-9);
    let mut g = Vector3::new(i as f64, j as f64, k as f64);
    g[axis] += t;
    g
}

fn edge_vertex(volume: &OccupancyVolume, key: u64, iso: f64) -> Vector3<f64> {
    volume.volume_to_world(volume.grid_to_volume(edge_vertex_grid(volume, key, iso)))
}
