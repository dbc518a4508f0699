use nalgebra::Vector3;

use super::marching::TriangleMesh;

/// Moves every vertex `factor` of the way toward the centroid of its edge neighbors,
/// `iterations` times (simultaneous updates). Connectivity is untouched.
pub fn laplacian_smooth(mesh: &TriangleMesh, iterations: usize, factor: f64) -> TriangleMesh {
    let n = mesh.vertices.len();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
        list.dedup();
    }
    let mut vertices = mesh.vertices.clone();
    for _ in 0..iterations {
        vertices = vertices
            .iter()
            .zip(&neighbors)
            .map(|(v, nb)| {
                if nb.is_empty() {
                    return *v;
                }
                let centroid = nb.iter().fold(Vector3::zeros(), |acc, &j| acc + vertices[j]) / nb.len() as f64;
                v + (centroid - v) * factor
            })
            .collect();
    }
    TriangleMesh {
        vertices,
        triangles: mesh.triangles.clone(),
    }
}
