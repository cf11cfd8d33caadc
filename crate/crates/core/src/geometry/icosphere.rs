//! Icosahedral sphere tessellation: `20·4ⁿ` faces after `n` subdivisions,
//! vertices on the unit sphere, faces oriented outward.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{TriSoupMesh, Vec3};

/// Indexed unit icosphere.
pub fn unit_icosphere(subdivisions: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let phi = (1.0 + libm::sqrt(5.0)) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|&p| {
        let v = Vec3::from(p);
        v / v.norm()
    })
    .collect();

    let mut faces: Vec<[usize; 3]> = alloc::vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |i: usize, j: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = if i < j { (i, j) } else { (j, i) };
            *midpoints.entry(key).or_insert_with(|| {
                let m = (verts[i] + verts[j]) * 0.5;
                verts.push(m / m.norm());
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (vertices, faces)
}

/// Unit icosphere as a triangle soup.
pub fn unit_icosphere_mesh(subdivisions: u32) -> TriSoupMesh {
    let (v, f) = unit_icosphere(subdivisions);
    TriSoupMesh::from_indexed(&v, &f).expect("icosphere faces are non-degenerate")
}
