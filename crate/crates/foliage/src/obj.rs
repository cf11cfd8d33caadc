//! Wavefront OBJ export and import for triangle soups.
//!
//! Every face is written with its own three `v` lines followed by one
//! `f i j k` line (1-based indices), so the vertex count is always 3M.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use foliage_core::{FoliageModel, TriSoupMesh, Triangle, Vec3};

use crate::error::{FoliageError, Result};

/// Named group of faces written as one `o` object.
pub struct ObjObject<'a> {
    pub name: &'a str,
    pub faces: &'a [Triangle],
}

pub fn write_objects<W: Write>(mut out: W, objects: &[ObjObject<'_>]) -> std::io::Result<()> {
    let mut buf = String::new();
    let mut base = 1usize;
    for obj in objects {
        writeln!(buf, "o {}", obj.name).unwrap();
        for t in obj.faces {
            for p in t.vertices() {
                writeln!(buf, "v {} {} {}", p.x, p.y, p.z).unwrap();
            }
        }
        for i in 0..obj.faces.len() {
            let k = base + 3 * i;
            writeln!(buf, "f {} {} {}", k, k + 1, k + 2).unwrap();
        }
        base += 3 * obj.faces.len();
    }
    out.write_all(buf.as_bytes())
}

pub fn write_mesh<W: Write>(out: W, name: &str, mesh: &TriSoupMesh) -> std::io::Result<()> {
    write_objects(
        out,
        &[ObjObject {
            name,
            faces: mesh.faces(),
        }],
    )
}

/// Writes the crown envelope and the scatterers as two objects.
pub fn write_model<W: Write>(out: W, model: &FoliageModel) -> std::io::Result<()> {
    write_objects(
        out,
        &[
            ObjObject {
                name: "envelope",
                faces: model.envelope.faces(),
            },
            ObjObject {
                name: "scatterers",
                faces: &model.scatterers,
            },
        ],
    )
}

/// Faces of one parsed object.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedObject {
    pub name: String,
    pub faces: Vec<Triangle>,
}

/// Parses `v`/`f`/`o` records. Face entries may carry `/vt/vn` suffixes and
/// negative (relative) indices; only triangles are accepted.
pub fn read_objects<R: BufRead>(input: R) -> Result<Vec<ParsedObject>> {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut objects: Vec<ParsedObject> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let bad = |msg: &str| FoliageError::Obj {
            line: lineno,
            message: msg.to_string(),
        };
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let xyz: Vec<f64> = parts
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("malformed vertex"))?;
                if xyz.len() != 3 {
                    return Err(bad("vertex needs three coordinates"));
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let idx: Vec<&str> = parts.collect();
                if idx.len() != 3 {
                    return Err(bad("only triangular faces are supported"));
                }
                let mut pts = [Vec3::ZERO; 3];
                for (slot, token) in pts.iter_mut().zip(&idx) {
                    let raw: i64 = token
                        .split('/')
                        .next()
                        .unwrap_or("")
                        .parse()
                        .map_err(|_| bad("malformed face index"))?;
                    let i = if raw > 0 {
                        raw as usize - 1
                    } else if raw < 0 && (-raw) as usize <= vertices.len() {
                        vertices.len() - (-raw) as usize
                    } else {
                        return Err(bad("face index out of range"));
                    };
                    *slot = *vertices.get(i).ok_or_else(|| bad("face index out of range"))?;
                }
                let tri = Triangle::new(pts[0], pts[1], pts[2]).map_err(|_| bad("degenerate face"))?;
                if objects.is_empty() {
                    objects.push(ParsedObject {
                        name: String::new(),
                        faces: Vec::new(),
                    });
                }
                objects.last_mut().unwrap().faces.push(tri);
            }
            Some("o") | Some("g") => objects.push(ParsedObject {
                name: parts.collect::<Vec<_>>().join(" "),
                faces: Vec::new(),
            }),
            _ => {}
        }
    }
    Ok(objects)
}

/// Reads every face in the file into a single mesh.
pub fn read_mesh<R: BufRead>(input: R) -> Result<TriSoupMesh> {
    let faces: Vec<Triangle> = read_objects(input)?
        .into_iter()
        .flat_map(|o| o.faces)
        .collect();
    Ok(TriSoupMesh::new(faces)?)
}
