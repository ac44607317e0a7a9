//! Binary little-endian PLY with float32 positions and int32 triangle indices.
//!
//! The surface material travels as a `comment material <name>` header line.

use super::IngestError;
use crate::mesh::TriangleMesh;

fn ply_err(msg: impl Into<String>) -> IngestError {
    IngestError::Ply(msg.into())
}

pub fn write_ply(mesh: &TriangleMesh) -> Vec<u8> {
    let mut header = String::from("ply\nformat binary_little_endian 1.0\n");
    if let Some(m) = &mesh.material {
        header.push_str(&format!("comment material {m}\n"));
    }
    header.push_str(&format!(
        "element vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    ));
    let mut out = header.into_bytes();
    out.reserve(mesh.vertices.len() * 12 + mesh.triangles.len() * 13);
    for v in &mesh.vertices {
        for c in v {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for t in &mesh.triangles {
        out.push(3);
        for i in t {
            out.extend_from_slice(&(*i as i32).to_le_bytes());
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
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
    fn parse(s: &str) -> Result<Self, IngestError> {
        Ok(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            other => return Err(ply_err(format!("unknown property type `{other}`"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_int(self, b: &[u8]) -> i64 {
        match self {
            Self::I8 => b[0] as i8 as i64,
            Self::U8 => b[0] as i64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as i64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as i64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as i64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as i64,
            Self::F32 | Self::F64 => -1,
        }
    }
}

struct Header {
    material: Option<String>,
    n_vertices: usize,
    vertex_props: Vec<(String, Scalar)>,
    n_faces: usize,
    face_count_type: Scalar,
    face_index_type: Scalar,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, IngestError> {
    const END: &[u8] = b"end_header\n";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| ply_err("missing end_header"))?;
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| ply_err("header is not ASCII"))?;
    let mut lines = text.lines();
    if lines.next() != Some("ply") {
        return Err(ply_err("missing `ply` magic"));
    }
    let mut h = Header {
        material: None,
        n_vertices: 0,
        vertex_props: Vec::new(),
        n_faces: 0,
        face_count_type: Scalar::U8,
        face_index_type: Scalar::I32,
        body_offset: end + END.len(),
    };
    let mut format_ok = false;
    let mut current = "";
    let mut elements = Vec::new();
    let mut face_list_seen = false;
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", "binary_little_endian", "1.0"] => format_ok = true,
            ["format", f, _] => {
                return Err(ply_err(format!(
                    "unsupported format `{f}`; only binary_little_endian is read"
                )))
            }
            ["comment", "material", name @ ..] if !name.is_empty() => {
                h.material = Some(name.join(" "))
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let n: usize = count
                    .parse()
                    .map_err(|_| ply_err(format!("bad element count `{count}`")))?;
                current = match *name {
                    "vertex" => {
                        h.n_vertices = n;
                        "vertex"
                    }
                    "face" => {
                        h.n_faces = n;
                        "face"
                    }
                    other => return Err(ply_err(format!("unsupported element `{other}`"))),
                };
                elements.push(current);
            }
            ["property", "list", ct, it, name] => {
                if current != "face" || !matches!(*name, "vertex_indices" | "vertex_index") {
                    return Err(ply_err(format!("unexpected list property `{name}`")));
                }
                h.face_count_type = Scalar::parse(ct)?;
                h.face_index_type = Scalar::parse(it)?;
                if matches!(h.face_index_type, Scalar::F32 | Scalar::F64) {
                    return Err(ply_err("face indices must be integers"));
                }
                face_list_seen = true;
            }
            ["property", ty, name] => {
                if current != "vertex" {
                    return Err(ply_err(format!("unexpected property `{name}` on `{current}`")));
                }
                h.vertex_props.push((name.to_string(), Scalar::parse(ty)?));
            }
            _ => return Err(ply_err(format!("unrecognized header line `{line}`"))),
        }
    }
    if !format_ok {
        return Err(ply_err("missing format line"));
    }
    if elements.first() != Some(&"vertex") {
        return Err(ply_err("vertex element must come first"));
    }
    if h.n_faces > 0 && !face_list_seen {
        return Err(ply_err("face element lacks a vertex_indices list"));
    }
    for axis in ["x", "y", "z"] {
        match h.vertex_props.iter().find(|(n, _)| n == axis) {
            Some((_, Scalar::F32)) => {}
            Some(_) => return Err(ply_err(format!("vertex `{axis}` must be float32"))),
            None => return Err(ply_err(format!("vertex lacks `{axis}`"))),
        }
    }
    Ok(h)
}

pub fn read_ply(bytes: &[u8]) -> Result<TriangleMesh, IngestError> {
    let h = parse_header(bytes)?;
    let body = &bytes[h.body_offset..];
    let stride: usize = h.vertex_props.iter().map(|(_, s)| s.size()).sum();
    let offsets: Vec<usize> = ["x", "y", "z"]
        .iter()
        .map(|axis| {
            let mut off = 0;
            for (n, s) in &h.vertex_props {
                if n == axis {
                    break;
                }
                off += s.size();
            }
            off
        })
        .collect();
    let vbytes = h
        .n_vertices
        .checked_mul(stride)
        .filter(|&n| n <= body.len())
        .ok_or_else(|| ply_err("file shorter than declared vertex block"))?;
    let mut vertices = Vec::with_capacity(h.n_vertices);
    for chunk in body[..vbytes].chunks_exact(stride) {
        let f = |o: usize| f32::from_le_bytes([chunk[o], chunk[o + 1], chunk[o + 2], chunk[o + 3]]);
        vertices.push([f(offsets[0]), f(offsets[1]), f(offsets[2])]);
    }
    let mut pos = vbytes;
    let cs = h.face_count_type.size();
    let is = h.face_index_type.size();
    let mut triangles = Vec::with_capacity(h.n_faces);
    for face in 0..h.n_faces {
        let short = || ply_err(format!("file ends inside face {face}"));
        let count_bytes = body.get(pos..pos + cs).ok_or_else(short)?;
        let count = h.face_count_type.read_int(count_bytes);
        if count != 3 {
            return Err(ply_err(format!("face {face} has {count} vertices; only triangles are read")));
        }
        pos += cs;
        let mut tri = [0u32; 3];
        for k in tri.iter_mut() {
            let b = body.get(pos..pos + is).ok_or_else(short)?;
            let i = h.face_index_type.read_int(b);
            if i < 0 || i as usize >= h.n_vertices {
                return Err(ply_err(format!("face {face} index {i} out of range")));
            }
            *k = i as u32;
            pos += is;
        }
        triangles.push(tri);
    }
    if pos != body.len() {
        return Err(ply_err(format!(
            "{} trailing bytes after declared elements",
            body.len() - pos
        )));
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
        material: h.material,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> TriangleMesh {
        TriangleMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.5]], vec![[0, 1, 2]])
    }

    #[test]
    fn single_triangle_round_trip() {
        let m = tri();
        let bytes = write_ply(&m);
        let header_end = bytes.windows(11).position(|w| w == b"end_header\n").unwrap() + 11;
        assert_eq!(bytes.len() - header_end, 3 * 12 + 13);
        assert_eq!(read_ply(&bytes).unwrap(), m);
        let with_mat = m.with_material("itu_brick");
        assert_eq!(read_ply(&write_ply(&with_mat)).unwrap(), with_mat);
    }

    #[test]
    fn ascii_rejected() {
        let text = b"ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        let e = read_ply(text).unwrap_err();
        assert!(e.to_string().contains("ascii"), "{e}");
    }

    #[test]
    fn quad_face_rejected() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        bytes.extend(std::iter::repeat(0u8).take(48));
        bytes.push(4);
        for i in 0..4i32 {
            bytes.extend_from_slice(&i.to_le_bytes());
        }
        assert!(read_ply(&bytes).unwrap_err().to_string().contains("only triangles"));
    }

    #[test]
    fn truncated_and_mismatched() {
        let bytes = write_ply(&tri());
        assert!(read_ply(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(read_ply(&extra).is_err());
        let mut lied = bytes.clone();
        let at = lied.windows(14).position(|w| w == b"element face 1").unwrap();
        lied[at + 13] = b'2';
        assert!(read_ply(&lied).is_err());
    }

    #[test]
    fn extra_vertex_properties_are_skipped() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float nx\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for f in [9.0f32, 1.0, 2.0, 3.0] {
            bytes.extend_from_slice(&f.to_le_bytes());
        }
        bytes.push(255);
        assert_eq!(read_ply(&bytes).unwrap().vertices, vec![[1.0, 2.0, 3.0]]);
    }
}
