//! Binary mesh payload.
//!
//! Layout (all little-endian):
//!
//! ```text
//! u32            envelope length in bytes (n)
//! [u8; n]        UTF-8 JSON envelope
//! u32            vertex count (V)
//! u32            face count (F)
//! [f32; 3·V]     vertex positions
//! [u32; 3·F]     triangle indices
//! ```

use forge_core::mesh::Point;
use forge_core::Mesh;
use serde_json::Value;

pub const CONTENT_TYPE: &str = "application/x-forge-mesh";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WireError {
    #[error("payload truncated at byte {0}")]
    Truncated(usize),
    #[error("envelope is not valid JSON: {0}")]
    Envelope(String),
    #[error("{0} trailing bytes after payload")]
    Trailing(usize),
}

pub fn encode(envelope: &Value, vertices: &[Point], faces: &[[usize; 3]]) -> Vec<u8> {
    let json = serde_json::to_vec(envelope).expect("JSON value serializes");
    let mut out = Vec::with_capacity(12 + json.len() + vertices.len() * 12 + faces.len() * 12);
    out.extend((json.len() as u32).to_le_bytes());
    out.extend(&json);
    out.extend((vertices.len() as u32).to_le_bytes());
    out.extend((faces.len() as u32).to_le_bytes());
    for v in vertices {
        for c in v.iter() {
            out.extend((*c as f32).to_le_bytes());
        }
    }
    for f in faces {
        for &i in f {
            out.extend((i as u32).to_le_bytes());
        }
    }
    out
}

pub fn encode_mesh(envelope: &Value, mesh: &Mesh) -> Vec<u8> {
    encode(envelope, &mesh.vertices, &mesh.faces)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedMesh {
    pub envelope: Value,
    pub vertices: Vec<[f32; 3]>,
    pub faces: Vec<[u32; 3]>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(WireError::Truncated(self.at))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<DecodedMesh, WireError> {
    let mut c = Cursor { bytes, at: 0 };
    let n = c.u32()? as usize;
    let envelope = serde_json::from_slice(c.take(n)?).map_err(|e| WireError::Envelope(e.to_string()))?;
    let (nv, nf) = (c.u32()? as usize, c.u32()? as usize);
    let raw = c.take(nv.checked_mul(12).ok_or(WireError::Truncated(c.at))?)?;
    let vertices = raw
        .chunks_exact(12)
        .map(|b| [0, 4, 8].map(|o| f32::from_le_bytes(b[o..o + 4].try_into().unwrap())))
        .collect();
    let raw = c.take(nf.checked_mul(12).ok_or(WireError::Truncated(c.at))?)?;
    let faces = raw
        .chunks_exact(12)
        .map(|b| [0, 4, 8].map(|o| u32::from_le_bytes(b[o..o + 4].try_into().unwrap())))
        .collect();
    if c.at != bytes.len() {
        return Err(WireError::Trailing(bytes.len() - c.at));
    }
    Ok(DecodedMesh { envelope, vertices, faces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use forge_core::mesh::synth;

    #[test]
    fn roundtrip() {
        let m = synth::icosphere(1);
        let env = serde_json::json!({"gamma": 0.1});
        let bytes = encode_mesh(&env, &m);
        let d = decode(&bytes).unwrap();
        assert_eq!(d.envelope, env);
        assert_eq!(d.vertices.len(), 42);
        assert_eq!(d.faces[3], m.faces[3].map(|i| i as u32));
        assert_eq!(d.vertices[5][1], m.vertices[5].y as f32);
    }

    #[test]
    fn malformed() {
        let bytes = encode_mesh(&serde_json::json!({}), &synth::icosphere(0));
        assert!(matches!(decode(&bytes[..bytes.len() - 1]), Err(WireError::Truncated(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert_eq!(decode(&extra), Err(WireError::Trailing(1)));
        assert!(decode(&[1, 0, 0, 0, b'{']).is_err());
    }
}
