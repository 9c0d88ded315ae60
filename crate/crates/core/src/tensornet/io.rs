//! Weights file: `IDRN`, version byte `0x01`, little-endian `u32` header
//! length, UTF-8 JSON header, then every tensor as little-endian `f32` in
//! header order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, Network, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"IDRN";
const VERSION: u8 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    n_b: usize,
    n_f: usize,
    #[serde(default = "default_kernel")]
    kernel: usize,
    #[serde(default = "default_input")]
    input: [usize; 3],
    #[serde(default = "default_classes")]
    classes: usize,
    tensors: Vec<TensorEntry>,
}

fn default_kernel() -> usize {
    5
}
fn default_input() -> [usize; 3] {
    [200, 200, 3]
}
fn default_classes() -> usize {
    9
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

pub fn encode_weights(net: &Network<f32>) -> Result<Vec<u8>> {
    let arch = net.architecture();
    let names = arch.param_shapes()?;
    let header = Header {
        n_b: arch.blocks,
        n_f: arch.filters,
        kernel: arch.kernel,
        input: arch.input,
        classes: arch.classes,
        tensors: names
            .into_iter()
            .map(|(name, shape)| TensorEntry { name, shape })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(9 + json.len() + net.param_count() * 4);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for t in net.params() {
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_weights(bytes: &[u8]) -> Result<Network<f32>> {
    let bad = |m: &str| Error::Format(m.to_string());
    if bytes.len() < 9 || &bytes[..4] != MAGIC {
        return Err(bad("missing IDRN magic"));
    }
    if bytes[4] != VERSION {
        return Err(bad(&format!("unsupported version {}", bytes[4])));
    }
    let hlen = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let body = &bytes[9..];
    if body.len() < hlen {
        return Err(bad("truncated header"));
    }
    let header: Header = serde_json::from_slice(&body[..hlen]).map_err(|e| bad(&format!("header: {e}")))?;
    let arch = Architecture {
        blocks: header.n_b,
        filters: header.n_f,
        kernel: header.kernel,
        input: header.input,
        classes: header.classes,
    };
    let expected = arch.param_shapes().map_err(|e| bad(&e.to_string()))?;
    if expected.len() != header.tensors.len()
        || expected
            .iter()
            .zip(&header.tensors)
            .any(|((n, s), t)| *n != t.name || *s != t.shape)
    {
        return Err(bad("tensor list does not match the advertised architecture"));
    }
    let mut data = &body[hlen..];
    let mut params = Vec::with_capacity(expected.len());
    for (_, shape) in &expected {
        let n: usize = shape.iter().product();
        if data.len() < n * 4 {
            return Err(bad("truncated tensor data"));
        }
        let vals = data[..n * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        params.push(Tensor::from_vec(shape, vals)?);
        data = &data[n * 4..];
    }
    if !data.is_empty() {
        return Err(bad("trailing bytes after tensor data"));
    }
    Network::from_params(arch, params)
}

pub fn save_weights(net: &Network<f32>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_weights(net)?).map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<Network<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Network<f32> {
        Network::new(
            Architecture {
                blocks: 2,
                filters: 3,
                kernel: 5,
                input: [16, 12, 3],
                classes: 9,
            },
            42,
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let net = small();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.idrn");
        save_weights(&net, &path).unwrap();
        let back = load_weights(&path).unwrap();
        for (a, b) in net.params().iter().zip(back.params()) {
            assert_eq!(a.shape(), b.shape());
            assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        assert_eq!(&std::fs::read(&path).unwrap()[..5], b"IDRN\x01");
    }

    #[test]
    fn truncated_is_format_error() {
        let bytes = encode_weights(&small()).unwrap();
        for cut in [3, 8, 20, bytes.len() - 1] {
            assert!(matches!(decode_weights(&bytes[..cut]), Err(Error::Format(_))), "cut {cut}");
        }
    }

    #[test]
    fn mismatched_header_is_format_error() {
        let bytes = encode_weights(&small()).unwrap();
        let hlen = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
        let header = std::str::from_utf8(&bytes[9..9 + hlen]).unwrap();
        let forged = header.replacen("[5,5,3,3]", "[5,5,3,4]", 1);
        assert_ne!(forged, header);
        let mut out = b"IDRN\x01".to_vec();
        out.extend_from_slice(&(forged.len() as u32).to_le_bytes());
        out.extend_from_slice(forged.as_bytes());
        out.extend_from_slice(&bytes[9 + hlen..]);
        assert!(matches!(decode_weights(&out), Err(Error::Format(_))));
        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        assert!(matches!(decode_weights(&bad_magic), Err(Error::Format(_))));
    }
}
