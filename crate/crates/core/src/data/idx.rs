//! IDX tensor format, bit-exact.
//!
//! Layout: two zero bytes, type byte `0x08` (unsigned byte), a
//! dimension-count byte, big-endian `u32` dimension sizes, then the
//! row-major payload. Serialization of a parsed file reproduces the input
//! bytes exactly.

use super::DataError;

/// Parsed unsigned-byte tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub shape: Vec<usize>,
    pub data: Vec<u8>,
}

impl IdxTensor {
    pub fn new(shape: Vec<usize>, data: Vec<u8>) -> Self {
        let expected: usize = shape.iter().product();
        assert_eq!(expected, data.len(), "shape/payload mismatch");
        Self { shape, data }
    }
}

/// Parse an IDX byte stream, verifying the payload length.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxTensor, DataError> {
    if bytes.len() < 4 {
        return Err(DataError::Truncated {
            offset: bytes.len(),
            need: 4 - bytes.len(),
        });
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(DataError::BadMagic {
            b0: bytes[0],
            b1: bytes[1],
        });
    }
    if bytes[2] != 0x08 {
        return Err(DataError::UnsupportedType { type_byte: bytes[2] });
    }
    let ndims = bytes[3] as usize;
    let header_len = 4 + 4 * ndims;
    if bytes.len() < header_len {
        return Err(DataError::Truncated {
            offset: bytes.len(),
            need: header_len - bytes.len(),
        });
    }
    let mut shape = Vec::with_capacity(ndims);
    let mut expected: usize = 1;
    for d in 0..ndims {
        let at = 4 + 4 * d;
        let dim = u32::from_be_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        expected = expected.checked_mul(dim).ok_or(DataError::ShapeOverflow)?;
        shape.push(dim);
    }
    let actual = bytes.len() - header_len;
    if actual != expected {
        return Err(DataError::PayloadLength {
            offset: header_len,
            expected,
            actual,
        });
    }
    Ok(IdxTensor {
        shape,
        data: bytes[header_len..].to_vec(),
    })
}

/// Serialize a tensor back to IDX bytes.
pub fn serialize_idx(tensor: &IdxTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * tensor.shape.len() + tensor.data.len());
    out.extend_from_slice(&[0, 0, 0x08, tensor.shape.len() as u8]);
    for &dim in &tensor.shape {
        out.extend_from_slice(&(dim as u32).to_be_bytes());
    }
    out.extend_from_slice(&tensor.data);
    out
}

/// Read and parse an IDX file from disk.
pub fn read_idx_file(path: &std::path::Path) -> Result<IdxTensor, DataError> {
    parse_idx(&std::fs::read(path)?)
}
