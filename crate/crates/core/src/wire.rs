//! Byte-level encodings: matrices, framed protocol messages, hex helpers.
//!
//! Frame layout (all integers little-endian):
//!
//! ```text
//! +--------+---------+----------+-------------+---------+
//! | "ZKP1" | version | msg_type | payload_len | payload |
//! | 4 B    | 1 B     | 1 B      | 4 B (u32)   | n B     |
//! +--------+---------+----------+-------------+---------+
//! ```

use std::io::{self, Read};

use thiserror::Error;

use crate::field::PrimeModulus;
use crate::matrix::{Matrix, MatrixError};
use crate::protocol::ChallengeBit;

pub const MAGIC: [u8; 4] = *b"ZKP1";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 10;
/// Payloads must be strictly smaller than this.
pub const MAX_PAYLOAD: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported protocol version {0:#04x}")]
    BadVersion(u8),
    #[error("unknown message type {0:#04x}")]
    UnknownType(u8),
    #[error("payload of {0} bytes exceeds the frame limit")]
    PayloadTooLarge(usize),
    #[error("stream ended inside a frame")]
    Truncated,
    #[error("expected {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("element {value} is out of range for modulus {p}")]
    OutOfRangeElement { value: u64, p: u64 },
    #[error("unexpected message {got:?}, wanted {expected:?}")]
    UnexpectedMessage { expected: MessageType, got: MessageType },
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error("invalid hex: {0}")]
    Hex(#[from] hex::FromHexError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    ProverHello = 0x01,
    VerifierHello = 0x02,
    Witness = 0x03,
    Challenge = 0x04,
    Response = 0x05,
    RoundResult = 0x06,
    SessionResult = 0x07,
    Error = 0x7F,
}

impl TryFrom<u8> for MessageType {
    type Error = WireError;

    fn try_from(b: u8) -> Result<Self, WireError> {
        Ok(match b {
            0x01 => Self::ProverHello,
            0x02 => Self::VerifierHello,
            0x03 => Self::Witness,
            0x04 => Self::Challenge,
            0x05 => Self::Response,
            0x06 => Self::RoundResult,
            0x07 => Self::SessionResult,
            0x7F => Self::Error,
            other => return Err(WireError::UnknownType(other)),
        })
    }
}

/// Serializes `d^2` entries row-major, `elem_width` little-endian bytes each.
pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let w = m.modulus().elem_width();
    let mut out = Vec::with_capacity(m.entries().len() * w);
    for &v in m.entries() {
        out.extend_from_slice(&v.to_le_bytes()[..w]);
    }
    out
}

pub fn decode_matrix(buf: &[u8], dim: usize, modulus: PrimeModulus) -> Result<Matrix, WireError> {
    let w = modulus.elem_width();
    let expected = dim * dim * w;
    if dim == 0 || buf.len() != expected {
        return Err(WireError::BadLength {
            expected,
            got: buf.len(),
        });
    }
    let mut entries = Vec::with_capacity(dim * dim);
    for chunk in buf.chunks_exact(w) {
        let mut bytes = [0u8; 8];
        bytes[..w].copy_from_slice(chunk);
        let value = u64::from_le_bytes(bytes);
        if value >= modulus.value() {
            return Err(WireError::OutOfRangeElement {
                value,
                p: modulus.value(),
            });
        }
        entries.push(value);
    }
    Ok(Matrix::from_entries(modulus, dim, entries)?)
}

/// Lowercase hex of the matrix encoding, as used in JSON files.
pub fn matrix_to_hex(m: &Matrix) -> String {
    hex::encode(encode_matrix(m))
}

pub fn matrix_from_hex(s: &str, dim: usize, modulus: PrimeModulus) -> Result<Matrix, WireError> {
    decode_matrix(&hex::decode(s)?, dim, modulus)
}

pub fn frame_message(msg_type: MessageType, payload: &[u8]) -> Result<Vec<u8>, WireError> {
    if payload.len() >= MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge(payload.len()));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg_type as u8);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

fn parse_header(header: &[u8; HEADER_LEN]) -> Result<(MessageType, usize), WireError> {
    let magic: [u8; 4] = header[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(WireError::BadMagic(magic));
    }
    if header[4] != VERSION {
        return Err(WireError::BadVersion(header[4]));
    }
    let msg_type = MessageType::try_from(header[5])?;
    let len = u32::from_le_bytes(header[6..10].try_into().expect("4 bytes")) as usize;
    if len >= MAX_PAYLOAD {
        return Err(WireError::PayloadTooLarge(len));
    }
    Ok((msg_type, len))
}

fn read_exact_or_truncated<R: Read + ?Sized>(reader: &mut R, buf: &mut [u8]) -> Result<(), WireError> {
    reader.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => WireError::Truncated,
        _ => WireError::Io(e),
    })
}

/// Reads exactly one frame from a stream; nothing past its payload is consumed.
pub fn parse_frame<R: Read + ?Sized>(reader: &mut R) -> Result<(MessageType, Vec<u8>), WireError> {
    let mut header = [0u8; HEADER_LEN];
    read_exact_or_truncated(reader, &mut header)?;
    let (msg_type, len) = parse_header(&header)?;
    let mut payload = vec![0u8; len];
    read_exact_or_truncated(reader, &mut payload)?;
    Ok((msg_type, payload))
}

/// Slice variant of [`parse_frame`], returning the unconsumed remainder.
pub fn parse_frame_bytes(buf: &[u8]) -> Result<(MessageType, &[u8], &[u8]), WireError> {
    let header: &[u8; HEADER_LEN] = buf
        .get(..HEADER_LEN)
        .ok_or(WireError::Truncated)?
        .try_into()
        .expect("header length");
    let (msg_type, len) = parse_header(header)?;
    let body = &buf[HEADER_LEN..];
    if body.len() < len {
        return Err(WireError::Truncated);
    }
    Ok((msg_type, &body[..len], &body[len..]))
}

/// HELLO payload: `id_len ‖ id ‖ fingerprint ‖ public key [‖ rounds]`.
///
/// The key is kept as raw bytes so the receiver can check the fingerprint
/// before trying to interpret it under its own parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hello {
    pub id: String,
    pub fingerprint: [u8; 8],
    pub public_key: Vec<u8>,
}

impl Hello {
    pub fn public_key_matrix(&self, dim: usize, modulus: PrimeModulus) -> Result<Matrix, WireError> {
        decode_matrix(&self.public_key, dim, modulus)
    }
}

/// Error codes carried in ERROR frames.
pub mod error_code {
    pub const UNKNOWN_PROVER: u8 = 0x01;
    pub const FINGERPRINT_MISMATCH: u8 = 0x02;
    pub const MALFORMED: u8 = 0x03;
    pub const SINGULAR_MATRIX: u8 = 0x04;
    pub const PROTOCOL_ORDER: u8 = 0x05;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    ProverHello(Hello),
    VerifierHello {
        hello: Hello,
        rounds: u16,
    },
    Witness(Matrix),
    Challenge {
        bit: ChallengeBit,
        question: Matrix,
    },
    Response(Matrix),
    RoundResult {
        round: u16,
        accepted: bool,
    },
    SessionResult {
        accepted: bool,
        rounds_passed: u16,
        rounds: u16,
    },
    Error {
        code: u8,
        message: String,
    },
}

fn encode_hello(h: &Hello, out: &mut Vec<u8>) -> Result<(), WireError> {
    let id = h.id.as_bytes();
    let id_len = u8::try_from(id.len())
        .map_err(|_| WireError::Malformed(format!("identity of {} bytes is too long", id.len())))?;
    out.push(id_len);
    out.extend_from_slice(id);
    out.extend_from_slice(&h.fingerprint);
    out.extend_from_slice(&h.public_key);
    Ok(())
}

fn decode_hello(payload: &[u8], key_len: usize) -> Result<Hello, WireError> {
    let (&id_len, rest) = payload
        .split_first()
        .ok_or_else(|| WireError::Malformed("empty hello".into()))?;
    let id_len = id_len as usize;
    let expected = 1 + id_len + 8 + key_len;
    if payload.len() != expected {
        return Err(WireError::BadLength {
            expected,
            got: payload.len(),
        });
    }
    let id = std::str::from_utf8(&rest[..id_len])
        .map_err(|_| WireError::Malformed("identity is not UTF-8".into()))?
        .to_owned();
    let fingerprint = rest[id_len..id_len + 8].try_into().expect("8 bytes");
    Ok(Hello {
        id,
        fingerprint,
        public_key: rest[id_len + 8..].to_vec(),
    })
}

fn bool_byte(b: u8) -> Result<bool, WireError> {
    match b {
        0 => Ok(false),
        1 => Ok(true),
        other => Err(WireError::Malformed(format!("flag byte {other:#04x}"))),
    }
}

impl Message {
    pub fn message_type(&self) -> MessageType {
        match self {
            Self::ProverHello(_) => MessageType::ProverHello,
            Self::VerifierHello { .. } => MessageType::VerifierHello,
            Self::Witness(_) => MessageType::Witness,
            Self::Challenge { .. } => MessageType::Challenge,
            Self::Response(_) => MessageType::Response,
            Self::RoundResult { .. } => MessageType::RoundResult,
            Self::SessionResult { .. } => MessageType::SessionResult,
            Self::Error { .. } => MessageType::Error,
        }
    }

    pub fn encode_payload(&self) -> Result<Vec<u8>, WireError> {
        let mut out = Vec::new();
        match self {
            Self::ProverHello(h) => encode_hello(h, &mut out)?,
            Self::VerifierHello { hello, rounds } => {
                encode_hello(hello, &mut out)?;
                out.extend_from_slice(&rounds.to_le_bytes());
            }
            Self::Witness(m) | Self::Response(m) => out = encode_matrix(m),
            Self::Challenge { bit, question } => {
                out.push(bit.as_u8());
                out.extend_from_slice(&encode_matrix(question));
            }
            Self::RoundResult { round, accepted } => {
                out.extend_from_slice(&round.to_le_bytes());
                out.push(*accepted as u8);
            }
            Self::SessionResult {
                accepted,
                rounds_passed,
                rounds,
            } => {
                out.push(*accepted as u8);
                out.extend_from_slice(&rounds_passed.to_le_bytes());
                out.extend_from_slice(&rounds.to_le_bytes());
            }
            Self::Error { code, message } => {
                out.push(*code);
                out.extend_from_slice(message.as_bytes());
            }
        }
        Ok(out)
    }

    pub fn to_frame(&self) -> Result<Vec<u8>, WireError> {
        frame_message(self.message_type(), &self.encode_payload()?)
    }

    /// Decodes a payload; matrices are interpreted under `(dim, modulus)`.
    pub fn decode(msg_type: MessageType, payload: &[u8], dim: usize, modulus: PrimeModulus) -> Result<Self, WireError> {
        let key_len = dim * dim * modulus.elem_width();
        let exact = |n: usize| {
            if payload.len() == n {
                Ok(())
            } else {
                Err(WireError::BadLength {
                    expected: n,
                    got: payload.len(),
                })
            }
        };
        Ok(match msg_type {
            MessageType::ProverHello => Self::ProverHello(decode_hello(payload, key_len)?),
            MessageType::VerifierHello => {
                if payload.len() < 2 {
                    return Err(WireError::Truncated);
                }
                let (body, tail) = payload.split_at(payload.len() - 2);
                Self::VerifierHello {
                    hello: decode_hello(body, key_len)?,
                    rounds: u16::from_le_bytes([tail[0], tail[1]]),
                }
            }
            MessageType::Witness => Self::Witness(decode_matrix(payload, dim, modulus)?),
            MessageType::Response => Self::Response(decode_matrix(payload, dim, modulus)?),
            MessageType::Challenge => {
                exact(1 + key_len)?;
                let bit = ChallengeBit::from_u8(payload[0])
                    .ok_or_else(|| WireError::Malformed(format!("challenge bit {:#04x}", payload[0])))?;
                Self::Challenge {
                    bit,
                    question: decode_matrix(&payload[1..], dim, modulus)?,
                }
            }
            MessageType::RoundResult => {
                exact(3)?;
                Self::RoundResult {
                    round: u16::from_le_bytes([payload[0], payload[1]]),
                    accepted: bool_byte(payload[2])?,
                }
            }
            MessageType::SessionResult => {
                exact(5)?;
                Self::SessionResult {
                    accepted: bool_byte(payload[0])?,
                    rounds_passed: u16::from_le_bytes([payload[1], payload[2]]),
                    rounds: u16::from_le_bytes([payload[3], payload[4]]),
                }
            }
            MessageType::Error => {
                let (&code, text) = payload
                    .split_first()
                    .ok_or_else(|| WireError::Malformed("empty error frame".into()))?;
                Self::Error {
                    code,
                    message: String::from_utf8_lossy(text).into_owned(),
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(p: u64) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    #[test]
    fn matrix_encoding_examples() {
        let m = Matrix::from_rows(fp(251), &[[1, 2], [3, 4]]).unwrap();
        assert_eq!(encode_matrix(&m), vec![1, 2, 3, 4]);
        assert_eq!(encode_matrix(&Matrix::identity(fp(251), 2)), vec![1, 0, 0, 1]);
        let wide = encode_matrix(&Matrix::identity(fp(65537), 2));
        assert_eq!(wide, vec![1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0]);
        assert_eq!(matrix_to_hex(&m), "01020304");
    }

    #[test]
    fn matrix_decoding_errors() {
        let m = fp(251);
        assert!(matches!(
            decode_matrix(&[1, 0xFB, 0, 1], 2, m),
            Err(WireError::OutOfRangeElement { value: 251, p: 251 })
        ));
        assert!(matches!(
            decode_matrix(&[1, 0, 0], 2, m),
            Err(WireError::BadLength { expected: 4, got: 3 })
        ));
        assert!(matches!(matrix_from_hex("zz", 1, m), Err(WireError::Hex(_))));
    }

    #[test]
    fn witness_frame_layout() {
        let s = Matrix::identity(fp(251), 8);
        let frame = Message::Witness(s.clone()).to_frame().unwrap();
        assert_eq!(frame.len(), HEADER_LEN + 64);
        assert_eq!(&frame[..6], &[0x5A, 0x4B, 0x50, 0x31, 0x01, 0x03]);
        assert_eq!(&frame[6..10], &64u32.to_le_bytes());
    }

    #[test]
    fn header_errors() {
        assert!(matches!(
            parse_frame(&mut &[0u8; 12][..]),
            Err(WireError::BadMagic([0, 0, 0, 0]))
        ));
        let mut f = frame_message(MessageType::Witness, &[1, 2]).unwrap();
        f[4] = 2;
        assert!(matches!(parse_frame_bytes(&f), Err(WireError::BadVersion(2))));
        f[4] = 1;
        f[5] = 0x08;
        assert!(matches!(parse_frame_bytes(&f), Err(WireError::UnknownType(0x08))));
        let mut big = frame_message(MessageType::Witness, &[]).unwrap();
        big[6..10].copy_from_slice(&(MAX_PAYLOAD as u32).to_le_bytes());
        assert!(matches!(parse_frame_bytes(&big), Err(WireError::PayloadTooLarge(_))));
        let short = frame_message(MessageType::Witness, &[1, 2, 3]).unwrap();
        assert!(matches!(parse_frame(&mut &short[..12]), Err(WireError::Truncated)));
        assert!(matches!(parse_frame_bytes(&short[..5]), Err(WireError::Truncated)));
        assert!(matches!(
            frame_message(MessageType::Witness, &vec![0; MAX_PAYLOAD]),
            Err(WireError::PayloadTooLarge(_))
        ));
    }

    #[test]
    fn challenge_payload_is_bit_then_matrix() {
        let m = fp(251);
        let q = Matrix::from_rows(m, &[[5, 6], [7, 8]]).unwrap();
        let msg = Message::Challenge {
            bit: ChallengeBit::One,
            question: q.clone(),
        };
        assert_eq!(msg.encode_payload().unwrap(), vec![1, 5, 6, 7, 8]);
        let frame = msg.to_frame().unwrap();
        let (t, payload, rest) = parse_frame_bytes(&frame).unwrap();
        assert!(rest.is_empty());
        assert_eq!(Message::decode(t, payload, 2, m).unwrap(), msg);
        assert!(matches!(
            Message::decode(MessageType::Challenge, &[2, 5, 6, 7, 8], 2, m),
            Err(WireError::Malformed(_))
        ));
    }

    #[test]
    fn stream_parser_leaves_remainder() {
        let a = frame_message(MessageType::RoundResult, &[0, 0, 1]).unwrap();
        let b = frame_message(MessageType::Error, &[3, b'x']).unwrap();
        let joined = [a.clone(), b.clone()].concat();
        let mut cursor = &joined[..];
        assert_eq!(parse_frame(&mut cursor).unwrap().0, MessageType::RoundResult);
        assert_eq!(cursor, &b[..]);
    }

    #[test]
    fn hello_round_trip_and_validation() {
        let m = fp(251);
        let hello = Hello {
            id: "alice".into(),
            fingerprint: [9; 8],
            public_key: vec![1, 2, 3, 4],
        };
        let msg = Message::VerifierHello {
            hello: hello.clone(),
            rounds: 20,
        };
        let payload = msg.encode_payload().unwrap();
        assert_eq!(payload[0], 5);
        assert_eq!(&payload[payload.len() - 2..], &[20, 0]);
        assert_eq!(
            Message::decode(MessageType::VerifierHello, &payload, 2, m).unwrap(),
            msg
        );
        // a key for a different dimension has the wrong length
        assert!(matches!(
            Message::decode(MessageType::ProverHello, &payload[..payload.len() - 2], 3, m),
            Err(WireError::BadLength { .. })
        ));
        let long = Hello {
            id: "x".repeat(300),
            ..hello
        };
        assert!(Message::ProverHello(long).encode_payload().is_err());
    }
}
