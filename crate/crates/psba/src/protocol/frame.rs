//! Length-prefixed message framing.
//!
//! A frame is one length byte followed by exactly that many payload
//! bytes. On the channel, frames travel as bits, most significant bit of
//! each byte first, one SCG per bit.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("empty frame: missing length byte")]
    MissingLength,
    #[error("frame truncated: length byte promises {expected} payload bytes, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("{0} trailing bytes after the payload")]
    TrailingBytes(usize),
    #[error("message of {0} bytes exceeds the one-byte length field")]
    MessageTooLong(usize),
    #[error("bit stream of {0} bits is not a whole number of bytes")]
    RaggedBitStream(usize),
}

/// [length][payload]; messages are capped at 255 bytes by the field width.
pub fn encode_frame(message: &[u8]) -> Result<Vec<u8>, FrameError> {
    let len = message.len();
    if len > 255 {
        return Err(FrameError::MessageTooLong(len));
    }
    let mut frame = Vec::with_capacity(1 + len);
    frame.push(len as u8);
    frame.extend_from_slice(message);
    Ok(frame)
}

/// Strict inverse of [`encode_frame`]: the input must be exactly one
/// well-formed frame.
pub fn decode_frame(frame: &[u8]) -> Result<&[u8], FrameError> {
    let (&len_byte, payload) = frame.split_first().ok_or(FrameError::MissingLength)?;
    let expected = usize::from(len_byte);
    match payload.len() {
        got if got < expected => Err(FrameError::Truncated { expected, got }),
        got if got > expected => Err(FrameError::TrailingBytes(got - expected)),
        _ => Ok(payload),
    }
}

/// MSB-first bit expansion.
pub fn bits_from_bytes(bytes: &[u8]) -> Vec<bool> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).map(move |i| (b >> (7 - i)) & 1 == 1))
        .collect()
}

/// MSB-first bit packing; `bits.len()` must be a multiple of 8 (pad
/// framing guarantees this on every decode path).
pub fn bytes_from_bits(bits: &[bool]) -> Vec<u8> {
    debug_assert_eq!(bits.len() % 8, 0);
    bits.chunks(8)
        .map(|chunk| chunk.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b)))
        .collect()
}

/// The full framed bit stream for a message.
pub fn frame_bits(message: &[u8]) -> Result<Vec<bool>, FrameError> {
    Ok(bits_from_bytes(&encode_frame(message)?))
}

/// Parses a framed bit stream back into the payload bytes.
pub fn message_from_bits(bits: &[bool]) -> Result<Vec<u8>, FrameError> {
    if bits.len() % 8 != 0 {
        return Err(FrameError::RaggedBitStream(bits.len()));
    }
    let bytes = bytes_from_bits(bits);
    decode_frame(&bytes).map(<[u8]>::to_vec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_message_frames_to_56_bits() {
        let bits = frame_bits(b"FASTER").unwrap();
        assert_eq!(bits.len(), 56);
        // length byte 6: 00000110
        assert_eq!(
            &bits[..8],
            &[false, false, false, false, false, true, true, false]
        );
        // 'F' = 0x46: 01000110
        assert_eq!(
            &bits[8..16],
            &[false, true, false, false, false, true, true, false]
        );
        assert_eq!(message_from_bits(&bits).unwrap(), b"FASTER");
    }

    #[test]
    fn empty_message_is_a_single_zero_byte() {
        let frame = encode_frame(b"").unwrap();
        assert_eq!(frame, vec![0]);
        assert_eq!(frame_bits(b"").unwrap().len(), 8);
    }

    #[test]
    fn oversized_message_is_rejected() {
        let long = vec![b'x'; 300];
        assert_eq!(
            encode_frame(&long).unwrap_err(),
            FrameError::MessageTooLong(300)
        );
        assert!(encode_frame(&vec![b'x'; 255]).is_ok());
    }

    #[test]
    fn malformed_frames_are_rejected() {
        assert_eq!(decode_frame(&[]).unwrap_err(), FrameError::MissingLength);
        assert_eq!(
            decode_frame(&[3, 1, 2]).unwrap_err(),
            FrameError::Truncated {
                expected: 3,
                got: 2
            }
        );
        assert_eq!(
            decode_frame(&[1, 9, 9]).unwrap_err(),
            FrameError::TrailingBytes(1)
        );
        assert_eq!(
            message_from_bits(&[true; 12]).unwrap_err(),
            FrameError::RaggedBitStream(12)
        );
    }

    proptest! {
        #[test]
        fn roundtrip(message in proptest::collection::vec(any::<u8>(), 0..=255)) {
            let frame = encode_frame(&message).unwrap();
            prop_assert_eq!(decode_frame(&frame).unwrap(), &message[..]);
            let bits = bits_from_bytes(&frame);
            prop_assert_eq!(bytes_from_bits(&bits), frame);
            prop_assert_eq!(message_from_bits(&bits).unwrap(), message);
        }

        /// decode accepts exactly the encodings: any accepted input equals
        /// the re-encoding of its payload.
        #[test]
        fn decode_is_inverse_on_accepted_inputs(data in proptest::collection::vec(any::<u8>(), 0..300)) {
            if let Ok(payload) = decode_frame(&data) {
                prop_assert_eq!(encode_frame(payload).unwrap(), data);
            }
        }
    }
}
