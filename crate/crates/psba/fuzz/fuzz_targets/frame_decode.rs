//! Frame decoding must be total, and accepted frames must re-encode to
//! the identical byte string (decode is a right inverse of encode).

#![no_main]

use libfuzzer_sys::fuzz_target;
use psba::protocol::{decode_frame, encode_frame};

fuzz_target!(|data: &[u8]| {
    if let Ok(payload) = decode_frame(data) {
        let reencoded = encode_frame(payload).expect("decoded payload fits a frame");
        assert_eq!(reencoded, data);
    }
});
