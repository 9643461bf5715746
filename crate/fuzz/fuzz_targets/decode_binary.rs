#![no_main]

use libfuzzer_sys::fuzz_target;
use netdiff::netdata::{decode_binary, encode_binary, Group};

fuzz_target!(|data: &[u8]| {
    if let Ok(stack) = decode_binary(data, Group::First) {
        // anything accepted must re-encode to the same bytes
        assert_eq!(encode_binary(&stack), data);
    }
});
