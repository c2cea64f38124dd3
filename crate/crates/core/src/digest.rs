//! Stable identifiers for inference configurations.

use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use crate::protocol::{Params, Scalar};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

fn push_json_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Compact JSON with keys in sorted order and numbers in shortest
/// round-trip form (`0.5`, `3.0`, `1e-7`). Equal maps give equal strings.
pub fn canonical_params(params: &Params) -> String {
    let mut out = String::from("{");
    for (i, (k, v)) in params.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_json_string(&mut out, k);
        out.push(':');
        match v {
            Scalar::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Scalar::Number(x) => {
                // -0 and 0 describe the same setting
                let x = if *x == 0.0 { 0.0 } else { *x };
                let _ = write!(out, "{x:?}");
            }
            Scalar::Text(s) => push_json_string(&mut out, s),
        }
    }
    out.push('}');
    out
}

/// 16 lowercase hex digits of FNV-1a over [`canonical_params`].
pub fn config_digest(params: &Params) -> String {
    format!("{:016x}", fnv1a64(canonical_params(params).as_bytes()))
}
