use std::io::Write;

use flate2::write::DeflateEncoder;
use flate2::Compression;

use super::MetricId;
use crate::{Error, Result, Scalar};

/// Inputs shorter than this many bytes are rejected.
pub const MIN_COMPRESSION_BYTES: usize = 32;
pub const DEFAULT_DEFLATE_LEVEL: u32 = 6;

/// Raw DEFLATE output length at the given level.
pub fn deflate_len(bytes: &[u8], level: u32) -> usize {
    let mut enc = DeflateEncoder::new(Vec::with_capacity(bytes.len() / 2 + 16), Compression::new(level));
    enc.write_all(bytes).expect("writing to Vec cannot fail");
    enc.finish().expect("writing to Vec cannot fail").len()
}

/// Original bytes over DEFLATE-compressed bytes. Higher means more redundant.
pub fn compression_ratio<F: Scalar>(bytes: &[u8], level: u32) -> Result<F> {
    if bytes.len() < MIN_COMPRESSION_BYTES {
        return Err(Error::degenerate(
            MetricId::CompressionRatio,
            format!("{} bytes, need {MIN_COMPRESSION_BYTES}", bytes.len()),
        ));
    }
    if level > 9 {
        return Err(Error::Config(format!("DEFLATE level {level} outside 0..=9")));
    }
    Ok(F::count(bytes.len()) / F::count(deflate_len(bytes, level)))
}
