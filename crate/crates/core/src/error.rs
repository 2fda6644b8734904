use alloc::string::String;

/// Errors raised by the core algorithms.
///
/// Per-pixel failures (an unmatched code, a non-positive disparity) are never
/// reported here; they invalidate the pixel instead.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected {expected_width}x{expected_height}, got {width}x{height}")]
    Dimensions {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },
    #[error("integrity error: code {code} appears more than once in row {row}")]
    DuplicateCode { row: usize, code: u32 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimensions {
            expected_width: expected.0,
            expected_height: expected.1,
            width: actual.0,
            height: actual.1,
        })
    }
}
