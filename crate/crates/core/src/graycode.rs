//! Binary-reflected Gray code and the stripe patterns that project it.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const MAX_BITS: u32 = 16;

fn check_range(value: u32, num_bits: u32, what: &str) -> Result<()> {
    if num_bits == 0 || num_bits > MAX_BITS {
        return Err(Error::Domain(format!("num_bits must be in 1..={MAX_BITS}, got {num_bits}")));
    }
    if u64::from(value) >= 1u64 << num_bits {
        return Err(Error::Domain(format!(
            "{what} {value} out of range for {num_bits}-bit code"
        )));
    }
    Ok(())
}

#[inline]
fn gray(index: u32) -> u32 {
    index ^ (index >> 1)
}

#[inline]
fn gray_inverse(mut code: u32) -> u32 {
    let mut shift = 1;
    while shift < 32 {
        code ^= code >> shift;
        shift <<= 1;
    }
    code
}

pub fn encode_gray(index: u32, num_bits: u32) -> Result<u32> {
    check_range(index, num_bits, "index")?;
    Ok(gray(index))
}

pub fn decode_gray(code: u32, num_bits: u32) -> Result<u32> {
    check_range(code, num_bits, "code")?;
    Ok(gray_inverse(code))
}

/// Binary patterns needed to give `columns` columns distinct codes:
/// `ceil(log2 c)`.
pub fn patterns_required(columns: u64) -> u32 {
    match columns {
        0 | 1 => 0,
        c => 64 - (c - 1).leading_zeros(),
    }
}

/// Timestamps a point-scanning projector needs for the same columns: one
/// per column.
pub fn point_scan_timestamps(columns: u64) -> u64 {
    columns
}

/// How the code covers the projector and in which order bit planes are
/// projected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrayCodeConfig {
    num_bits: u32,
    column_offset: usize,
    msb_first: bool,
}

impl GrayCodeConfig {
    pub fn new(num_bits: u32, column_offset: usize, msb_first: bool) -> Result<Self> {
        if num_bits == 0 || num_bits > MAX_BITS {
            return Err(Error::Config(format!(
                "num_bits must be in 1..={MAX_BITS}, got {num_bits}"
            )));
        }
        Ok(Self {
            num_bits,
            column_offset,
            msb_first,
        })
    }

    /// MSB-first code starting at projector column 0.
    pub fn with_bits(num_bits: u32) -> Result<Self> {
        Self::new(num_bits, 0, true)
    }

    pub fn num_bits(&self) -> u32 {
        self.num_bits
    }

    pub fn num_columns(&self) -> usize {
        1usize << self.num_bits
    }

    pub fn column_offset(&self) -> usize {
        self.column_offset
    }

    pub fn msb_first(&self) -> bool {
        self.msb_first
    }

    pub fn check_projector_width(&self, proj_width: usize) -> Result<()> {
        if self.column_offset + self.num_columns() > proj_width {
            return Err(Error::Config(format!(
                "code covers columns {}..{} but the projector is {} columns wide",
                self.column_offset,
                self.column_offset + self.num_columns(),
                proj_width
            )));
        }
        Ok(())
    }

    /// Bit of the Gray code carried by the `plane`-th projected pattern.
    #[inline]
    pub fn bit_of_plane(&self, plane: usize) -> u32 {
        if self.msb_first {
            self.num_bits - 1 - plane as u32
        } else {
            plane as u32
        }
    }

    /// Relative code index of a projector column, `None` outside the covered
    /// range.
    #[inline]
    pub fn column_code(&self, column: usize) -> Option<u32> {
        column
            .checked_sub(self.column_offset)
            .filter(|&c| c < self.num_columns())
            .map(|c| c as u32)
    }

    /// Value of pattern `plane` at projector column `column`.
    #[inline]
    pub fn pattern_value(&self, plane: usize, column: usize) -> bool {
        self.column_code(column)
            .is_some_and(|c| (gray(c) >> self.bit_of_plane(plane)) & 1 == 1)
    }

    /// Packs bits given in projection order and Gray-decodes them to a
    /// column index in `[0, c)`.
    pub fn stack_to_code(&self, bits: &[bool]) -> Result<u32> {
        if bits.len() != self.num_bits as usize {
            return Err(Error::Domain(format!(
                "expected {} bits, got {}",
                self.num_bits,
                bits.len()
            )));
        }
        let packed = bits
            .iter()
            .enumerate()
            .fold(0u32, |acc, (plane, &b)| acc | (u32::from(b) << self.bit_of_plane(plane)));
        Ok(gray_inverse(packed))
    }
}

/// The `N` stripe images of one code cycle, in projection order.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    config: GrayCodeConfig,
    patterns: Vec<Grid<bool>>,
}

impl PatternSet {
    pub fn config(&self) -> &GrayCodeConfig {
        &self.config
    }

    pub fn patterns(&self) -> &[Grid<bool>] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.patterns[0].dims()
    }
}

pub fn make_pattern_set(config: GrayCodeConfig, proj_dims: (usize, usize)) -> Result<PatternSet> {
    config.check_projector_width(proj_dims.0)?;
    let patterns = (0..config.num_bits as usize)
        .map(|plane| {
            let row: Vec<bool> = (0..proj_dims.0)
                .map(|x| config.pattern_value(plane, x))
                .collect();
            Grid::from_fn(proj_dims.0, proj_dims.1, |x, _| row[x])
        })
        .collect();
    Ok(PatternSet { config, patterns })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Brute-force Gray sequence: walk 0..2^n flipping the lowest bit that
    /// yields a code not seen yet (the reflected construction).
    fn brute_force_sequence(num_bits: u32) -> Vec<u32> {
        let n = 1usize << num_bits;
        let mut seen = vec![false; n];
        let mut seq = vec![0u32];
        seen[0] = true;
        for _ in 1..n {
            let last = *seq.last().unwrap();
            let next = (0..num_bits)
                .map(|b| last ^ (1 << b))
                .find(|&c| !seen[c as usize])
                .unwrap();
            seen[next as usize] = true;
            seq.push(next);
        }
        seq
    }

    #[test]
    fn encode_matches_brute_force() {
        for bits in 1..=8 {
            let oracle = brute_force_sequence(bits);
            for (i, &c) in oracle.iter().enumerate() {
                assert_eq!(encode_gray(i as u32, bits).unwrap(), c);
            }
        }
        let oracle = brute_force_sequence(4);
        assert_eq!(oracle[0], 0);
        assert_eq!(oracle[5], 7);
        assert_eq!(oracle[2], 3);
    }

    #[test]
    fn spot_values() {
        assert_eq!(encode_gray(0, 4).unwrap(), 0);
        assert_eq!(encode_gray(5, 4).unwrap(), 7);
        assert_eq!(encode_gray(2, 4).unwrap(), 3);
        assert_eq!(decode_gray(0, 4).unwrap(), 0);
        assert_eq!(decode_gray(7, 4).unwrap(), 5);
    }

    #[test]
    fn range_errors() {
        assert!(matches!(encode_gray(16, 4), Err(Error::Domain(_))));
        assert!(matches!(decode_gray(16, 4), Err(Error::Domain(_))));
        assert!(encode_gray(0, 0).is_err());
        assert!(encode_gray(0, 17).is_err());
        assert!(encode_gray(65535, 16).is_ok());
    }

    #[test]
    fn round_trip_all_small_codes() {
        for bits in 1..=12 {
            for k in 0..(1u32 << bits) {
                assert_eq!(decode_gray(encode_gray(k, bits).unwrap(), bits).unwrap(), k);
            }
        }
    }

    #[test]
    fn stack_examples() {
        let cfg = GrayCodeConfig::with_bits(4).unwrap();
        assert_eq!(cfg.stack_to_code(&[false; 4]).unwrap(), 0);
        assert_eq!(cfg.stack_to_code(&[false, true, true, true]).unwrap(), 5);
        assert_eq!(cfg.stack_to_code(&[true, false, false, false]).unwrap(), 15);
        assert!(cfg.stack_to_code(&[true; 3]).is_err());
        // Enumerate every 4-bit code: 1000 is the code of exactly one column.
        let hits: Vec<u32> = (0..16).filter(|&i| gray(i) == 0b1000).collect();
        assert_eq!(hits, vec![15]);
    }

    #[test]
    fn lsb_first_ordering() {
        let cfg = GrayCodeConfig::new(4, 0, false).unwrap();
        assert_eq!(cfg.stack_to_code(&[true, true, true, false]).unwrap(), 5);
    }

    #[test]
    fn one_bit_pattern() {
        let cfg = GrayCodeConfig::with_bits(1).unwrap();
        let set = make_pattern_set(cfg, (2, 1)).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.patterns()[0].row(0), &[false, true]);
    }

    #[test]
    fn nine_bit_set_and_column_five() {
        let cfg = GrayCodeConfig::with_bits(9).unwrap();
        assert_eq!(make_pattern_set(cfg, (720, 4)).unwrap().len(), 9);

        let cfg = GrayCodeConfig::with_bits(4).unwrap();
        let set = make_pattern_set(cfg, (16, 1)).unwrap();
        let read: Vec<bool> = set.patterns().iter().map(|p| *p.get(5, 0)).collect();
        assert_eq!(read, vec![false, true, true, true]);
    }

    #[test]
    fn pattern_code_consistency_with_offset() {
        let cfg = GrayCodeConfig::new(5, 7, true).unwrap();
        let set = make_pattern_set(cfg, (50, 2)).unwrap();
        for x in 0..50 {
            let bits: Vec<bool> = set.patterns().iter().map(|p| *p.get(x, 1)).collect();
            match cfg.column_code(x) {
                Some(code) => assert_eq!(cfg.stack_to_code(&bits).unwrap(), code),
                None => assert!(bits.iter().all(|b| !b)),
            }
        }
        assert_eq!(cfg.column_code(7), Some(0));
        assert_eq!(cfg.column_code(38), Some(31));
        assert_eq!(cfg.column_code(39), None);
    }

    #[test]
    fn projector_too_narrow() {
        let cfg = GrayCodeConfig::new(9, 300, true).unwrap();
        assert!(matches!(make_pattern_set(cfg, (720, 1)), Err(Error::Config(_))));
    }

    #[test]
    fn encoding_efficiency() {
        for (c, n) in [(2u64, 1u32), (16, 4), (512, 9), (1024, 10), (720, 10), (1, 0)] {
            assert_eq!(patterns_required(c), n);
            assert_eq!(point_scan_timestamps(c), c);
        }
    }
}
