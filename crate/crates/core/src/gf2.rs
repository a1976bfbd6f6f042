//! Dense bit-packed GF(2) matrices and the linear algebra the code
//! constructions need: Kronecker products, stacking, multiplication,
//! rank, and the `.pcm` text format.

use std::fmt::{self, Display, Formatter};

const WORD_BITS: usize = 64;

/// Dense GF(2) matrix, row-major, one `u64` word per 64 columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PcmError {
    MissingHeader,
    BadHeader(String),
    RowCountMismatch { expected: usize, found: usize },
    RowLengthMismatch { row: usize, expected: usize, found: usize },
    BadSymbol { row: usize, col: usize, symbol: char },
}

impl Display for PcmError {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingHeader => write!(f, "missing `rows cols` header line"),
            Self::BadHeader(line) => write!(f, "malformed header line: {line:?}"),
            Self::RowCountMismatch { expected, found } => {
                write!(f, "expected {expected} matrix rows, found {found}")
            }
            Self::RowLengthMismatch { row, expected, found } => {
                write!(f, "row {row} has {found} symbols, expected {expected}")
            }
            Self::BadSymbol { row, col, symbol } => {
                write!(f, "row {row}, column {col}: invalid symbol {symbol:?}")
            }
        }
    }
}

impl std::error::Error for PcmError {}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = cols.div_ceil(WORD_BITS).max(1);
        Self {
            rows,
            cols,
            words_per_row,
            bits: vec![0; rows * words_per_row],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out.set(i, i, true);
        }
        out
    }

    /// Build from explicit 0/1 rows. All rows must share one length.
    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut out = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged row {r}");
            for (c, &bit) in row.iter().enumerate() {
                assert!(bit <= 1, "non-binary entry at ({r}, {c})");
                out.set(r, c, bit == 1);
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols);
        let word = self.bits[row * self.words_per_row + col / WORD_BITS];
        word >> (col % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        assert!(row < self.rows && col < self.cols);
        let word = &mut self.bits[row * self.words_per_row + col / WORD_BITS];
        let mask = 1u64 << (col % WORD_BITS);
        if value {
            *word |= mask;
        } else {
            *word &= !mask;
        }
    }

    fn row_words(&self, row: usize) -> &[u64] {
        let start = row * self.words_per_row;
        &self.bits[start..start + self.words_per_row]
    }

    fn xor_row_into(&mut self, src: usize, dst: usize) {
        let (src, dst) = (src * self.words_per_row, dst * self.words_per_row);
        for w in 0..self.words_per_row {
            let v = self.bits[src + w];
            self.bits[dst + w] ^= v;
        }
    }

    pub fn row_weight(&self, row: usize) -> usize {
        self.row_words(row).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn col_weight(&self, col: usize) -> usize {
        (0..self.rows).filter(|&r| self.get(r, col)).count()
    }

    /// Total number of set bits.
    pub fn popcount(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Column indices of the set bits in `row`, ascending.
    pub fn row_support(&self, row: usize) -> Vec<usize> {
        (0..self.cols).filter(|&c| self.get(row, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    out.set(c, r, true);
                }
            }
        }
        out
    }

    /// Horizontal concatenation `[self | rhs]`.
    pub fn hstack(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "hstack row mismatch");
        let mut out = Self::zeros(self.rows, self.cols + rhs.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    out.set(r, c, true);
                }
            }
            for c in 0..rhs.cols {
                if rhs.get(r, c) {
                    out.set(r, self.cols + c, true);
                }
            }
        }
        out
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros(self.rows * rhs.rows, self.cols * rhs.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                if !self.get(r1, c1) {
                    continue;
                }
                for r2 in 0..rhs.rows {
                    for c2 in 0..rhs.cols {
                        if rhs.get(r2, c2) {
                            out.set(r1 * rhs.rows + r2, c1 * rhs.cols + c2, true);
                        }
                    }
                }
            }
        }
        out
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "mul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let dst = r * out.words_per_row;
            for c in 0..self.cols {
                if self.get(r, c) {
                    let src = c * rhs.words_per_row;
                    for w in 0..rhs.words_per_row {
                        out.bits[dst + w] ^= rhs.bits[src + w];
                    }
                }
            }
        }
        out
    }

    /// Rank over GF(2) by Gaussian elimination on a working copy.
    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        let mut rank = 0;
        for col in 0..work.cols {
            let pivot = (rank..work.rows).find(|&r| work.get(r, col));
            let Some(pivot) = pivot else { continue };
            if pivot != rank {
                for w in 0..work.words_per_row {
                    work.bits.swap(rank * work.words_per_row + w, pivot * work.words_per_row + w);
                }
            }
            for r in 0..work.rows {
                if r != rank && work.get(r, col) {
                    work.xor_row_into(rank, r);
                }
            }
            rank += 1;
            if rank == work.rows {
                break;
            }
        }
        rank
    }

    /// Parse the `.pcm` text format: a `rows cols` header line followed by
    /// `rows` lines of `cols` characters from {0,1}.
    pub fn parse_pcm(text: &str) -> Result<Self, PcmError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(PcmError::MissingHeader)?;
        let mut parts = header.split_whitespace();
        let (rows, cols) = match (parts.next(), parts.next(), parts.next()) {
            (Some(r), Some(c), None) => {
                let r = r.parse().map_err(|_| PcmError::BadHeader(header.into()))?;
                let c = c.parse().map_err(|_| PcmError::BadHeader(header.into()))?;
                (r, c)
            }
            _ => return Err(PcmError::BadHeader(header.into())),
        };
        let mut out = Self::zeros(rows, cols);
        let mut parsed = 0;
        for (r, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            if r >= rows {
                parsed += 1;
                continue;
            }
            let line = line.trim_end();
            if line.chars().count() != cols {
                return Err(PcmError::RowLengthMismatch {
                    row: r,
                    expected: cols,
                    found: line.chars().count(),
                });
            }
            for (c, symbol) in line.chars().enumerate() {
                match symbol {
                    '0' => {}
                    '1' => out.set(r, c, true),
                    _ => return Err(PcmError::BadSymbol { row: r, col: c, symbol }),
                }
            }
            parsed += 1;
        }
        if parsed != rows {
            return Err(PcmError::RowCountMismatch { expected: rows, found: parsed });
        }
        Ok(out)
    }

    /// Render in the `.pcm` text format, bit-exact with `parse_pcm`.
    pub fn to_pcm(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(if self.get(r, c) { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

/// Rank over GF(2); the input is untouched.
pub fn gf2_rank(m: &BinaryMatrix) -> usize {
    m.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_identity() {
        assert_eq!(gf2_rank(&BinaryMatrix::identity(3)), 3);
    }

    #[test]
    fn rank_of_zeros() {
        assert_eq!(gf2_rank(&BinaryMatrix::zeros(4, 7)), 0);
    }

    #[test]
    fn rank_of_seed_fixture_is_full() {
        let h = BinaryMatrix::parse_pcm(include_str!("../fixtures/h12_3_6.pcm")).unwrap();
        assert_eq!((h.rows(), h.cols()), (9, 12));
        assert_eq!(gf2_rank(&h), 9);
    }

    #[test]
    fn rank_matches_row_dependency() {
        // row 2 = row 0 + row 1
        let m = BinaryMatrix::from_rows(&[
            vec![1, 1, 0, 0],
            vec![0, 1, 1, 0],
            vec![1, 0, 1, 0],
        ]);
        assert_eq!(gf2_rank(&m), 2);
    }

    #[test]
    fn kron_with_identity_blocks() {
        let h = BinaryMatrix::from_rows(&[vec![1, 1]]);
        let k = h.kron(&BinaryMatrix::identity(2));
        assert_eq!((k.rows(), k.cols()), (2, 4));
        assert!(k.get(0, 0) && k.get(0, 2) && k.get(1, 1) && k.get(1, 3));
        assert_eq!(k.popcount(), 4);
    }

    #[test]
    fn mul_against_hand_computation() {
        let a = BinaryMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]]);
        let b = BinaryMatrix::from_rows(&[vec![1, 0], vec![1, 1], vec![0, 1]]);
        let c = a.mul(&b);
        assert_eq!(c, BinaryMatrix::from_rows(&[vec![0, 1], vec![1, 0]]));
    }

    #[test]
    fn pcm_round_trip_is_bit_exact() {
        let text = include_str!("../fixtures/h12_3_6.pcm");
        let h = BinaryMatrix::parse_pcm(text).unwrap();
        assert_eq!(h.to_pcm(), text);
    }

    #[test]
    fn pcm_rejects_bad_symbol() {
        let err = BinaryMatrix::parse_pcm("1 3\n012\n").unwrap_err();
        assert_eq!(err, PcmError::BadSymbol { row: 0, col: 2, symbol: '2' });
    }

    #[test]
    fn pcm_rejects_short_row() {
        let err = BinaryMatrix::parse_pcm("1 3\n01\n").unwrap_err();
        assert!(matches!(err, PcmError::RowLengthMismatch { .. }));
    }

    #[test]
    fn wide_matrix_crosses_word_boundary() {
        let mut m = BinaryMatrix::zeros(2, 130);
        m.set(0, 63, true);
        m.set(0, 64, true);
        m.set(1, 129, true);
        assert_eq!(m.row_weight(0), 2);
        assert_eq!(m.row_support(1), vec![129]);
        let t = m.transpose();
        assert!(t.get(63, 0) && t.get(64, 0) && t.get(129, 1));
    }
}
