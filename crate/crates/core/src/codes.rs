//! CSS code constructions: hypergraph products of classical codes and
//! bivariate bicycle codes from circulant polynomials.
//!
//! Every constructor re-verifies the CSS commutation condition
//! `hx · hzᵀ = 0` and derives the logical count `k` from GF(2) ranks.

use std::fmt::{self, Display, Formatter};

use serde::{Deserialize, Serialize};

use crate::gf2::BinaryMatrix;

/// Construction family a code came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodeFamily {
    Hgp,
    Bb,
    Custom,
}

impl Display for CodeFamily {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hgp => write!(f, "HGP"),
            Self::Bb => write!(f, "BB"),
            Self::Custom => write!(f, "custom"),
        }
    }
}

/// A CSS stabilizer code given by its X and Z parity checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CssCode {
    pub hx: BinaryMatrix,
    pub hz: BinaryMatrix,
    /// Data qubit count (columns of both checks).
    pub n: usize,
    /// X stabilizer count (rows of `hx`).
    pub m_x: usize,
    /// Z stabilizer count (rows of `hz`).
    pub m_z: usize,
    /// Logical qubit count, `n - rank(hx) - rank(hz)`.
    pub k: usize,
    pub family: CodeFamily,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeError {
    ColumnMismatch { hx_cols: usize, hz_cols: usize },
    NotCommuting { x_row: usize, z_row: usize },
    EmptyMatrix,
    ExponentOutOfRange { term: (usize, usize), l: usize, m: usize },
    DuplicateTerm { term: (usize, usize) },
    EmptyTerms,
    ZeroGroupDimension,
}

impl Display for CodeError {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::ColumnMismatch { hx_cols, hz_cols } => {
                write!(f, "hx has {hx_cols} columns but hz has {hz_cols}")
            }
            Self::NotCommuting { x_row, z_row } => {
                write!(f, "checks do not commute: hx row {x_row} anticommutes with hz row {z_row}")
            }
            Self::EmptyMatrix => write!(f, "classical parity check must be nonzero"),
            Self::ExponentOutOfRange { term, l, m } => {
                write!(f, "term x^{} y^{} outside [0,{l}) x [0,{m})", term.0, term.1)
            }
            Self::DuplicateTerm { term } => {
                write!(f, "duplicate polynomial term x^{} y^{}", term.0, term.1)
            }
            Self::EmptyTerms => write!(f, "polynomial term list is empty"),
            Self::ZeroGroupDimension => write!(f, "group dimensions l, m must be >= 1"),
        }
    }
}

impl std::error::Error for CodeError {}

impl CssCode {
    /// Wrap a pair of parity checks, verifying the CSS commutation
    /// condition and deriving `k` from ranks.
    pub fn new(hx: BinaryMatrix, hz: BinaryMatrix, family: CodeFamily) -> Result<Self, CodeError> {
        if hx.cols() != hz.cols() {
            return Err(CodeError::ColumnMismatch { hx_cols: hx.cols(), hz_cols: hz.cols() });
        }
        let product = hx.mul(&hz.transpose());
        if !product.is_zero() {
            for r in 0..product.rows() {
                for c in 0..product.cols() {
                    if product.get(r, c) {
                        return Err(CodeError::NotCommuting { x_row: r, z_row: c });
                    }
                }
            }
        }
        let n = hx.cols();
        let k = n - hx.rank() - hz.rank();
        Ok(Self { n, m_x: hx.rows(), m_z: hz.rows(), k, hx, hz, family })
    }

    /// Total stabilizer count `m = m_x + m_z`.
    pub fn m(&self) -> usize {
        self.m_x + self.m_z
    }

    /// Maximum row weight of `hx`.
    pub fn w_max_x(&self) -> usize {
        (0..self.m_x).map(|r| self.hx.row_weight(r)).max().unwrap_or(0)
    }

    /// Maximum row weight of `hz`.
    pub fn w_max_z(&self) -> usize {
        (0..self.m_z).map(|r| self.hz.row_weight(r)).max().unwrap_or(0)
    }

    /// Short label like `[[225,9]]` (distance is not computed).
    pub fn label(&self) -> String {
        format!("[[{},{}]]", self.n, self.k)
    }
}

/// Stabilizer kind tag. Z checks are plain CX circuits; X checks are the
/// Hadamard-framed variant. Only the tag is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StabKind {
    X,
    Z,
}

impl Display for StabKind {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Self::X => write!(f, "X"),
            Self::Z => write!(f, "Z"),
        }
    }
}

/// One stabilizer: a parity-check row with its support read off.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stabilizer {
    pub kind: StabKind,
    /// Ordinal within its kind (row index of the check matrix).
    pub index: usize,
    /// Sorted data-qubit ids.
    pub support: Vec<usize>,
    pub weight: usize,
}

/// Read all stabilizers off the parity checks, X block first.
pub fn stabilizers_of(code: &CssCode) -> Vec<Stabilizer> {
    let mut out = Vec::with_capacity(code.m());
    for r in 0..code.m_x {
        let support = code.hx.row_support(r);
        out.push(Stabilizer { kind: StabKind::X, index: r, weight: support.len(), support });
    }
    for r in 0..code.m_z {
        let support = code.hz.row_support(r);
        out.push(Stabilizer { kind: StabKind::Z, index: r, weight: support.len(), support });
    }
    out
}

/// Hypergraph product of two classical parity checks
/// `h1: r1 x n1`, `h2: r2 x n2`:
///
/// ```text
/// hx = [ h1 ⊗ I_n2 | I_r1 ⊗ h2ᵀ ]      (r1·n2 x n)
/// hz = [ I_n1 ⊗ h2 | h1ᵀ ⊗ I_r2 ]      (n1·r2 x n)
/// n  = n1·n2 + r1·r2
/// ```
pub fn hgp_construct(h1: &BinaryMatrix, h2: &BinaryMatrix) -> Result<CssCode, CodeError> {
    if h1.is_zero() || h2.is_zero() {
        return Err(CodeError::EmptyMatrix);
    }
    let (r1, n1) = (h1.rows(), h1.cols());
    let (r2, n2) = (h2.rows(), h2.cols());
    let hx = h1.kron(&BinaryMatrix::identity(n2)).hstack(&BinaryMatrix::identity(r1).kron(&h2.transpose()));
    let hz = BinaryMatrix::identity(n1).kron(h2).hstack(&h1.transpose().kron(&BinaryMatrix::identity(r2)));
    debug_assert_eq!(hx.cols(), n1 * n2 + r1 * r2);
    CssCode::new(hx, hz, CodeFamily::Hgp)
}

/// Bivariate bicycle polynomial preset, as it appears in the config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BbPreset {
    pub l: usize,
    pub m: usize,
    pub a: Vec<(usize, usize)>,
    pub b: Vec<(usize, usize)>,
}

/// Bivariate bicycle code over `Z_l x Z_m`. With `x`, `y` the cyclic
/// shift matrices, `A = Σ xⁱyʲ` over `a_terms`, `B` likewise, and
/// `hx = [A | B]`, `hz = [Bᵀ | Aᵀ]`, `n = 2·l·m`.
pub fn bb_construct(
    l: usize,
    m: usize,
    a_terms: &[(usize, usize)],
    b_terms: &[(usize, usize)],
) -> Result<CssCode, CodeError> {
    if l == 0 || m == 0 {
        return Err(CodeError::ZeroGroupDimension);
    }
    let a = circulant_sum(l, m, a_terms)?;
    let b = circulant_sum(l, m, b_terms)?;
    let hx = a.hstack(&b);
    let hz = b.transpose().hstack(&a.transpose());
    CssCode::new(hx, hz, CodeFamily::Bb)
}

/// `Σ xⁱyʲ` over the term list, an `lm x lm` permutation-sum matrix.
fn circulant_sum(l: usize, m: usize, terms: &[(usize, usize)]) -> Result<BinaryMatrix, CodeError> {
    if terms.is_empty() {
        return Err(CodeError::EmptyTerms);
    }
    for (pos, &term) in terms.iter().enumerate() {
        if term.0 >= l || term.1 >= m {
            return Err(CodeError::ExponentOutOfRange { term, l, m });
        }
        if terms[..pos].contains(&term) {
            return Err(CodeError::DuplicateTerm { term });
        }
    }
    let dim = l * m;
    let mut out = BinaryMatrix::zeros(dim, dim);
    for &(i, j) in terms {
        for row_l in 0..l {
            for row_m in 0..m {
                let row = row_l * m + row_m;
                let col = (row_l + i) % l * m + (row_m + j) % m;
                out.set(row, col, true);
            }
        }
    }
    Ok(out)
}

/// Named code presets used throughout the experiments.
pub mod presets {
    use super::*;

    /// 9x12 full-rank parity check of a [12,3,6] classical code. The
    /// hypergraph product with itself gives the [[225,9]] code with
    /// 108 + 108 stabilizers.
    pub fn seed_12_3_6() -> BinaryMatrix {
        BinaryMatrix::parse_pcm(include_str!("../fixtures/h12_3_6.pcm"))
            .expect("embedded fixture parses")
    }

    /// 15x20 full-rank parity check of a [20,5,8] classical code, the
    /// seed of the [[625,25]] hypergraph product.
    pub fn seed_20_5_8() -> BinaryMatrix {
        BinaryMatrix::parse_pcm(include_str!("../fixtures/h20_5_8.pcm"))
            .expect("embedded fixture parses")
    }

    /// [[225,9]] hypergraph product code.
    pub fn hgp_225() -> CssCode {
        let h = seed_12_3_6();
        hgp_construct(&h, &h).expect("preset construction is valid")
    }

    /// [[625,25]] hypergraph product code.
    pub fn hgp_625() -> CssCode {
        let h = seed_20_5_8();
        hgp_construct(&h, &h).expect("preset construction is valid")
    }

    /// Toy [[5,1]] hypergraph product of two length-2 repetition checks.
    pub fn hgp_5() -> CssCode {
        let h = BinaryMatrix::from_rows(&[vec![1, 1]]);
        hgp_construct(&h, &h).expect("preset construction is valid")
    }

    /// Polynomials of the [[144,12]] bivariate bicycle code:
    /// `A = x³ + y + y²`, `B = y³ + x + x²` over `Z_12 x Z_6`.
    pub fn bb_144_preset() -> BbPreset {
        BbPreset {
            l: 12,
            m: 6,
            a: vec![(3, 0), (0, 1), (0, 2)],
            b: vec![(0, 3), (1, 0), (2, 0)],
        }
    }

    /// [[144,12]] bivariate bicycle code.
    pub fn bb_144() -> CssCode {
        let p = bb_144_preset();
        bb_construct(p.l, p.m, &p.a, &p.b).expect("preset construction is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::gf2_rank;

    #[test]
    fn hgp_of_repetition_checks_is_the_five_qubit_patch() {
        let code = presets::hgp_5();
        assert_eq!(code.n, 5);
        assert_eq!(code.m_x, 2);
        assert_eq!(code.m_z, 2);
        assert_eq!(code.k, 1);
    }

    #[test]
    fn hgp_225_parameters() {
        let code = presets::hgp_225();
        assert_eq!(code.n, 225);
        assert_eq!(code.m_x, 108);
        assert_eq!(code.m_z, 108);
        assert_eq!(code.k, 9);
        assert_eq!(code.m(), 216);
    }

    #[test]
    fn hgp_625_parameters() {
        let code = presets::hgp_625();
        assert_eq!(code.n, 625);
        assert_eq!(code.m_x, 300);
        assert_eq!(code.m_z, 300);
        assert_eq!(code.k, 25);
    }

    #[test]
    fn bb_degenerate_single_group_element() {
        let code = bb_construct(1, 1, &[(0, 0)], &[(0, 0)]).unwrap();
        assert_eq!(code.n, 2);
        assert_eq!(code.hx.row_support(0), vec![0, 1]);
        assert_eq!(code.hz.row_support(0), vec![0, 1]);
    }

    #[test]
    fn bb_144_parameters() {
        let code = presets::bb_144();
        assert_eq!(code.n, 144);
        assert_eq!(code.m_x, 72);
        assert_eq!(code.m_z, 72);
        assert_eq!(code.k, 12);
    }

    #[test]
    fn bb_144_stabilizer_weights_all_six() {
        let code = presets::bb_144();
        for stab in stabilizers_of(&code) {
            assert_eq!(stab.weight, 6);
        }
    }

    #[test]
    fn bb_rejects_out_of_range_exponent() {
        let err = bb_construct(2, 3, &[(2, 0)], &[(0, 0)]).unwrap_err();
        assert_eq!(err, CodeError::ExponentOutOfRange { term: (2, 0), l: 2, m: 3 });
    }

    #[test]
    fn bb_rejects_duplicate_terms() {
        let err = bb_construct(2, 3, &[(1, 1), (1, 1)], &[(0, 0)]).unwrap_err();
        assert_eq!(err, CodeError::DuplicateTerm { term: (1, 1) });
    }

    #[test]
    fn hgp_rejects_zero_matrix() {
        let z = BinaryMatrix::zeros(2, 3);
        let h = BinaryMatrix::from_rows(&[vec![1, 1]]);
        assert_eq!(hgp_construct(&z, &h).unwrap_err(), CodeError::EmptyMatrix);
    }

    #[test]
    fn stabilizers_read_off_rows() {
        let hx = BinaryMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]]);
        let hz = BinaryMatrix::from_rows(&[vec![1, 1, 1]]);
        let code = CssCode::new(hx, hz, CodeFamily::Custom).unwrap();
        let stabs = stabilizers_of(&code);
        assert_eq!(stabs[0].support, vec![0, 1]);
        assert_eq!(stabs[0].kind, StabKind::X);
        assert_eq!(stabs[1].support, vec![1, 2]);
        assert_eq!(stabs[2].kind, StabKind::Z);
        assert_eq!(stabs[2].support, vec![0, 1, 2]);
    }

    #[test]
    fn non_commuting_pair_is_rejected() {
        let hx = BinaryMatrix::from_rows(&[vec![1, 1, 0]]);
        let hz = BinaryMatrix::from_rows(&[vec![1, 0, 0]]);
        let err = CssCode::new(hx, hz, CodeFamily::Custom).unwrap_err();
        assert_eq!(err, CodeError::NotCommuting { x_row: 0, z_row: 0 });
    }

    #[test]
    fn hgp_225_stabilizer_weight_bound() {
        let h = presets::seed_12_3_6();
        let max_row = (0..h.rows()).map(|r| h.row_weight(r)).max().unwrap();
        let max_col = (0..h.cols()).map(|c| h.col_weight(c)).max().unwrap();
        let code = presets::hgp_225();
        let stabs = stabilizers_of(&code);
        assert_eq!(stabs.len(), 216);
        for stab in stabs {
            assert!(stab.weight <= max_row + max_col);
        }
    }

    #[test]
    fn seed_fixtures_are_full_rank() {
        assert_eq!(gf2_rank(&presets::seed_12_3_6()), 9);
        assert_eq!(gf2_rank(&presets::seed_20_5_8()), 15);
    }
}
