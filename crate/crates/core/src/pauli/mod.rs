//! Exact algebra of n-qubit Pauli strings and real-weighted Pauli sums.
//!
//! A [`PauliSum`] stores a Hermitian operator `H = Σ c_w P_w` with real
//! coefficients. The Lie-algebra element it represents is `iH`; the
//! [`commutator`] returns the Hermitian `C` with `[A, B] = iC`, so nested
//! brackets stay real-coefficient.

mod dense;

pub use dense::{
    dense_pauli_string, frobenius_norm, hermitian_eigen, operator_norm, random_density_matrix,
    random_hermitian, random_unitary, skew_hermitian_exp, spectral_norm, to_dense, to_dense_with_cap,
    DenseMatrix, DEFAULT_DENSE_QUBIT_CAP,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Coefficients with magnitude below this are dropped after every operation.
pub const PRUNE_TOL: f64 = 1e-12;

/// Largest register a [`PauliWord`] can address.
pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PauliError {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },
    #[error("qubit count must be in 1..={MAX_QUBITS}, got {0}")]
    BadQubitCount(usize),
    #[error("invalid Pauli letter {0:?}")]
    BadLetter(char),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dense materialization capped at {cap} qubits, got {n}")]
    DenseCap { n: usize, cap: usize },
    #[error("eigensolver did not converge")]
    Eigensolver,
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn code(self) -> u128 {
        self as u128
    }

    fn from_code(code: u128) -> Pauli {
        match code & 3 {
            0 => Pauli::I,
            1 => Pauli::X,
            2 => Pauli::Y,
            _ => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl TryFrom<char> for Pauli {
    type Error = PauliError;

    fn try_from(c: char) -> Result<Self, Self::Error> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(PauliError::BadLetter(other)),
        }
    }
}

/// Power of `i`: 0 → +1, 1 → +i, 2 → −1, 3 → −i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_complex(self) -> nalgebra::Complex<f64> {
        use nalgebra::Complex;
        match self.0 {
            0 => Complex::new(1.0, 0.0),
            1 => Complex::new(0.0, 1.0),
            2 => Complex::new(-1.0, 0.0),
            _ => Complex::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// Tensor word over {I, X, Y, Z}, two bits per qubit.
///
/// Qubit 0 occupies the two most significant bits, so the derived ordering
/// is lexicographic in the letters (I < X < Y < Z) for words of equal
/// length. Encoding I=0, X=1, Y=2, Z=3 makes the product word a plain XOR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliWord(u128);

impl PauliWord {
    pub const IDENTITY: PauliWord = PauliWord(0);

    fn shift(qubit: usize) -> u32 {
        (126 - 2 * qubit) as u32
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<Self, PauliError> {
        if letters.is_empty() || letters.len() > MAX_QUBITS {
            return Err(PauliError::BadQubitCount(letters.len()));
        }
        let mut bits = 0u128;
        for (q, l) in letters.iter().enumerate() {
            bits |= l.code() << Self::shift(q);
        }
        Ok(PauliWord(bits))
    }

    /// Word with `letter` on each listed qubit and identity elsewhere.
    pub fn single_sites(sites: &[(usize, Pauli)]) -> Self {
        let mut bits = 0u128;
        for &(q, l) in sites {
            assert!(q < MAX_QUBITS, "qubit index {q} out of range");
            bits &= !(3u128 << Self::shift(q));
            bits |= l.code() << Self::shift(q);
        }
        PauliWord(bits)
    }

    pub fn letter(self, qubit: usize) -> Pauli {
        Pauli::from_code(self.0 >> Self::shift(qubit))
    }

    pub fn letters(self, n_qubits: usize) -> Vec<Pauli> {
        (0..n_qubits).map(|q| self.letter(q)).collect()
    }

    pub fn is_identity(self) -> bool {
        self.0 == 0
    }

    /// One past the highest qubit index carrying a non-identity letter.
    pub fn support_end(self) -> usize {
        if self.0 == 0 {
            0
        } else {
            MAX_QUBITS - (self.0.trailing_zeros() as usize) / 2
        }
    }

    /// Product `self · other` as (phase, word).
    pub fn mul(self, other: PauliWord) -> (Phase, PauliWord) {
        let word = PauliWord(self.0 ^ other.0);
        let mut power = 0u8;
        let mut a = self.0;
        let mut b = other.0;
        while a != 0 && b != 0 {
            let la = (a >> 126) as u8;
            let lb = (b >> 126) as u8;
            if la != 0 && lb != 0 && la != lb {
                // X·Y = iZ, Y·Z = iX, Z·X = iY; reversed order picks up −i.
                if lb == la % 3 + 1 {
                    power += 1;
                } else {
                    power += 3;
                }
            }
            a <<= 2;
            b <<= 2;
        }
        (Phase(power % 4), word)
    }

    pub fn commutes_with(self, other: PauliWord) -> bool {
        let mut clashes = 0u32;
        let mut a = self.0;
        let mut b = other.0;
        while a != 0 && b != 0 {
            let la = a >> 126;
            let lb = b >> 126;
            if la != 0 && lb != 0 && la != lb {
                clashes += 1;
            }
            a <<= 2;
            b <<= 2;
        }
        clashes % 2 == 0
    }

    /// Bit mask of qubits that flip the computational basis (X or Y),
    /// qubit 0 at bit `n - 1`.
    pub(crate) fn flip_mask(self, n_qubits: usize) -> usize {
        let mut mask = 0usize;
        for q in 0..n_qubits {
            if matches!(self.letter(q), Pauli::X | Pauli::Y) {
                mask |= 1 << (n_qubits - 1 - q);
            }
        }
        mask
    }

    pub fn to_string_n(self, n_qubits: usize) -> String {
        (0..n_qubits).map(|q| self.letter(q).as_char()).collect()
    }

    pub fn parse(s: &str) -> Result<(usize, Self), PauliError> {
        let letters = s
            .chars()
            .map(Pauli::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        Ok((letters.len(), PauliWord::from_letters(&letters)?))
    }
}

/// A Pauli word with an explicit qubit count and a phase in {±1, ±i}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub n_qubits: usize,
    pub word: PauliWord,
    pub phase: Phase,
}

impl PauliString {
    pub fn new(n_qubits: usize, word: PauliWord) -> Self {
        Self {
            n_qubits,
            word,
            phase: Phase::ONE,
        }
    }

    pub fn letters(&self) -> Vec<Pauli> {
        self.word.letters(self.n_qubits)
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        self.word.commutes_with(other.word)
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, word) = PauliWord::parse(s.trim())?;
        Ok(PauliString::new(n, word))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.power() {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.word.to_string_n(self.n_qubits))
    }
}

/// Product of two Pauli strings with the accumulated phase.
pub fn pauli_mul(a: &PauliString, b: &PauliString) -> Result<PauliString, PauliError> {
    check_qubits(a.n_qubits, b.n_qubits)?;
    let (phase, word) = a.word.mul(b.word);
    Ok(PauliString {
        n_qubits: a.n_qubits,
        word,
        phase: a.phase * b.phase * phase,
    })
}

fn check_qubits(left: usize, right: usize) -> Result<(), PauliError> {
    if left != right {
        return Err(PauliError::QubitMismatch { left, right });
    }
    Ok(())
}

/// Real-weighted, traceless sum of Pauli words in canonical form.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliWord, f64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Result<Self, PauliError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(PauliError::BadQubitCount(n_qubits));
        }
        Ok(Self {
            n_qubits,
            terms: BTreeMap::new(),
        })
    }

    /// Builds a sum from (word, coefficient) pairs; repeated words accumulate
    /// and identity terms are dropped.
    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self, PauliError>
    where
        I: IntoIterator<Item = (PauliWord, f64)>,
    {
        let mut sum = Self::zero(n_qubits)?;
        for (word, coeff) in terms {
            if word.support_end() > n_qubits {
                return Err(PauliError::QubitMismatch {
                    left: n_qubits,
                    right: word.support_end(),
                });
            }
            sum.accumulate(word, coeff);
        }
        sum.prune();
        Ok(sum)
    }

    /// Parses terms like `[(1.0, "ZZI"), (0.5, "XII")]`.
    pub fn from_labels(terms: &[(f64, &str)]) -> Result<Self, PauliError> {
        let mut n = None;
        let mut parsed = Vec::with_capacity(terms.len());
        for (i, &(coeff, label)) in terms.iter().enumerate() {
            let (len, word) = PauliWord::parse(label)?;
            match n {
                None => n = Some(len),
                Some(m) if m != len => {
                    return Err(PauliError::Parse {
                        line: i + 1,
                        msg: format!("word {label:?} has {len} qubits, expected {m}"),
                    })
                }
                _ => {}
            }
            parsed.push((word, coeff));
        }
        let n = n.ok_or(PauliError::BadQubitCount(0))?;
        Self::from_terms(n, parsed)
    }

    pub fn single(n_qubits: usize, sites: &[(usize, Pauli)], coeff: f64) -> Result<Self, PauliError> {
        if sites.iter().any(|&(q, _)| q >= n_qubits) {
            return Err(PauliError::BadQubitCount(n_qubits));
        }
        Self::from_terms(n_qubits, [(PauliWord::single_sites(sites), coeff)])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, word: PauliWord) -> f64 {
        self.terms.get(&word).copied().unwrap_or(0.0)
    }

    /// Terms in lexicographic word order.
    pub fn iter(&self) -> impl Iterator<Item = (PauliWord, f64)> + '_ {
        self.terms.iter().map(|(w, c)| (*w, *c))
    }

    fn accumulate(&mut self, word: PauliWord, coeff: f64) {
        if word.is_identity() || coeff == 0.0 {
            return;
        }
        *self.terms.entry(word).or_insert(0.0) += coeff;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= PRUNE_TOL);
    }

    pub fn scale(&self, factor: f64) -> PauliSum {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= factor);
        out.prune();
        out
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum, PauliError> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum, PauliError> {
        self.axpy(-1.0, other)
    }

    /// `self + alpha · other`.
    pub fn axpy(&self, alpha: f64, other: &PauliSum) -> Result<PauliSum, PauliError> {
        check_qubits(self.n_qubits, other.n_qubits)?;
        let mut out = self.clone();
        out.axpy_in_place(alpha, other);
        Ok(out)
    }

    pub(crate) fn axpy_in_place(&mut self, alpha: f64, other: &PauliSum) {
        for (w, c) in other.iter() {
            self.accumulate(w, alpha * c);
        }
        self.prune();
    }

    /// Hilbert–Schmidt norm `sqrt(Tr[H²]/2^n)`.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Plain-text form: one `<coefficient> <word>` line per term, sorted by word.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (w, c) in self.iter() {
            out.push_str(&format!("{c:?} {}\n", w.to_string_n(self.n_qubits)));
        }
        out
    }

    /// Parses the plain-text form. Blank lines and `#` comments are skipped.
    /// The qubit count comes from the first word unless `n_qubits` is given.
    pub fn from_text(text: &str, n_qubits: Option<usize>) -> Result<PauliSum, PauliError> {
        let mut n = n_qubits;
        let mut terms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| PauliError::Parse { line: i + 1, msg };
            let mut parts = line.split_whitespace();
            let (coeff, word) = match (parts.next(), parts.next(), parts.next()) {
                (Some(c), Some(w), None) => (c, w),
                _ => return Err(err(format!("expected `<coefficient> <word>`, got {line:?}"))),
            };
            let coeff: f64 = coeff
                .parse()
                .map_err(|_| err(format!("bad coefficient {coeff:?}")))?;
            if !coeff.is_finite() {
                return Err(err(format!("non-finite coefficient {coeff}")));
            }
            let (len, word) = PauliWord::parse(word).map_err(|e| err(e.to_string()))?;
            match n {
                None => n = Some(len),
                Some(m) if m != len => {
                    return Err(err(format!("word has {len} qubits, expected {m}")));
                }
                _ => {}
            }
            terms.push((word, coeff));
        }
        let n = n.ok_or(PauliError::Parse {
            line: 0,
            msg: "no terms and no qubit count".into(),
        })?;
        PauliSum::from_terms(n, terms)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}·{}", w.to_string_n(self.n_qubits))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PauliSumRepr {
    n_qubits: usize,
    terms: Vec<(String, f64)>,
}

impl Serialize for PauliSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PauliSumRepr {
            n_qubits: self.n_qubits,
            terms: self
                .iter()
                .map(|(w, c)| (w.to_string_n(self.n_qubits), c))
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PauliSum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PauliSumRepr::deserialize(deserializer)?;
        let mut terms = Vec::with_capacity(repr.terms.len());
        for (label, c) in repr.terms {
            let (len, word) = PauliWord::parse(&label).map_err(serde::de::Error::custom)?;
            if len != repr.n_qubits {
                return Err(serde::de::Error::custom(format!(
                    "word {label} does not have {} qubits",
                    repr.n_qubits
                )));
            }
            terms.push((word, c));
        }
        PauliSum::from_terms(repr.n_qubits, terms).map_err(serde::de::Error::custom)
    }
}

/// Hermitian `C` with `AB − BA = iC`.
///
/// Anticommuting words give `PQ − QP = 2PQ = 2·(±i)R`, so every contribution
/// is real; commuting pairs drop out.
pub fn commutator(a: &PauliSum, b: &PauliSum) -> Result<PauliSum, PauliError> {
    check_qubits(a.n_qubits, b.n_qubits)?;
    let mut out = PauliSum::zero(a.n_qubits)?;
    for (wa, ca) in a.iter() {
        for (wb, cb) in b.iter() {
            if wa.commutes_with(wb) {
                continue;
            }
            let (phase, word) = wa.mul(wb);
            // phase is ±i here; (±i)/i = ±1.
            let sign = if phase == Phase::I { 1.0 } else { -1.0 };
            out.accumulate(word, 2.0 * sign * ca * cb);
        }
    }
    out.prune();
    Ok(out)
}

/// `Tr[a·b] / 2^n`, i.e. the dot product of coefficient vectors.
pub fn hs_inner(a: &PauliSum, b: &PauliSum) -> Result<f64, PauliError> {
    check_qubits(a.n_qubits, b.n_qubits)?;
    Ok(hs_inner_unchecked(a, b))
}

pub(crate) fn hs_inner_unchecked(a: &PauliSum, b: &PauliSum) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .terms
        .iter()
        .filter_map(|(w, c)| large.terms.get(w).map(|d| c * d))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn sum(terms: &[(f64, &str)]) -> PauliSum {
        PauliSum::from_labels(terms).unwrap()
    }

    #[test]
    fn single_qubit_table() {
        let xy = pauli_mul(&ps("X"), &ps("Y")).unwrap();
        assert_eq!(xy.word, ps("Z").word);
        assert_eq!(xy.phase, Phase::I);

        let xx = pauli_mul(&ps("X"), &ps("X")).unwrap();
        assert!(xx.word.is_identity());
        assert_eq!(xx.phase, Phase::ONE);

        let zy = pauli_mul(&ps("Z"), &ps("Y")).unwrap();
        assert_eq!(zy.word, ps("X").word);
        assert_eq!(zy.phase, Phase::MINUS_I);
    }

    #[test]
    fn two_qubit_product() {
        let p = pauli_mul(&ps("XZ"), &ps("YZ")).unwrap();
        assert_eq!(p.word.to_string_n(2), "ZI");
        assert_eq!(p.phase, Phase::I);
    }

    #[test]
    fn mismatched_qubits_rejected() {
        assert!(matches!(
            pauli_mul(&ps("X"), &ps("XX")),
            Err(PauliError::QubitMismatch { .. })
        ));
        assert!(commutator(&sum(&[(1.0, "X")]), &sum(&[(1.0, "XX")])).is_err());
        assert!(hs_inner(&sum(&[(1.0, "X")]), &sum(&[(1.0, "XX")])).is_err());
    }

    #[test]
    fn commutator_su2() {
        let c = commutator(&sum(&[(1.0, "X")]), &sum(&[(1.0, "Y")])).unwrap();
        assert_eq!(c, sum(&[(2.0, "Z")]));
        let c = commutator(&sum(&[(1.0, "X")]), &sum(&[(1.0, "X")])).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn commutator_ising_pair() {
        let zz = sum(&[(1.0, "ZZ")]);
        let x = sum(&[(1.0, "XI"), (1.0, "IX")]);
        let c = commutator(&zz, &x).unwrap();
        assert_eq!(c, sum(&[(2.0, "YZ"), (2.0, "ZY")]));
    }

    #[test]
    fn inner_products() {
        let x = sum(&[(1.0, "X")]);
        let z = sum(&[(1.0, "Z")]);
        assert_eq!(hs_inner(&x, &x).unwrap(), 1.0);
        assert_eq!(hs_inner(&x, &z).unwrap(), 0.0);
        let a = sum(&[(2.0, "X"), (3.0, "Z")]);
        let b = sum(&[(1.0, "X"), (-1.0, "Z")]);
        assert_eq!(hs_inner(&a, &b).unwrap(), -1.0);
    }

    #[test]
    fn identity_and_dust_dropped() {
        let s = sum(&[(1.0, "II"), (1e-14, "XZ"), (0.5, "ZZ")]);
        assert_eq!(s.len(), 1);
        assert_eq!(s.coeff(PauliWord::parse("ZZ").unwrap().1), 0.5);
    }

    #[test]
    fn repeated_words_accumulate() {
        let s = sum(&[(1.0, "ZZ"), (1.0, "ZZ")]);
        assert_eq!(s, sum(&[(2.0, "ZZ")]));
    }

    #[test]
    fn text_format_sorted_and_parsed() {
        let s = sum(&[(1.0, "ZZI"), (-0.5, "XII"), (0.25, "IYI")]);
        let text = s.to_text();
        assert_eq!(text, "0.25 IYI\n-0.5 XII\n1.0 ZZI\n");
        assert_eq!(PauliSum::from_text(&text, None).unwrap(), s);
    }

    #[test]
    fn text_format_errors() {
        assert!(PauliSum::from_text("1.0 XQ", None).is_err());
        assert!(PauliSum::from_text("abc XX", None).is_err());
        assert!(PauliSum::from_text("1.0 XX\n1.0 X", None).is_err());
        assert!(PauliSum::from_text("1.0", None).is_err());
        assert!(PauliSum::from_text("", None).is_err());
        assert!(PauliSum::from_text("# nothing\n", Some(2)).unwrap().is_empty());
    }

    #[test]
    fn word_ordering_is_lexicographic() {
        let words = ["ZI", "IX", "XY", "IZ", "YI"];
        let mut parsed: Vec<_> = words.iter().map(|w| PauliWord::parse(w).unwrap().1).collect();
        parsed.sort();
        let back: Vec<_> = parsed.iter().map(|w| w.to_string_n(2)).collect();
        assert_eq!(back, ["IX", "IZ", "XY", "YI", "ZI"]);
    }

    #[test]
    fn serde_roundtrip() {
        let s = sum(&[(1.5, "XZ"), (-2.0, "YY")]);
        let json = serde_json::to_string(&s).unwrap();
        let back: PauliSum = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
