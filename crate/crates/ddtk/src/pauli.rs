//! Phase-free Pauli words, decoupling groups, and sign characters.
//!
//! All products here are projective: `XY = Z`, not `iZ`. Global phases never
//! matter for conjugation signs or for the pulse algebra built on top, and
//! dropping them keeps group elements self-inverse.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Single-qubit Pauli letter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// Projective product: the letter of `self * other` with phase dropped.
    pub fn product(self, other: Pauli) -> Pauli {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => p,
            (a, b) if a == b => I,
            (X, Y) | (Y, X) => Z,
            (Y, Z) | (Z, Y) => X,
            (X, Z) | (Z, X) => Y,
            _ => unreachable!(),
        }
    }

    /// Letters commute iff either is identity or they are equal.
    pub fn commutes(self, other: Pauli) -> bool {
        self == Pauli::I || other == Pauli::I || self == other
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Pauli, PauliError> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(PauliError::InvalidLetter(other)),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("invalid Pauli letter {0:?}, expected one of I, X, Y, Z")]
    InvalidLetter(char),
    #[error("Pauli string must act on at least one qubit")]
    Empty,
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitCountMismatch(usize, usize),
}

/// Fixed-width word over {I, X, Y, Z}, one letter per qubit, length >= 1.
///
/// Serializes as the bare letter string, e.g. `"XZIY"`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Result<Self, PauliError> {
        if letters.is_empty() {
            return Err(PauliError::Empty);
        }
        Ok(PauliString { letters })
    }

    pub fn identity(n_qubits: usize) -> Self {
        PauliString::new(vec![Pauli::I; n_qubits.max(1)]).expect("n >= 1")
    }

    /// Single non-identity letter on `qubit`, identity elsewhere.
    pub fn single(n_qubits: usize, qubit: usize, letter: Pauli) -> Result<Self, PauliError> {
        if qubit >= n_qubits {
            return Err(PauliError::QubitCountMismatch(qubit + 1, n_qubits));
        }
        let mut letters = vec![Pauli::I; n_qubits];
        letters[qubit] = letter;
        PauliString::new(letters)
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&p| p == Pauli::I)
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Projective product, letterwise. Every string is its own inverse under
    /// this product.
    pub fn product(&self, other: &PauliString) -> Result<PauliString, PauliError> {
        if self.n_qubits() != other.n_qubits() {
            return Err(PauliError::QubitCountMismatch(
                self.n_qubits(),
                other.n_qubits(),
            ));
        }
        let letters = self
            .letters
            .iter()
            .zip(&other.letters)
            .map(|(&a, &b)| a.product(b))
            .collect();
        PauliString::new(letters)
    }

    pub fn commutes_with(&self, other: &PauliString) -> Result<bool, PauliError> {
        if self.n_qubits() != other.n_qubits() {
            return Err(PauliError::QubitCountMismatch(
                self.n_qubits(),
                other.n_qubits(),
            ));
        }
        // Full words commute iff the anticommuting-letter count is even.
        let anti = self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|&(&a, &b)| !a.commutes(b))
            .count();
        Ok(anti % 2 == 0)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &p in &self.letters {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, PauliError> {
        let letters = s.chars().map(Pauli::from_char).collect::<Result<_, _>>()?;
        PauliString::new(letters)
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// Conjugation sign of `axis` under `g`: `g axis g^dagger = chi * axis` with
/// `chi = (-1)^{# qubits where both letters are non-identity and differ}`.
pub fn sign_character(axis: &PauliString, g: &PauliString) -> Result<i32, PauliError> {
    if axis.n_qubits() != g.n_qubits() {
        return Err(PauliError::QubitCountMismatch(
            axis.n_qubits(),
            g.n_qubits(),
        ));
    }
    let flips = axis
        .letters
        .iter()
        .zip(g.letters())
        .filter(|&(&a, &b)| a != Pauli::I && b != Pauli::I && a != b)
        .count();
    Ok(if flips % 2 == 0 { 1 } else { -1 })
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("decoupling group must be non-empty")]
    Empty,
    #[error("first group element must be the identity, got {0}")]
    MissingIdentity(String),
    #[error("group elements must share a qubit count: {0} vs {1}")]
    MixedQubitCounts(usize, usize),
    #[error("duplicate group element {0}")]
    Duplicate(String),
    #[error("group not closed: {0} * {1} = {2} is not an element")]
    NotClosed(String, String, String),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Projective Pauli group used to label toggling frames.
///
/// Invariants, checked at construction: non-empty, element 0 is the identity,
/// elements are distinct, and the set is closed under the projective product.
/// Self-inverseness is automatic for phase-free Pauli words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecouplingGroup {
    elements: Vec<PauliString>,
}

impl DecouplingGroup {
    pub fn new(elements: Vec<PauliString>) -> Result<Self, GroupError> {
        let first = elements.first().ok_or(GroupError::Empty)?;
        if !first.is_identity() {
            return Err(GroupError::MissingIdentity(first.to_string()));
        }
        let n = first.n_qubits();
        for e in &elements {
            if e.n_qubits() != n {
                return Err(GroupError::MixedQubitCounts(n, e.n_qubits()));
            }
        }
        for (i, e) in elements.iter().enumerate() {
            if elements[..i].contains(e) {
                return Err(GroupError::Duplicate(e.to_string()));
            }
        }
        for a in &elements {
            for b in &elements {
                let p = a.product(b)?;
                if !elements.contains(&p) {
                    return Err(GroupError::NotClosed(
                        a.to_string(),
                        b.to_string(),
                        p.to_string(),
                    ));
                }
            }
        }
        Ok(DecouplingGroup { elements })
    }

    pub fn parse(strings: &[&str]) -> Result<Self, GroupError> {
        let elements = strings
            .iter()
            .map(|s| s.parse::<PauliString>())
            .collect::<Result<Vec<_>, _>>()?;
        DecouplingGroup::new(elements)
    }

    /// `{I, X, Y, Z}` on one qubit, the group behind all single-qubit
    /// schedules here.
    pub fn single_qubit() -> Self {
        DecouplingGroup::parse(&["I", "X", "Y", "Z"]).expect("valid by construction")
    }

    /// `{I, A}` for one non-identity word, enough for pure-dephasing noise
    /// anticommuting with A.
    pub fn pair(axis: &PauliString) -> Result<Self, GroupError> {
        DecouplingGroup::new(vec![PauliString::identity(axis.n_qubits()), axis.clone()])
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.elements[0].n_qubits()
    }

    pub fn elements(&self) -> &[PauliString] {
        &self.elements
    }

    pub fn element(&self, idx: usize) -> Option<&PauliString> {
        self.elements.get(idx)
    }

    pub fn index_of(&self, e: &PauliString) -> Option<usize> {
        self.elements.iter().position(|x| x == e)
    }
}

impl Serialize for DecouplingGroup {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.elements.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DecouplingGroup {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let elements = Vec::<PauliString>::deserialize(deserializer)?;
        DecouplingGroup::new(elements).map_err(D::Error::custom)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CharacterError {
    #[error("axis {axis} is not decoupled: sum of characters over the group is {sum}, not 0")]
    NonzeroRowSum { axis: String, sum: i64 },
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Sign characters chi[axis][element] in {+1, -1}, one row per interaction
/// axis, with every row summing to zero (the first-order decoupling
/// criterion).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignCharacterTable {
    axes: Vec<PauliString>,
    signs: Vec<Vec<i32>>,
}

impl SignCharacterTable {
    pub fn axes(&self) -> &[PauliString] {
        &self.axes
    }

    /// Row for one axis, indexed by group element.
    pub fn row(&self, axis_idx: usize) -> &[i32] {
        &self.signs[axis_idx]
    }

    pub fn sign(&self, axis_idx: usize, element_idx: usize) -> i32 {
        self.signs[axis_idx][element_idx]
    }

    pub fn n_axes(&self) -> usize {
        self.axes.len()
    }
}

/// Builds the character table of `axes` under `group`, rejecting any axis
/// whose character row does not sum to zero.
pub fn character_table(
    group: &DecouplingGroup,
    axes: &[PauliString],
) -> Result<SignCharacterTable, CharacterError> {
    let mut signs = Vec::with_capacity(axes.len());
    for axis in axes {
        let row = group
            .elements()
            .iter()
            .map(|g| sign_character(axis, g))
            .collect::<Result<Vec<_>, _>>()?;
        let sum: i64 = row.iter().map(|&s| s as i64).sum();
        if sum != 0 {
            return Err(CharacterError::NonzeroRowSum {
                axis: axis.to_string(),
                sum,
            });
        }
        signs.push(row);
    }
    Ok(SignCharacterTable {
        axes: axes.to_vec(),
        signs,
    })
}

/// Per-axis and per-system-term verdicts from [`verify_decoupling_group`].
#[derive(Clone, Debug)]
pub struct GroupReport {
    /// (axis, sum of characters over the group); decoupled iff the sum is 0.
    pub axis_sums: Vec<(PauliString, i64)>,
    /// (system term, commutes with every group element).
    pub system_terms: Vec<(PauliString, bool)>,
    pub pass: bool,
}

/// Checks that `group` averages every interaction axis to zero and leaves
/// every wanted system term untouched.
pub fn verify_decoupling_group(
    group: &DecouplingGroup,
    interaction_axes: &[PauliString],
    system_terms: &[PauliString],
) -> Result<GroupReport, PauliError> {
    let mut axis_sums = Vec::with_capacity(interaction_axes.len());
    for axis in interaction_axes {
        let mut sum = 0i64;
        for g in group.elements() {
            sum += sign_character(axis, g)? as i64;
        }
        axis_sums.push((axis.clone(), sum));
    }
    let mut terms = Vec::with_capacity(system_terms.len());
    for term in system_terms {
        let mut ok = true;
        for g in group.elements() {
            ok &= term.commutes_with(g)?;
        }
        terms.push((term.clone(), ok));
    }
    let pass = axis_sums.iter().all(|(_, s)| *s == 0) && terms.iter().all(|(_, ok)| *ok);
    Ok(GroupReport {
        axis_sums,
        system_terms: terms,
        pass,
    })
}
