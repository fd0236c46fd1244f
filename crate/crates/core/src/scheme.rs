//! Scaling matrices, switching assignments and the synchronization error.
//!
//! The error has two blocks. Slot `m` of block `b` reads
//!
//! ```text
//! e_b[m] = a_b[i] x_b[i] + b_b[j] y_b[j] - c_b[l] z_b[l] - d_b[m] w_b[m]
//! ```
//!
//! where `(i, j, l)` is the wiring stored at that slot. Indices are 1-based
//! throughout the public API to match the usual `e_{1m}` subscripts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::StateVector;
use crate::error::{Error, Result};
use crate::roles::{Role, Roles};

/// Diagonals of the eight scaling matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

/// Which of the four scaling pairs `(a1, a2)`, `(b1, b2)`, `(c1, c2)`, `(d1, d2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CoefPair {
    A,
    B,
    C,
    D,
}

impl CoefPair {
    pub const ALL: [CoefPair; 4] = [CoefPair::A, CoefPair::B, CoefPair::C, CoefPair::D];

    fn letter(self) -> char {
        match self {
            CoefPair::A => 'a',
            CoefPair::B => 'b',
            CoefPair::C => 'c',
            CoefPair::D => 'd',
        }
    }

    fn roles(self) -> [Role; 2] {
        match self {
            CoefPair::A => [Role::X1, Role::X2],
            CoefPair::B => [Role::Y1, Role::Y2],
            CoefPair::C => [Role::Z1, Role::Z2],
            CoefPair::D => [Role::W1, Role::W2],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScalingIssue {
    Length {
        name: String,
        expected: usize,
        found: usize,
    },
    NonFinite {
        name: String,
    },
    ZeroPair(CoefPair),
    /// Both `C` and `D` vanish, so no response system is synchronized.
    NoResponse,
}

impl fmt::Display for ScalingIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalingIssue::Length {
                name,
                expected,
                found,
            } => {
                write!(f, "{name} has {found} entries, expected {expected}")
            }
            ScalingIssue::NonFinite { name } => write!(f, "{name} has a non-finite entry"),
            ScalingIssue::ZeroPair(p) => {
                let l = p.letter();
                write!(f, "{l}1 and {l}2 are all zero")
            }
            ScalingIssue::NoResponse => {
                write!(
                    f,
                    "C and D are both zero; at least one response pair must be nonzero"
                )
            }
        }
    }
}

impl ScalingConfig {
    /// Identity scaling `A = B = C = D = I`.
    pub fn identity(n: usize) -> Self {
        Self::uniform(n, 1.0)
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        let v = vec![value; n];
        ScalingConfig {
            a1: v.clone(),
            a2: v.clone(),
            b1: v.clone(),
            b2: v.clone(),
            c1: v.clone(),
            c2: v.clone(),
            d1: v.clone(),
            d2: v,
        }
    }

    /// Diagonal multiplying the state of `role`.
    pub fn coefficients(&self, role: Role) -> &[f64] {
        match role {
            Role::X1 => &self.a1,
            Role::X2 => &self.a2,
            Role::Y1 => &self.b1,
            Role::Y2 => &self.b2,
            Role::Z1 => &self.c1,
            Role::Z2 => &self.c2,
            Role::W1 => &self.d1,
            Role::W2 => &self.d2,
        }
    }

    pub fn coefficients_mut(&mut self, role: Role) -> &mut Vec<f64> {
        match role {
            Role::X1 => &mut self.a1,
            Role::X2 => &mut self.a2,
            Role::Y1 => &mut self.b1,
            Role::Y2 => &mut self.b2,
            Role::Z1 => &mut self.c1,
            Role::Z2 => &mut self.c2,
            Role::W1 => &mut self.d1,
            Role::W2 => &mut self.d2,
        }
    }

    /// Zeroes every coefficient of one error block.
    pub fn zero_block(&mut self, block: usize) {
        for role in Role::ALL.into_iter().filter(|r| r.block() == block) {
            self.coefficients_mut(role)
                .iter_mut()
                .for_each(|v| *v = 0.0);
        }
    }

    pub fn zero_role(&mut self, role: Role) {
        self.coefficients_mut(role)
            .iter_mut()
            .for_each(|v| *v = 0.0);
    }

    pub fn is_zero(&self, role: Role) -> bool {
        self.coefficients(role).iter().all(|&v| v == 0.0)
    }

    pub fn is_block_zero(&self, block: usize) -> bool {
        Role::ALL
            .into_iter()
            .filter(|r| r.block() == block)
            .all(|r| self.is_zero(r))
    }

    pub fn is_pair_zero(&self, pair: CoefPair) -> bool {
        pair.roles().into_iter().all(|r| self.is_zero(r))
    }

    /// Checks shape and admissibility. Pairs listed in `zero_allowed` may be
    /// entirely zero (a reduced scheme switches them off on purpose).
    pub fn check(&self, n: usize, zero_allowed: &[CoefPair]) -> Vec<ScalingIssue> {
        let mut issues = Vec::new();
        for role in Role::ALL {
            let name = coef_name(role);
            let v = self.coefficients(role);
            if v.len() != n {
                issues.push(ScalingIssue::Length {
                    name: name.clone(),
                    expected: n,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                issues.push(ScalingIssue::NonFinite { name });
            }
        }
        if !issues.is_empty() {
            return issues;
        }
        for pair in CoefPair::ALL {
            if self.is_pair_zero(pair) && !zero_allowed.contains(&pair) {
                issues.push(ScalingIssue::ZeroPair(pair));
            }
        }
        if self.is_pair_zero(CoefPair::C) && self.is_pair_zero(CoefPair::D) {
            issues.push(ScalingIssue::NoResponse);
        }
        issues
    }

    fn dims_match(&self, n: usize) -> Result<()> {
        for role in Role::ALL {
            let found = self.coefficients(role).len();
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        Ok(())
    }
}

/// `a1`, `c2`, ... for the coefficient vector of `role`.
pub fn coef_name(role: Role) -> String {
    let letter = match role {
        Role::X1 | Role::X2 => 'a',
        Role::Y1 | Role::Y2 => 'b',
        Role::Z1 | Role::Z2 => 'c',
        Role::W1 | Role::W2 => 'd',
    };
    format!("{letter}{}", role.block())
}

/// The four index positions of a switching tuple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IndexRole {
    I,
    J,
    L,
    M,
}

impl fmt::Display for IndexRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IndexRole::I => "i",
            IndexRole::J => "j",
            IndexRole::L => "l",
            IndexRole::M => "m",
        })
    }
}

/// Component indices `(i, j, l, m)` of one error slot, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SwitchTuple {
    pub i: usize,
    pub j: usize,
    pub l: usize,
    pub m: usize,
}

impl SwitchTuple {
    pub fn new(i: usize, j: usize, l: usize, m: usize) -> Self {
        Self { i, j, l, m }
    }

    pub fn get(&self, which: IndexRole) -> usize {
        match which {
            IndexRole::I => self.i,
            IndexRole::J => self.j,
            IndexRole::L => self.l,
            IndexRole::M => self.m,
        }
    }

    /// Subscript such as `2131`.
    pub fn subscript(&self) -> String {
        if [self.i, self.j, self.l, self.m].iter().all(|&k| k < 10) {
            format!("{}{}{}{}", self.i, self.j, self.l, self.m)
        } else {
            format!("{}.{}.{}.{}", self.i, self.j, self.l, self.m)
        }
    }
}

/// Equality partition of `(i, j, l, m)`.
///
/// Fifteen classes: the non-switching `AllEqual`, four with three indices
/// equal, three with two equal pairs, six with exactly one equal pair, and
/// `AllDistinct`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternClass {
    AllEqual,
    ThreeIjl,
    ThreeIjm,
    ThreeIlm,
    ThreeJlm,
    PairsIjLm,
    PairsIlJm,
    PairsImJl,
    PairIj,
    PairIl,
    PairIm,
    PairJl,
    PairLm,
    PairJm,
    AllDistinct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PatternFamily {
    NonSwitching,
    ThreeEqual,
    TwoPairs,
    OnePair,
    AllDistinct,
}

impl PatternClass {
    pub const ALL: [PatternClass; 15] = [
        PatternClass::AllEqual,
        PatternClass::ThreeIjl,
        PatternClass::ThreeIjm,
        PatternClass::ThreeIlm,
        PatternClass::ThreeJlm,
        PatternClass::PairsIjLm,
        PatternClass::PairsIlJm,
        PatternClass::PairsImJl,
        PatternClass::PairIj,
        PatternClass::PairIl,
        PatternClass::PairIm,
        PatternClass::PairJl,
        PatternClass::PairLm,
        PatternClass::PairJm,
        PatternClass::AllDistinct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternClass::AllEqual => "i=j=l=m",
            PatternClass::ThreeIjl => "i=j=l≠m",
            PatternClass::ThreeIjm => "i=j=m≠l",
            PatternClass::ThreeIlm => "i=l=m≠j",
            PatternClass::ThreeJlm => "j=l=m≠i",
            PatternClass::PairsIjLm => "i=j≠l=m",
            PatternClass::PairsIlJm => "i=l≠j=m",
            PatternClass::PairsImJl => "i=m≠j=l",
            PatternClass::PairIj => "i=j≠l≠m",
            PatternClass::PairIl => "i=l≠j≠m",
            PatternClass::PairIm => "i=m≠j≠l",
            PatternClass::PairJl => "j=l≠i≠m",
            PatternClass::PairLm => "l=m≠i≠j",
            PatternClass::PairJm => "j=m≠i≠l",
            PatternClass::AllDistinct => "i≠j≠l≠m",
        }
    }

    pub fn family(self) -> PatternFamily {
        use PatternClass::*;
        match self {
            AllEqual => PatternFamily::NonSwitching,
            ThreeIjl | ThreeIjm | ThreeIlm | ThreeJlm => PatternFamily::ThreeEqual,
            PairsIjLm | PairsIlJm | PairsImJl => PatternFamily::TwoPairs,
            PairIj | PairIl | PairIm | PairJl | PairLm | PairJm => PatternFamily::OnePair,
            AllDistinct => PatternFamily::AllDistinct,
        }
    }

    pub fn is_switching(self) -> bool {
        self != PatternClass::AllEqual
    }
}

impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classifies a tuple by which of its indices coincide.
pub fn classify_pattern(t: SwitchTuple) -> PatternClass {
    // Label each index by order of first appearance: (2, 1, 3, 1) -> [0, 1, 2, 1].
    let idx = [t.i, t.j, t.l, t.m];
    let mut seen: Vec<usize> = Vec::with_capacity(4);
    let mut labels = [0u8; 4];
    for (slot, &k) in idx.iter().enumerate() {
        labels[slot] = match seen.iter().position(|&s| s == k) {
            Some(p) => p as u8,
            None => {
                seen.push(k);
                (seen.len() - 1) as u8
            }
        };
    }
    match labels {
        [0, 0, 0, 0] => PatternClass::AllEqual,
        [0, 0, 0, 1] => PatternClass::ThreeIjl,
        [0, 0, 1, 0] => PatternClass::ThreeIjm,
        [0, 1, 0, 0] => PatternClass::ThreeIlm,
        [0, 1, 1, 1] => PatternClass::ThreeJlm,
        [0, 0, 1, 1] => PatternClass::PairsIjLm,
        [0, 1, 0, 1] => PatternClass::PairsIlJm,
        [0, 1, 1, 0] => PatternClass::PairsImJl,
        [0, 0, 1, 2] => PatternClass::PairIj,
        [0, 1, 0, 2] => PatternClass::PairIl,
        [0, 1, 2, 0] => PatternClass::PairIm,
        [0, 1, 1, 2] => PatternClass::PairJl,
        [0, 1, 2, 2] => PatternClass::PairLm,
        [0, 1, 2, 1] => PatternClass::PairJm,
        [0, 1, 2, 3] => PatternClass::AllDistinct,
        _ => unreachable!("restricted growth labels of length 4"),
    }
}

/// Largest index range [`enumerate_patterns`] will walk (`n^4` tuples).
pub const MAX_CATALOG_DIM: usize = 6;

/// Tuple counts per pattern class over `{1..=n}^4`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatternCatalog {
    pub n: usize,
    pub total: usize,
    /// Tuples satisfying the switching condition.
    pub valid: usize,
    /// Every class in [`PatternClass::ALL`] order, including empty ones.
    pub counts: Vec<(PatternClass, usize)>,
}

pub fn enumerate_patterns(n: usize) -> Result<PatternCatalog> {
    if !(2..=MAX_CATALOG_DIM).contains(&n) {
        return Err(Error::InvalidConfig(format!(
            "pattern catalog needs 2 <= n <= {MAX_CATALOG_DIM}, got {n}"
        )));
    }
    let mut counts: Vec<(PatternClass, usize)> =
        PatternClass::ALL.iter().map(|&c| (c, 0)).collect();
    for i in 1..=n {
        for j in 1..=n {
            for l in 1..=n {
                for m in 1..=n {
                    let c = classify_pattern(SwitchTuple::new(i, j, l, m));
                    counts[c as usize].1 += 1;
                }
            }
        }
    }
    let total = n.pow(4);
    let valid = counts
        .iter()
        .filter(|(c, _)| c.is_switching())
        .map(|(_, k)| k)
        .sum();
    Ok(PatternCatalog {
        n,
        total,
        valid,
        counts,
    })
}

/// Component wiring `(i, j, l)` of one error slot; the slot position is `m`.
///
/// Serialized as a three-element array. Text of the form `"(2,1,3)"` is
/// accepted on input as well.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "WiringRepr", into = "[usize; 3]")]
pub struct Wiring {
    pub i: usize,
    pub j: usize,
    pub l: usize,
}

impl Wiring {
    pub fn new(i: usize, j: usize, l: usize) -> Self {
        Self { i, j, l }
    }

    pub fn at_slot(self, m: usize) -> SwitchTuple {
        SwitchTuple::new(self.i, self.j, self.l, m)
    }
}

impl From<Wiring> for [usize; 3] {
    fn from(w: Wiring) -> Self {
        [w.i, w.j, w.l]
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WiringRepr {
    Array([usize; 3]),
    Text(String),
}

impl TryFrom<WiringRepr> for Wiring {
    type Error = String;

    fn try_from(repr: WiringRepr) -> std::result::Result<Self, String> {
        match repr {
            WiringRepr::Array([i, j, l]) => Ok(Wiring::new(i, j, l)),
            WiringRepr::Text(s) => s.parse(),
        }
    }
}

impl std::str::FromStr for Wiring {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts: Vec<_> = inner
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect();
        match parts.as_slice() {
            [Ok(i), Ok(j), Ok(l)] => Ok(Wiring::new(*i, *j, *l)),
            _ => Err(format!("expected a triplet \"(i,j,l)\", got {s:?}")),
        }
    }
}

impl fmt::Display for Wiring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.i, self.j, self.l)
    }
}

/// Wiring for both error blocks; slot `m` (1-based) of each block is
/// `block[m - 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchAssignment {
    pub block1: Vec<Wiring>,
    pub block2: Vec<Wiring>,
}

impl SwitchAssignment {
    pub fn new(block1: Vec<Wiring>, block2: Vec<Wiring>) -> Self {
        Self { block1, block2 }
    }

    /// Assignment used in the Genesio-Tesi/Lu worked example:
    /// `e1 = (e11_2131, e12_1322, e13_3213)`, `e2 = (e21_3221, e22_1332, e23_2113)`.
    pub fn paper_example() -> Self {
        Self::new(
            vec![
                Wiring::new(2, 1, 3),
                Wiring::new(1, 3, 2),
                Wiring::new(3, 2, 1),
            ],
            vec![
                Wiring::new(3, 2, 2),
                Wiring::new(1, 3, 3),
                Wiring::new(2, 1, 1),
            ],
        )
    }

    /// The non-switched wiring `i = j = l = m`.
    pub fn identity(n: usize) -> Self {
        let block: Vec<_> = (1..=n).map(|k| Wiring::new(k, k, k)).collect();
        Self::new(block.clone(), block)
    }

    pub fn block(&self, block: usize) -> &[Wiring] {
        match block {
            1 => &self.block1,
            2 => &self.block2,
            _ => panic!("error block must be 1 or 2, got {block}"),
        }
    }

    pub fn block_mut(&mut self, block: usize) -> &mut Vec<Wiring> {
        match block {
            1 => &mut self.block1,
            2 => &mut self.block2,
            _ => panic!("error block must be 1 or 2, got {block}"),
        }
    }

    pub fn tuple(&self, block: usize, m: usize) -> SwitchTuple {
        self.block(block)[m - 1].at_slot(m)
    }

    pub fn tuples(&self, block: usize) -> impl Iterator<Item = SwitchTuple> + '_ {
        self.block(block)
            .iter()
            .enumerate()
            .map(|(k, w)| w.at_slot(k + 1))
    }

    /// Error component labels such as `e11_2131`, block 1 first.
    pub fn error_labels(&self) -> Vec<String> {
        (1..=2)
            .flat_map(|b| self.tuples(b).map(move |t| error_label(b, t)))
            .collect()
    }

    /// Length and range checks only; enough for the error formula to be well defined.
    pub fn check_structure(&self, n: usize) -> Result<()> {
        let structural: Vec<_> = validate_assignment(self, n, ValidationOptions::default())
            .errors
            .into_iter()
            .filter(|v| matches!(v.rule, Rule::WrongLength { .. } | Rule::OutOfRange { .. }))
            .collect();
        if structural.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidAssignment(structural))
        }
    }
}

pub fn error_label(block: usize, t: SwitchTuple) -> String {
    if t.m < 10 {
        format!("e{block}{}_{}", t.m, t.subscript())
    } else {
        format!("e{block}_{}_{}", t.m, t.subscript())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    WrongLength {
        expected: usize,
        found: usize,
    },
    OutOfRange {
        index: IndexRole,
        value: usize,
    },
    NonSwitching,
    /// `index` takes `value` at this slot and at `first_slot` as well.
    NotPermutation {
        index: IndexRole,
        value: usize,
        first_slot: usize,
    },
}

/// One broken assignment rule, located by block and (when applicable) slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub block: usize,
    pub slot: Option<usize>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "block {}", self.block)?;
        if let Some(slot) = self.slot {
            write!(f, ", slot {slot}")?;
        }
        match &self.rule {
            Rule::WrongLength { expected, found } => {
                write!(f, ": {found} slots, expected {expected}")
            }
            Rule::OutOfRange { index, value } => {
                write!(f, ": {index}-index {value} out of range")
            }
            Rule::NonSwitching => write!(f, ": non-switching tuple (i = j = l = m)"),
            Rule::NotPermutation { index, value, first_slot } => write!(
                f,
                ": {index}-index {value} already used at slot {first_slot}; {index}-indices are not a permutation"
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Report repeated i/j/l indices as warnings instead of errors.
    pub allow_non_permutation: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Validation {
    pub errors: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidAssignment(self.errors))
        }
    }
}

/// Checks block lengths, index ranges, the switching condition, and that
/// i, j and l each form a permutation of `1..=n` within a block.
pub fn validate_assignment(a: &SwitchAssignment, n: usize, opts: ValidationOptions) -> Validation {
    let mut out = Validation::default();
    for b in 1..=2 {
        let block = a.block(b);
        if block.len() != n {
            out.errors.push(Violation {
                block: b,
                slot: None,
                rule: Rule::WrongLength {
                    expected: n,
                    found: block.len(),
                },
            });
        }
        let mut first_use: [Vec<Option<usize>>; 3] = std::array::from_fn(|_| vec![None; n + 1]);
        for t in a.tuples(b) {
            let mut in_range = true;
            for index in [IndexRole::I, IndexRole::J, IndexRole::L] {
                let value = t.get(index);
                if value == 0 || value > n {
                    in_range = false;
                    out.errors.push(Violation {
                        block: b,
                        slot: Some(t.m),
                        rule: Rule::OutOfRange { index, value },
                    });
                }
            }
            if !in_range {
                continue;
            }
            if t.m <= n && !classify_pattern(t).is_switching() {
                out.errors.push(Violation {
                    block: b,
                    slot: Some(t.m),
                    rule: Rule::NonSwitching,
                });
            }
            for (k, index) in [IndexRole::I, IndexRole::J, IndexRole::L]
                .into_iter()
                .enumerate()
            {
                let value = t.get(index);
                match first_use[k][value] {
                    Some(first_slot) => {
                        let v = Violation {
                            block: b,
                            slot: Some(t.m),
                            rule: Rule::NotPermutation {
                                index,
                                value,
                                first_slot,
                            },
                        };
                        if opts.allow_non_permutation {
                            out.warnings.push(v);
                        } else {
                            out.errors.push(v);
                        }
                    }
                    None => first_use[k][value] = Some(t.m),
                }
            }
        }
    }
    out
}

/// The two error blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorVector {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
}

impl ErrorVector {
    pub fn zeros(n: usize) -> Self {
        Self {
            e1: vec![0.0; n],
            e2: vec![0.0; n],
        }
    }

    pub fn block(&self, block: usize) -> &[f64] {
        if block == 1 {
            &self.e1
        } else {
            &self.e2
        }
    }

    /// `(e1, e2)` concatenated.
    pub fn stacked(&self) -> Vec<f64> {
        self.e1.iter().chain(&self.e2).copied().collect()
    }

    pub fn norm(&self) -> f64 {
        self.e1
            .iter()
            .chain(&self.e2)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// `V = e^T e / 2`.
    pub fn lyapunov(&self) -> f64 {
        0.5 * self.e1.iter().chain(&self.e2).map(|v| v * v).sum::<f64>()
    }
}

/// Checks that all eight states share dimension `n`.
pub fn common_dim(states: &Roles<StateVector>) -> Result<usize> {
    let n = states.x1.dim();
    for (_, s) in states.iter() {
        if s.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: s.dim(),
            });
        }
    }
    Ok(n)
}

pub fn compute_error(
    states: &Roles<StateVector>,
    scaling: &ScalingConfig,
    assignment: &SwitchAssignment,
) -> Result<ErrorVector> {
    let n = common_dim(states)?;
    scaling.dims_match(n)?;
    assignment.check_structure(n)?;
    let flat = flatten(states);
    let mut e = ErrorVector::zeros(n);
    error_into(n, &flat, scaling, assignment, &mut e.e1, &mut e.e2);
    Ok(e)
}

/// Role-major concatenation `[x1, x2, y1, y2, z1, z2, w1, w2]`.
pub(crate) fn flatten(states: &Roles<StateVector>) -> Vec<f64> {
    Role::ALL
        .iter()
        .flat_map(|&r| states.get(r).as_slice().iter().copied())
        .collect()
}

pub(crate) fn part(flat: &[f64], n: usize, role: Role) -> &[f64] {
    let k = role.index();
    &flat[k * n..(k + 1) * n]
}

/// Drive and response roles `[x, y, z, w]` of an error block.
pub(crate) fn block_roles(block: usize) -> [Role; 4] {
    if block == 1 {
        [Role::X1, Role::Y1, Role::Z1, Role::W1]
    } else {
        [Role::X2, Role::Y2, Role::Z2, Role::W2]
    }
}

/// Weighted sum of the terms of one slot applied to per-role vectors `v`:
/// `a[i] v_x[i] + b[j] v_y[j] - c[l] v_z[l] - d[m] v_w[m]`.
pub(crate) fn slot_combination(
    n: usize,
    flat: &[f64],
    scaling: &ScalingConfig,
    block: usize,
    t: SwitchTuple,
) -> f64 {
    let [rx, ry, rz, rw] = block_roles(block);
    let (i, j, l, m) = (t.i - 1, t.j - 1, t.l - 1, t.m - 1);
    scaling.coefficients(rx)[i] * part(flat, n, rx)[i]
        + scaling.coefficients(ry)[j] * part(flat, n, ry)[j]
        - scaling.coefficients(rz)[l] * part(flat, n, rz)[l]
        - scaling.coefficients(rw)[m] * part(flat, n, rw)[m]
}

pub(crate) fn error_into(
    n: usize,
    flat: &[f64],
    scaling: &ScalingConfig,
    assignment: &SwitchAssignment,
    e1: &mut [f64],
    e2: &mut [f64],
) {
    for (b, out) in [(1, e1), (2, e2)] {
        for t in assignment.tuples(b) {
            out[t.m - 1] = slot_combination(n, flat, scaling, b, t);
        }
    }
}

/// Componentwise scaled pair `[c_first * first, c_second * second]`, e.g. `S1 = A x`.
pub fn combined_signal(
    first: &StateVector,
    second: &StateVector,
    coef_first: &[f64],
    coef_second: &[f64],
) -> Result<Vec<f64>> {
    let n = first.dim();
    for len in [second.dim(), coef_first.len(), coef_second.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: len,
            });
        }
    }
    let scaled = |s: &StateVector, c: &[f64]| {
        s.as_slice()
            .iter()
            .zip(c)
            .map(|(x, k)| x * k)
            .collect::<Vec<_>>()
    };
    let mut out = scaled(first, coef_first);
    out.extend(scaled(second, coef_second));
    Ok(out)
}
