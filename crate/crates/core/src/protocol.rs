//! Dense-coding primitives: the qutrit encoding unitaries, the shared
//! channel state, collective encoding, the two-receiver state table, the
//! pair projectors used in the first decoding round and the coherent bases
//! used in the second.
//!
//! Receiver slots are numbered from 1. Slot `i` of an `N`-receiver channel
//! owns qutrit subsystem `i - 1` (after transfer) and qubit subsystem
//! `N + i - 1`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::OnceLock;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QdcError, Result};
use crate::hilbert::{
    apply_local, measure_projective, superpose, LocalOperator, MixedRadixState,
    ProjectiveMeasurement, SubsystemLayout, DEFAULT_AMPLITUDE_CAP,
};
use crate::linalg::{self, c, CMatrix, ONE, ZERO};

/// Sender's classical message: a shift per qutrit plus one sign bit that only
/// qutrit 1 can carry.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawMessageWord")]
pub struct MessageWord {
    n_receivers: usize,
    shift1: u8,
    sign: u8,
    shifts_rest: Vec<u8>,
}

#[derive(Deserialize)]
struct RawMessageWord {
    n_receivers: usize,
    shift1: u8,
    sign: u8,
    shifts_rest: Vec<u8>,
}

impl TryFrom<RawMessageWord> for MessageWord {
    type Error = QdcError;

    fn try_from(raw: RawMessageWord) -> Result<Self> {
        let word = Self::new(raw.shift1, raw.sign, raw.shifts_rest)?;
        if word.n_receivers != raw.n_receivers {
            return Err(QdcError::Format(format!(
                "n_receivers {} disagrees with {} shifts",
                raw.n_receivers, word.n_receivers
            )));
        }
        Ok(word)
    }
}

impl MessageWord {
    pub fn new(shift1: u8, sign: u8, shifts_rest: Vec<u8>) -> Result<Self> {
        if shift1 > 2 || shifts_rest.iter().any(|&a| a > 2) {
            return Err(QdcError::Argument("shifts must be 0, 1 or 2".into()));
        }
        if sign > 1 {
            return Err(QdcError::Argument("sign bit must be 0 or 1".into()));
        }
        Ok(Self {
            n_receivers: shifts_rest.len() + 1,
            shift1,
            sign,
            shifts_rest,
        })
    }

    /// From all `N` shifts `(a₁, …, a_N)` and the sign bit.
    pub fn from_shifts(shifts: &[u8], sign: u8) -> Result<Self> {
        let (&first, rest) = shifts
            .split_first()
            .ok_or_else(|| QdcError::Argument("a message needs at least one shift".into()))?;
        Self::new(first, sign, rest.to_vec())
    }

    /// From the component listing `(a₁, b, a₂, …, a_N)`.
    pub fn from_components(components: &[u8]) -> Result<Self> {
        match components {
            [a1, b, rest @ ..] => Self::new(*a1, *b, rest.to_vec()),
            _ => Err(QdcError::Argument(
                "expected at least two components a1,b".into(),
            )),
        }
    }

    /// Inverse of [`MessageWord::index`].
    pub fn from_index(n: usize, index: u64) -> Result<Self> {
        let count = message_count(n)?;
        if index >= count {
            return Err(QdcError::Argument(format!(
                "message index {index} outside [0, {count})"
            )));
        }
        let trits = count / 2;
        let sign = (index / trits) as u8;
        let mut rem = index % trits;
        let mut shifts = Vec::with_capacity(n);
        for _ in 0..n {
            shifts.push((rem % 3) as u8);
            rem /= 3;
        }
        Self::from_shifts(&shifts, sign)
    }

    /// Every message for `n` receivers in index order.
    pub fn all(n: usize) -> Result<impl Iterator<Item = MessageWord>> {
        let count = message_count(n)?;
        Ok((0..count).map(move |i| Self::from_index(n, i).expect("index in range")))
    }

    pub fn n_receivers(&self) -> usize {
        self.n_receivers
    }

    pub fn shift1(&self) -> u8 {
        self.shift1
    }

    /// The sign bit `b`; the encoded relative phase is `(−1)^b`.
    pub fn sign(&self) -> u8 {
        self.sign
    }

    pub fn shifts_rest(&self) -> &[u8] {
        &self.shifts_rest
    }

    /// `(a₁, …, a_N)`.
    pub fn shifts(&self) -> Vec<u8> {
        std::iter::once(self.shift1)
            .chain(self.shifts_rest.iter().copied())
            .collect()
    }

    /// `(a₁, b, a₂, …, a_N)`.
    pub fn components(&self) -> Vec<u8> {
        let mut out = vec![self.shift1, self.sign];
        out.extend(&self.shifts_rest);
        out
    }

    /// `b·3^N + Σ aᵢ·3^{i−1}`.
    pub fn index(&self) -> u64 {
        let trits = self
            .shifts()
            .iter()
            .rev()
            .fold(0u64, |acc, &a| acc * 3 + a as u64);
        self.sign as u64 * 3u64.pow(self.n_receivers as u32) + trits
    }

    /// Label `(k, ±)` of the printed two-receiver state this message
    /// produces, with `k − 1 = 3a₂ + a₁`.
    pub fn canonical_label(&self) -> Option<(usize, Sign)> {
        (self.n_receivers == 2).then(|| {
            (
                1 + self.shift1 as usize + 3 * self.shifts_rest[0] as usize,
                Sign::from_bit(self.sign),
            )
        })
    }
}

impl fmt::Display for MessageWord {
    /// `(a₁,b,a₂,…)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components().iter().map(u8::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `2·3^N`, the number of distinct messages.
pub fn message_count(n: usize) -> Result<u64> {
    if n == 0 {
        return Err(QdcError::Argument(
            "at least one receiver is required".into(),
        ));
    }
    u32::try_from(n)
        .ok()
        .and_then(|n| 3u64.checked_pow(n))
        .and_then(|t| t.checked_mul(2))
        .ok_or_else(|| QdcError::CapacityLimit(format!("2·3^{n} does not fit in 64 bits")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_bit(b: u8) -> Self {
        if b == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// The six encoding matrices `U_{a,b}` entry for entry, indexed `[a][b]`.
const UNITARY_TABLE: [[[[i8; 3]; 3]; 2]; 3] = [
    [
        [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        [[1, 0, 0], [0, -1, 0], [0, 0, 1]],
    ],
    [
        [[0, 0, 1], [1, 0, 0], [0, 1, 0]],
        [[0, 0, 1], [1, 0, 0], [0, -1, 0]],
    ],
    [
        [[0, 1, 0], [0, 0, 1], [1, 0, 0]],
        [[0, -1, 0], [0, 0, 1], [1, 0, 0]],
    ],
];

/// Build-once table of the six qutrit encoding unitaries.
pub struct UnitaryLibrary {
    matrices: [[CMatrix; 2]; 3],
}

impl UnitaryLibrary {
    /// The shared library; panics on first use if a printed matrix
    /// disagrees with `U_{a,b}|j⟩ = (−1)^{b·[j=1]} |j+a mod 3⟩`.
    pub fn get() -> &'static UnitaryLibrary {
        static LIB: OnceLock<UnitaryLibrary> = OnceLock::new();
        LIB.get_or_init(|| {
            let build = |a: usize, b: usize| {
                Array2::from_shape_fn((3, 3), |(r, col)| {
                    c(UNITARY_TABLE[a][b][r][col] as f64, 0.0)
                })
            };
            let lib = UnitaryLibrary {
                matrices: [0, 1, 2].map(|a| [build(a, 0), build(a, 1)]),
            };
            if let Err(e) = lib.verify() {
                panic!("unitary table is inconsistent: {e}");
            }
            lib
        })
    }

    pub fn matrix(&self, a: u8, b: u8) -> Result<&CMatrix> {
        if a > 2 || b > 1 {
            return Err(QdcError::Argument(format!(
                "no encoding unitary U_{{{a},{b}}}"
            )));
        }
        Ok(&self.matrices[a as usize][b as usize])
    }

    /// Checks every member for unitarity and against the closed form.
    pub fn verify(&self) -> Result<()> {
        for a in 0..3u8 {
            for b in 0..2u8 {
                let m = &self.matrices[a as usize][b as usize];
                let gram = linalg::dagger(m).dot(m);
                if linalg::max_abs_diff(&gram, &linalg::identity(3)) > 1e-12 {
                    return Err(QdcError::Argument(format!("U_{{{a},{b}}} is not unitary")));
                }
                for j in 0..3usize {
                    let sign = if b == 1 && j == 1 { -1.0 } else { 1.0 };
                    let target = (j + a as usize) % 3;
                    for r in 0..3 {
                        let expected = if r == target { sign } else { 0.0 };
                        if m[[r, j]] != c(expected, 0.0) {
                            return Err(QdcError::Argument(format!(
                                "U_{{{a},{b}}} column {j} disagrees with the closed form"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// `U_{a,b}` acting on subsystem 0.
pub fn qutrit_unitary(a: u8, b: u8) -> Result<LocalOperator> {
    qutrit_unitary_on(a, b, 0)
}

pub fn qutrit_unitary_on(a: u8, b: u8, target: usize) -> Result<LocalOperator> {
    let m = UnitaryLibrary::get().matrix(a, b)?;
    LocalOperator::new(m.clone(), vec![target])
}

/// Layout `(3,…,3,2,…,2)` with `n` of each.
pub fn channel_layout(n: usize, cap: usize) -> Result<SubsystemLayout> {
    if n == 0 {
        return Err(QdcError::Argument(
            "at least one receiver is required".into(),
        ));
    }
    let dims: Vec<usize> = std::iter::repeat_n(3, n)
        .chain(std::iter::repeat_n(2, n))
        .collect();
    SubsystemLayout::with_cap(&dims, cap)
}

/// `(|0…0⟩ + |1…1⟩)/√2` over `n` qutrits and `n` qubits.
pub fn channel_state(n: usize) -> Result<MixedRadixState> {
    channel_state_with_cap(n, DEFAULT_AMPLITUDE_CAP)
}

pub fn channel_state_with_cap(n: usize, cap: usize) -> Result<MixedRadixState> {
    let layout = channel_layout(n, cap)?;
    superpose(&layout, &[(ONE, vec![0; 2 * n]), (ONE, vec![1; 2 * n])])
}

/// Applies `U_{a₁,b}` to qutrit 1 and `U_{aᵢ,0}` to qutrit `i ≥ 2`.
pub fn encode(state: &MixedRadixState, message: &MessageWord) -> Result<MixedRadixState> {
    let n = message.n_receivers();
    let dims = state.layout().dims();
    let expected = dims.len() == 2 * n
        && dims[..n].iter().all(|&d| d == 3)
        && dims[n..].iter().all(|&d| d == 2);
    if !expected {
        return Err(QdcError::Argument(format!(
            "state layout {dims:?} is not a {n}-receiver channel"
        )));
    }
    let mut out = apply_local(
        state,
        &qutrit_unitary_on(message.shift1(), message.sign(), 0)?,
    )?;
    for (i, &a) in message.shifts_rest().iter().enumerate() {
        out = apply_local(&out, &qutrit_unitary_on(a, 0, i + 1)?)?;
    }
    Ok(out)
}

/// The printed two-receiver kets `|x₁x₂x₃x₄⟩` for states 1..9: the first
/// term, and the term carrying the sign.
const CANONICAL_KETS: [([usize; 4], [usize; 4]); 9] = [
    ([0, 0, 0, 0], [1, 1, 1, 1]),
    ([1, 0, 0, 0], [2, 1, 1, 1]),
    ([2, 0, 0, 0], [0, 1, 1, 1]),
    ([0, 1, 0, 0], [1, 2, 1, 1]),
    ([1, 1, 0, 0], [2, 2, 1, 1]),
    ([2, 1, 0, 0], [0, 2, 1, 1]),
    ([0, 2, 0, 0], [1, 0, 1, 1]),
    ([1, 2, 0, 0], [2, 0, 1, 1]),
    ([2, 2, 0, 0], [0, 0, 1, 1]),
];

/// State `|μ_k^±⟩` of the two-receiver table, built from its printed kets.
pub fn canonical_state(k: usize, sign: Sign) -> Result<MixedRadixState> {
    if !(1..=9).contains(&k) {
        return Err(QdcError::Argument(format!("state label {k} outside 1..=9")));
    }
    let (first, second) = CANONICAL_KETS[k - 1];
    let coefficient = match sign {
        Sign::Plus => ONE,
        Sign::Minus => -ONE,
    };
    superpose(
        &channel_layout(2, DEFAULT_AMPLITUDE_CAP)?,
        &[(ONE, first.to_vec()), (coefficient, second.to_vec())],
    )
}

/// The message whose encoding yields `|μ_k^±⟩`.
pub fn canonical_word(k: usize, sign: Sign) -> Result<MessageWord> {
    if !(1..=9).contains(&k) {
        return Err(QdcError::Argument(format!("state label {k} outside 1..=9")));
    }
    MessageWord::new(((k - 1) % 3) as u8, sign.bit(), vec![((k - 1) / 3) as u8])
}

/// All 18 labels in table order: `(1,+), (1,−), (2,+), …`.
pub fn canonical_labels() -> impl Iterator<Item = (usize, Sign)> {
    (1..=9).flat_map(|k| [(k, Sign::Plus), (k, Sign::Minus)])
}

/// A receiver's qutrit and qubit subsystem indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceiverPair {
    pub qutrit: usize,
    pub qubit: usize,
}

impl ReceiverPair {
    /// Pair held by one-based `slot` in an `n`-receiver channel.
    pub fn for_slot(n: usize, slot: usize) -> Result<Self> {
        if slot == 0 || slot > n {
            return Err(QdcError::Argument(format!("slot {slot} outside 1..={n}")));
        }
        Ok(Self {
            qutrit: slot - 1,
            qubit: n + slot - 1,
        })
    }

    pub fn targets(&self) -> [usize; 2] {
        [self.qutrit, self.qubit]
    }
}

/// Local index of `|t q⟩` on a (qutrit, qubit) pair.
fn pair_index(t: usize, q: usize) -> usize {
    2 * t + q
}

/// `P₁, P₂, P₃` on a (qutrit, qubit) pair: `P_{a+1}` projects onto
/// `span{|a,0⟩, |a⊕1,1⟩}`.
pub struct PairProjectorSet {
    measurement: ProjectiveMeasurement,
}

impl PairProjectorSet {
    pub fn get() -> &'static PairProjectorSet {
        static SET: OnceLock<PairProjectorSet> = OnceLock::new();
        SET.get_or_init(|| {
            let projectors = (0..3)
                .map(|a| {
                    let mut m = Array2::from_elem((6, 6), ZERO);
                    m[[pair_index(a, 0), pair_index(a, 0)]] = ONE;
                    m[[pair_index((a + 1) % 3, 1), pair_index((a + 1) % 3, 1)]] = ONE;
                    LocalOperator::projector(m, vec![0, 1])
                })
                .collect::<Result<Vec<_>>>()
                .expect("pair projectors are projectors");
            PairProjectorSet {
                measurement: ProjectiveMeasurement::new(projectors)
                    .expect("pair projectors form a complete orthogonal set"),
            }
        })
    }

    /// Matrix of `P_{outcome}` for `outcome ∈ {1,2,3}`.
    pub fn matrix(&self, outcome: usize) -> Result<&CMatrix> {
        if !(1..=3).contains(&outcome) {
            return Err(QdcError::Argument(format!("no projector P{outcome}")));
        }
        Ok(self.measurement.projectors()[outcome - 1].matrix())
    }

    pub fn on(&self, pair: ReceiverPair) -> Result<ProjectiveMeasurement> {
        self.measurement.retarget(&pair.targets())
    }
}

/// One-based projector label `P_k` → local qutrit shift `k − 1`.
pub fn projector_outcome_to_shift(outcome: usize) -> Result<u8> {
    match outcome {
        1..=3 => Ok((outcome - 1) as u8),
        _ => Err(QdcError::Argument(format!("no projector P{outcome}"))),
    }
}

/// `(|a,0⟩ ± |a⊕1,1⟩)/√2` on a (qutrit, qubit) pair, plus the projector onto
/// the 4-dimensional complement.
pub struct CoherentBasis {
    shift: u8,
    plus: Vec<Complex64>,
    minus: Vec<Complex64>,
    measurement: ProjectiveMeasurement,
}

impl CoherentBasis {
    pub fn get(shift: u8) -> Result<&'static CoherentBasis> {
        static BASES: OnceLock<[CoherentBasis; 3]> = OnceLock::new();
        if shift > 2 {
            return Err(QdcError::Argument(format!("shift {shift} outside 0..=2")));
        }
        let bases = BASES.get_or_init(|| [0, 1, 2].map(Self::build));
        Ok(&bases[shift as usize])
    }

    fn build(shift: u8) -> CoherentBasis {
        let a = shift as usize;
        let h = c(FRAC_1_SQRT_2, 0.0);
        let mut plus = vec![ZERO; 6];
        let mut minus = vec![ZERO; 6];
        plus[pair_index(a, 0)] = h;
        plus[pair_index((a + 1) % 3, 1)] = h;
        minus[pair_index(a, 0)] = h;
        minus[pair_index((a + 1) % 3, 1)] = -h;
        let p_plus = linalg::outer(&plus, &plus);
        let p_minus = linalg::outer(&minus, &minus);
        let complement = linalg::identity(6) - &p_plus - &p_minus;
        let projectors = [p_plus, p_minus, complement]
            .into_iter()
            .map(|m| LocalOperator::projector(m, vec![0, 1]))
            .collect::<Result<Vec<_>>>()
            .expect("coherent basis projectors are projectors");
        CoherentBasis {
            shift,
            plus,
            minus,
            measurement: ProjectiveMeasurement::new(projectors)
                .expect("coherent basis is complete"),
        }
    }

    pub fn shift(&self) -> u8 {
        self.shift
    }

    pub fn plus(&self) -> &[Complex64] {
        &self.plus
    }

    pub fn minus(&self) -> &[Complex64] {
        &self.minus
    }

    /// Outcomes in order plus, minus, complement.
    pub fn on(&self, pair: ReceiverPair) -> Result<ProjectiveMeasurement> {
        self.measurement.retarget(&pair.targets())
    }

    /// Projector onto `|plus⟩` (`sigma = +1`) or `|minus⟩` (`sigma = −1`).
    pub fn sign_projector(&self, sigma: i8, pair: ReceiverPair) -> Result<LocalOperator> {
        let k = match sigma {
            1 => 0,
            -1 => 1,
            _ => return Err(QdcError::Argument(format!("sigma {sigma} is not ±1"))),
        };
        self.measurement.projectors()[k].retarget(pair.targets().to_vec())
    }
}

/// Round-1 measurement of one receiver pair; returns the one-based projector
/// label and the post-measurement state.
pub fn pair_measure<R: Rng + ?Sized>(
    state: &MixedRadixState,
    pair: ReceiverPair,
    rng: &mut R,
) -> Result<(usize, MixedRadixState, f64)> {
    let m = measure_projective(state, &PairProjectorSet::get().on(pair)?, rng)?;
    Ok((m.outcome + 1, m.post, m.probability))
}

/// Round-2 measurement in the coherent basis selected by `shift`.
///
/// A complement outcome means the wrong basis was chosen or the state is not
/// a protocol state, and is reported as [`QdcError::ProtocolViolation`].
pub fn coherent_measure<R: Rng + ?Sized>(
    state: &MixedRadixState,
    pair: ReceiverPair,
    shift: u8,
    rng: &mut R,
) -> Result<(i8, MixedRadixState)> {
    let basis = CoherentBasis::get(shift)?;
    let m = measure_projective(state, &basis.on(pair)?, rng)?;
    match m.outcome {
        0 => Ok((1, m.post)),
        1 => Ok((-1, m.post)),
        _ => Err(QdcError::ProtocolViolation(format!(
            "complement outcome in coherent basis a={shift} on subsystems {:?} (p = {:.6})",
            pair.targets(),
            m.probability
        ))),
    }
}

/// Combines the round-1 shifts with the round-2 signs: `b = 0` iff `Πσᵢ = +1`.
pub fn reconstruct_message(shifts: &[u8], sigmas: &[i8]) -> Result<MessageWord> {
    if shifts.len() != sigmas.len() {
        return Err(QdcError::Argument(format!(
            "{} shifts but {} signs",
            shifts.len(),
            sigmas.len()
        )));
    }
    if let Some(s) = sigmas.iter().find(|&&s| s != 1 && s != -1) {
        return Err(QdcError::Argument(format!("sigma {s} is not ±1")));
    }
    let parity: i8 = sigmas.iter().product();
    MessageWord::from_shifts(shifts, if parity == 1 { 0 } else { 1 })
}
