//! Pure-state algebra over subsystems of heterogeneous dimension.
//!
//! Flat indices are row-major with subsystem 0 most significant, so
//! `|x₀x₁…⟩` lives at `Σ xₘ · strideₘ` where `strideₘ = Π_{m'>m} dimsₘ'`.
//! Subsystem indices in the API are zero-based.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{QdcError, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};

/// Tolerance for checks that are exact in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for quantities accumulated over many terms.
pub const SUM_TOL: f64 = 1e-10;
/// Measurement branches below this probability are impossible.
pub const NEGLIGIBLE_PROBABILITY: f64 = 1e-12;
/// Largest state vector the simulator will allocate unless overridden.
pub const DEFAULT_AMPLITUDE_CAP: usize = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsystemLayout {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl SubsystemLayout {
    pub fn new(dims: &[usize]) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_AMPLITUDE_CAP)
    }

    /// Validates the dimensions and rejects layouts whose total dimension
    /// exceeds `cap` amplitudes.
    pub fn with_cap(dims: &[usize], cap: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(QdcError::Dimension("layout has no subsystems".into()));
        }
        if let Some((i, d)) = dims.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(QdcError::Dimension(format!(
                "subsystem {i} has dimension {d}, expected at least 2"
            )));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&t| t <= cap)
            .ok_or_else(|| {
                QdcError::CapacityLimit(format!(
                    "layout {dims:?} exceeds the amplitude cap of {cap}"
                ))
            })?;
        let mut strides = vec![1; dims.len()];
        for m in (0..dims.len() - 1).rev() {
            strides[m] = strides[m + 1] * dims[m + 1];
        }
        Ok(Self {
            dims: dims.to_vec(),
            strides,
            total,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn flat_index(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.dims.len() {
            return Err(QdcError::Dimension(format!(
                "ket has {} digits, layout has {} subsystems",
                digits.len(),
                self.dims.len()
            )));
        }
        let mut flat = 0;
        for (m, (&x, &d)) in digits.iter().zip(&self.dims).enumerate() {
            if x >= d {
                return Err(QdcError::Dimension(format!(
                    "digit {x} at subsystem {m} is out of range for dimension {d}"
                )));
            }
            flat += x * self.strides[m];
        }
        Ok(flat)
    }

    pub fn digits(&self, flat: usize) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| (flat / s) % d)
            .collect()
    }

    /// Checks that `targets` are distinct valid subsystem indices and returns
    /// the product of their dimensions.
    pub fn target_dim(&self, targets: &[usize]) -> Result<usize> {
        let mut seen = vec![false; self.dims.len()];
        for &t in targets {
            if t >= self.dims.len() {
                return Err(QdcError::Dimension(format!(
                    "subsystem {t} does not exist in a {}-subsystem layout",
                    self.dims.len()
                )));
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(QdcError::Dimension(format!("subsystem {t} repeated")));
            }
        }
        Ok(targets.iter().map(|&t| self.dims[t]).product())
    }

    /// Flat offsets of the local basis of `targets` (row-major over the
    /// targets in the given order) and the flat base indices of every
    /// configuration of the remaining subsystems.
    fn split(&self, targets: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut offsets = vec![0usize];
        for &t in targets {
            offsets = offsets
                .iter()
                .flat_map(|&o| (0..self.dims[t]).map(move |x| o + x * self.strides[t]))
                .collect();
        }
        let mut bases = vec![0usize];
        for m in (0..self.dims.len()).filter(|m| !targets.contains(m)) {
            bases = bases
                .iter()
                .flat_map(|&b| (0..self.dims[m]).map(move |x| b + x * self.strides[m]))
                .collect();
        }
        (offsets, bases)
    }
}

/// Complex amplitude vector over a [`SubsystemLayout`].
///
/// States built by [`superpose`], unitary [`apply_local`] calls and
/// measurement are unit norm; applying a non-unitary operator yields
/// whatever vector the operator produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedRadixState {
    layout: SubsystemLayout,
    amplitudes: Vec<Complex64>,
}

impl MixedRadixState {
    /// Wraps a raw amplitude vector, requiring unit norm within [`EXACT_TOL`].
    pub fn from_amplitudes(layout: SubsystemLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(QdcError::Dimension(format!(
                "{} amplitudes for a layout of total dimension {}",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        let state = Self { layout, amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > EXACT_TOL {
            return Err(QdcError::DegenerateState(format!(
                "amplitude vector has norm {norm}, expected 1"
            )));
        }
        Ok(state)
    }

    /// The basis ket `|digits⟩`.
    pub fn basis(layout: SubsystemLayout, digits: &[usize]) -> Result<Self> {
        let flat = layout.flat_index(digits)?;
        let mut amplitudes = vec![ZERO; layout.total_dim()];
        amplitudes[flat] = ONE;
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<Complex64> {
        Ok(self.amplitudes[self.layout.flat_index(digits)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Flat indices carrying a nonzero amplitude.
    pub fn support(&self) -> Vec<usize> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > EXACT_TOL)
            .map(|(i, _)| i)
            .collect()
    }

    /// Largest amplitude-wise deviation from `other`; no global-phase freedom.
    pub fn max_deviation(&self, other: &Self) -> Result<f64> {
        self.check_same_layout(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(inner_product(self, other)?.norm_sqr())
    }

    fn check_same_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(QdcError::Dimension(format!(
                "layout mismatch: {:?} vs {:?}",
                self.layout.dims(),
                other.layout.dims()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for MixedRadixState {
    /// Renders nonzero terms as `(re+imi)|digits⟩`.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for i in self.support() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let a = self.amplitudes[i];
            let ket: String = self
                .layout
                .digits(i)
                .iter()
                .map(|d| char::from_digit(*d as u32, 36).unwrap_or('?'))
                .collect();
            write!(f, "({:.6}{:+.6}i)|{ket}⟩", a.re, a.im)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Square matrix acting on an ordered list of subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOperator {
    matrix: CMatrix,
    targets: Vec<usize>,
}

impl LocalOperator {
    pub fn new(matrix: CMatrix, targets: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(QdcError::Dimension(format!(
                "operator matrix must be square and nonempty, got {:?}",
                matrix.dim()
            )));
        }
        if targets.is_empty() {
            return Err(QdcError::Dimension("operator has no targets".into()));
        }
        Ok(Self { matrix, targets })
    }

    /// Like [`LocalOperator::new`], additionally requiring `‖M†M − I‖ ≤ 1e-12`.
    pub fn unitary(matrix: CMatrix, targets: Vec<usize>) -> Result<Self> {
        let op = Self::new(matrix, targets)?;
        if !op.is_unitary() {
            return Err(QdcError::Argument("matrix is not unitary".into()));
        }
        Ok(op)
    }

    /// Like [`LocalOperator::new`], additionally requiring a Hermitian idempotent.
    pub fn projector(matrix: CMatrix, targets: Vec<usize>) -> Result<Self> {
        let op = Self::new(matrix, targets)?;
        if !op.is_projector() {
            return Err(QdcError::MeasurementSet(
                "matrix is not an orthogonal projector".into(),
            ));
        }
        Ok(op)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_unitary(&self) -> bool {
        let gram = linalg::dagger(&self.matrix).dot(&self.matrix);
        linalg::max_abs_diff(&gram, &linalg::identity(self.dim())) <= EXACT_TOL
    }

    pub fn is_projector(&self) -> bool {
        let sq = self.matrix.dot(&self.matrix);
        linalg::max_abs_diff(&sq, &self.matrix) <= EXACT_TOL
            && linalg::is_hermitian(&self.matrix, EXACT_TOL)
    }

    /// Same matrix on different subsystems.
    pub fn retarget(&self, targets: Vec<usize>) -> Result<Self> {
        Self::new(self.matrix.clone(), targets)
    }

    /// `other · self` on the same targets: apply `self` first.
    pub fn then(&self, other: &Self) -> Result<Self> {
        if self.targets != other.targets {
            return Err(QdcError::Dimension(
                "composed operators must share targets".into(),
            ));
        }
        Self::new(other.matrix.dot(&self.matrix), self.targets.clone())
    }
}

/// Builds `Σ cₖ|ketₖ⟩` normalized to unit norm. Duplicate kets add up.
pub fn superpose(
    layout: &SubsystemLayout,
    terms: &[(Complex64, Vec<usize>)],
) -> Result<MixedRadixState> {
    if terms.is_empty() {
        return Err(QdcError::DegenerateState("no terms".into()));
    }
    let mut amplitudes = vec![ZERO; layout.total_dim()];
    for (coefficient, ket) in terms {
        amplitudes[layout.flat_index(ket)?] += coefficient;
    }
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm <= EXACT_TOL {
        return Err(QdcError::DegenerateState(
            "coefficients cancel to the zero vector".into(),
        ));
    }
    amplitudes.iter_mut().for_each(|a| *a /= norm);
    Ok(MixedRadixState {
        layout: layout.clone(),
        amplitudes,
    })
}

/// `(I ⊗ M ⊗ I)|ψ⟩` with `M` acting on `op.targets()` in the listed order.
pub fn apply_local(state: &MixedRadixState, op: &LocalOperator) -> Result<MixedRadixState> {
    let layout = &state.layout;
    let arity = layout.target_dim(op.targets())?;
    if arity != op.dim() {
        return Err(QdcError::Dimension(format!(
            "operator of dimension {} on targets {:?} of joint dimension {arity}",
            op.dim(),
            op.targets()
        )));
    }
    let (offsets, bases) = layout.split(op.targets());
    let entries: Vec<(usize, usize, Complex64)> = op
        .matrix()
        .indexed_iter()
        .filter(|(_, v)| **v != ZERO)
        .map(|((r, c), v)| (offsets[r], offsets[c], *v))
        .collect();
    let mut out = vec![ZERO; layout.total_dim()];
    for base in bases {
        for &(r, c, v) in &entries {
            out[base + r] += v * state.amplitudes[base + c];
        }
    }
    Ok(MixedRadixState {
        layout: layout.clone(),
        amplitudes: out,
    })
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner_product(a: &MixedRadixState, b: &MixedRadixState) -> Result<Complex64> {
    a.check_same_layout(b)?;
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// A complete set of mutually orthogonal projectors on common targets.
#[derive(Debug, Clone)]
pub struct ProjectiveMeasurement {
    projectors: Vec<LocalOperator>,
}

impl ProjectiveMeasurement {
    pub fn new(projectors: Vec<LocalOperator>) -> Result<Self> {
        let first = projectors
            .first()
            .ok_or_else(|| QdcError::MeasurementSet("empty projector set".into()))?;
        let dim = first.dim();
        let mut sum = Array2::from_elem((dim, dim), ZERO);
        for (k, p) in projectors.iter().enumerate() {
            if p.targets() != first.targets() || p.dim() != dim {
                return Err(QdcError::MeasurementSet(format!(
                    "projector {k} acts on different subsystems"
                )));
            }
            if !p.is_projector() {
                return Err(QdcError::MeasurementSet(format!(
                    "operator {k} is not an orthogonal projector"
                )));
            }
            for (l, q) in projectors.iter().enumerate().skip(k + 1) {
                let prod = p.matrix().dot(q.matrix());
                if prod.iter().any(|z| z.norm() > EXACT_TOL) {
                    return Err(QdcError::MeasurementSet(format!(
                        "projectors {k} and {l} are not orthogonal"
                    )));
                }
            }
            sum += p.matrix();
        }
        if linalg::max_abs_diff(&sum, &linalg::identity(dim)) > EXACT_TOL {
            return Err(QdcError::MeasurementSet(
                "projectors do not sum to the identity".into(),
            ));
        }
        Ok(Self { projectors })
    }

    pub fn projectors(&self) -> &[LocalOperator] {
        &self.projectors
    }

    /// The same validated set on other subsystems of matching dimensions.
    pub fn retarget(&self, targets: &[usize]) -> Result<Self> {
        let projectors = self
            .projectors
            .iter()
            .map(|p| p.retarget(targets.to_vec()))
            .collect::<Result<_>>()?;
        Ok(Self { projectors })
    }

    pub fn targets(&self) -> &[usize] {
        self.projectors[0].targets()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    /// Zero-based index into the projector set.
    pub outcome: usize,
    pub post: MixedRadixState,
    /// Born probability `⟨ψ|Pₖ|ψ⟩` of the returned outcome.
    pub probability: f64,
}

/// Born probabilities `⟨ψ|Pₖ|ψ⟩` for every projector of the set.
pub fn born_probabilities(
    state: &MixedRadixState,
    measurement: &ProjectiveMeasurement,
) -> Result<Vec<f64>> {
    measurement
        .projectors()
        .iter()
        .map(|p| Ok(apply_local(state, p)?.norm().powi(2)))
        .collect()
}

/// Samples one outcome with Born probabilities and collapses the state.
///
/// Exactly one uniform draw is consumed per call. Branches with probability
/// below [`NEGLIGIBLE_PROBABILITY`] are dropped and the rest renormalized.
pub fn measure_projective<R: Rng + ?Sized>(
    state: &MixedRadixState,
    measurement: &ProjectiveMeasurement,
    rng: &mut R,
) -> Result<MeasurementOutcome> {
    let projected: Vec<MixedRadixState> = measurement
        .projectors()
        .iter()
        .map(|p| apply_local(state, p))
        .collect::<Result<_>>()?;
    let probs: Vec<f64> = projected.iter().map(|s| s.norm().powi(2)).collect();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(QdcError::DegenerateState(format!(
            "Born probabilities sum to {total}; input state is not normalized"
        )));
    }
    let live: f64 = probs.iter().filter(|&&p| p >= NEGLIGIBLE_PROBABILITY).sum();
    let draw: f64 = rng.random::<f64>() * live;
    let mut cumulative = 0.0;
    let mut chosen = None;
    for (k, &p) in probs.iter().enumerate() {
        if p < NEGLIGIBLE_PROBABILITY {
            continue;
        }
        chosen = Some(k);
        cumulative += p;
        if draw < cumulative {
            break;
        }
    }
    let outcome = chosen.expect("a normalized state has a live branch");
    let probability = probs[outcome];
    let scale = 1.0 / probability.sqrt();
    let mut post = projected
        .into_iter()
        .nth(outcome)
        .expect("outcome in range");
    post.amplitudes.iter_mut().for_each(|a| *a *= scale);
    Ok(MeasurementOutcome {
        outcome,
        post,
        probability,
    })
}

/// Reduced density operator on `keep` (in the listed order).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: SubsystemLayout,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity.
    pub fn new(layout: SubsystemLayout, matrix: CMatrix) -> Result<Self> {
        if matrix.dim() != (layout.total_dim(), layout.total_dim()) {
            return Err(QdcError::Dimension(format!(
                "density matrix of shape {:?} for layout of dimension {}",
                matrix.dim(),
                layout.total_dim()
            )));
        }
        if !linalg::is_hermitian(&matrix, EXACT_TOL) {
            return Err(QdcError::Argument("density matrix is not Hermitian".into()));
        }
        let tr = linalg::trace(&matrix);
        if (tr - ONE).norm() > EXACT_TOL {
            return Err(QdcError::Argument(format!("density matrix has trace {tr}")));
        }
        if let Some(l) = linalg::hermitian_eigenvalues(&matrix).first() {
            if *l < -SUM_TOL {
                return Err(QdcError::Argument(format!(
                    "density matrix has negative eigenvalue {l}"
                )));
            }
        }
        Ok(Self { layout, matrix })
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.layout != other.layout {
            return Err(QdcError::Dimension("density layouts differ".into()));
        }
        Ok(linalg::trace_distance(&self.matrix, &other.matrix))
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }
}

pub fn partial_trace(state: &MixedRadixState, keep: &[usize]) -> Result<DensityMatrix> {
    let layout = &state.layout;
    let kept_dim = layout.target_dim(keep)?;
    if keep.is_empty() {
        return Err(QdcError::Dimension("nothing to keep".into()));
    }
    let kept_layout = SubsystemLayout::with_cap(
        &keep.iter().map(|&k| layout.dims()[k]).collect::<Vec<_>>(),
        usize::MAX,
    )?;
    let (offsets, bases) = layout.split(keep);
    debug_assert_eq!(offsets.len(), kept_dim);
    // ρ[r][c] = Σ_b ψ[b + o_r] ψ*[b + o_c]
    let matrix = Array2::from_shape_fn((kept_dim, kept_dim), |(r, c)| {
        bases
            .iter()
            .map(|&b| state.amplitudes[b + offsets[r]] * state.amplitudes[b + offsets[c]].conj())
            .sum()
    });
    DensityMatrix::new(kept_layout, matrix)
}
