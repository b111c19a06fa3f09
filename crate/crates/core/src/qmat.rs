//! Dense complex linear algebra and quantum-state primitives.
//!
//! Composite systems use one ordering convention throughout: for subsystem
//! dimensions `dims = [d0, d1, ..., dk]` the basis index of the composite is
//! the mixed-radix number whose most significant digit belongs to subsystem 0.
//! For two qubits this gives the familiar order `|00>, |01>, |10>, |11>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, InvariantResiduals, Result};
use crate::tolerance::{tolerances, Tolerances};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn diag_matrix(values: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Kronecker product of a list of factors, left to right.
pub fn tensor_all<'a, It>(factors: It) -> ComplexMatrix
where
    It: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Strides of the mixed-radix index; subsystem 0 is most significant.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Splits a composite basis index into per-subsystem digits.
pub fn digits(index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    let mut rest = index;
    for k in (0..dims.len()).rev() {
        out[k] = rest % dims[k];
        rest /= dims[k];
    }
    out
}

/// Embeds an operator acting on subsystem `sys` into the full space.
pub fn embed(op: &ComplexMatrix, dims: &[usize], sys: usize) -> Result<ComplexMatrix> {
    if sys >= dims.len() {
        return Err(Error::InvalidSubsystem {
            index: sys,
            count: dims.len(),
        });
    }
    if op.nrows() != dims[sys] || op.ncols() != dims[sys] {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but subsystem {} has dimension {}",
            op.nrows(),
            op.ncols(),
            sys,
            dims[sys]
        )));
    }
    let left: usize = dims[..sys].iter().product();
    let right: usize = dims[sys + 1..].iter().product();
    Ok(ComplexMatrix::identity(left, left)
        .kronecker(op)
        .kronecker(&ComplexMatrix::identity(right, right)))
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl Eigen {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = real_diag(&self.values);
        &self.vectors * d * self.vectors.adjoint()
    }

    /// `f(H) = V f(Λ) V†`.
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> ComplexMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let mut col = scaled.column_mut(j);
            col *= f(v);
        }
        scaled * self.vectors.adjoint()
    }
}

fn to_faer(m: &ComplexMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, C64>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

// nalgebra's symmetric eigensolver and SVD return inaccurate vectors on
// degenerate spectra (e.g. tensor powers), so the decompositions go through
// faer. Both only fail on non-finite input.
const NON_FINITE: &str = "matrix entries must be finite";

/// Eigendecomposition of a matrix assumed Hermitian (only the Hermitian part
/// is used). Eigenvalues are sorted ascending.
pub fn eigh(m: &ComplexMatrix) -> Eigen {
    let n = m.nrows();
    if n == 0 {
        return Eigen {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        };
    }
    let herm = to_faer(&(m + m.adjoint()).scale(0.5));
    let evd = herm.self_adjoint_eigen(faer::Side::Lower).expect(NON_FINITE);
    let (s, u) = (evd.S(), evd.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
    let values = order.iter().map(|&k| s[k].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    Eigen { values, vectors }
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn eigvalsh(m: &ComplexMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return vec![];
    }
    let herm = to_faer(&(m + m.adjoint()).scale(0.5));
    let mut values = herm.self_adjoint_eigenvalues(faer::Side::Lower).expect(NON_FINITE);
    values.sort_by(f64::total_cmp);
    values
}

/// Thin singular value decomposition `M = U diag(s) V†`, `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v_adjoint: ComplexMatrix,
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let dec = to_faer(m).thin_svd().expect(NON_FINITE);
    let s = dec.S();
    Svd {
        u: from_faer(dec.U()),
        singular_values: (0..m.nrows().min(m.ncols())).map(|k| s[k].re).collect(),
        v_adjoint: from_faer(dec.V()).adjoint(),
    }
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let values = to_faer(m).singular_values().expect(NON_FINITE);
    values.iter().sum()
}

/// Principal square root of a PSD matrix. Eigenvalues within rounding noise
/// of zero are set to zero, since their square roots would otherwise be
/// amplified to ~1e-8.
pub fn sqrt_psd(m: &ComplexMatrix) -> ComplexMatrix {
    let eig = eigh(m);
    let scale = eig.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let floor = 16.0 * m.nrows() as f64 * f64::EPSILON * scale;
    eig.map(|v| c(if v > floor { v.sqrt() } else { 0.0 }, 0.0))
}

/// A Hermitian matrix on a single system (or a composite treated as one).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &tolerances())
    }

    pub fn with_tolerances(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !is_finite(&matrix) {
            return Err(Error::NonFinite);
        }
        let residual = hermiticity_residual(&matrix);
        if residual > tol.herm {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self { matrix })
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Self {
        Self {
            matrix: real_diag(values),
        }
    }

    /// `|k><k|` on a `dim`-level system.
    pub fn projector(dim: usize, k: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        Self::diagonal(&v)
    }

    /// `V diag(values) V†` for a unitary `V`; the columns of `basis` are the
    /// eigenvectors.
    pub fn from_spectrum(basis: &ComplexMatrix, values: &[f64]) -> Self {
        let m = basis * real_diag(values) * basis.adjoint();
        let herm = (&m + m.adjoint()).scale(0.5);
        Self { matrix: herm }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.scale(s),
        }
    }

    pub fn eigen(&self) -> Eigen {
        eigh(&self.matrix)
    }

    /// Largest |eigenvalue|.
    pub fn operator_norm(&self) -> f64 {
        self.eigen()
            .values
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Spectral decomposition of a Hermitian operator; fails on non-Hermitian
/// input.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<Eigen> {
    let op = HermitianOperator::new(m.clone())?;
    Ok(op.eigen())
}

/// `exp(−iθH)` through the eigendecomposition of `H`.
pub fn unitary_of(h: &HermitianOperator, theta: f64) -> ComplexMatrix {
    h.eigen().map(|e| C64::from_polar(1.0, -theta * e))
}

/// A normalized state vector on a composite system.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    dims: Vec<usize>,
    amplitudes: ComplexVector,
}

impl Ket {
    pub fn new(dims: Vec<usize>, amplitudes: ComplexVector) -> Result<Self> {
        check_dims(&dims, amplitudes.len())?;
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let residual = (amplitudes.norm() - 1.0).abs();
        if residual > tolerances().norm {
            return Err(Error::NotNormalized { residual });
        }
        Ok(Self { dims, amplitudes })
    }

    /// Normalizes the amplitudes first; fails on the zero vector.
    pub fn normalized(dims: Vec<usize>, amplitudes: ComplexVector) -> Result<Self> {
        let n = amplitudes.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        Self::new(dims, amplitudes.unscale(n))
    }

    /// Computational basis state for the given digits.
    pub fn basis(dims: Vec<usize>, digits_: &[usize]) -> Result<Self> {
        if digits_.len() != dims.len() || digits_.iter().zip(&dims).any(|(d, n)| d >= n) {
            return Err(Error::InvalidInput(format!(
                "basis digits {digits_:?} invalid for dims {dims:?}"
            )));
        }
        let st = strides(&dims);
        let idx: usize = digits_.iter().zip(&st).map(|(d, s)| d * s).sum();
        let total: usize = dims.iter().product();
        let mut v = ComplexVector::zeros(total);
        v[idx] = ONE;
        Ok(Self {
            dims,
            amplitudes: v,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Ket {
            dims,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Applies a unitary acting on the full space.
    pub fn apply(&self, u: &ComplexMatrix) -> Result<Ket> {
        if u.ncols() != self.amplitudes.len() || u.nrows() != u.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator {}x{} on vector of length {}",
                u.nrows(),
                u.ncols(),
                self.amplitudes.len()
            )));
        }
        Ok(Ket {
            dims: self.dims.clone(),
            amplitudes: u * &self.amplitudes,
        })
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix {
            dims: self.dims.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

fn check_dims(dims: &[usize], total: usize) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidInput(format!(
            "subsystem dimensions must be non-empty and positive, got {dims:?}"
        )));
    }
    let prod: usize = dims.iter().product();
    if prod != total {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} give {prod} but the data has size {total}"
        )));
    }
    Ok(())
}

/// A trace-one positive semidefinite Hermitian matrix on a composite system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates against the global tolerances.
    pub fn new(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(dims, matrix, &tolerances())
    }

    pub fn with_tolerances(
        dims: Vec<usize>,
        matrix: ComplexMatrix,
        tol: &Tolerances,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_dims(&dims, matrix.nrows())?;
        if !is_finite(&matrix) {
            return Err(Error::NonFinite);
        }
        let r = invariant_residuals(&matrix);
        if r.hermiticity > tol.herm || r.trace > tol.trace || r.min_eigenvalue < -tol.psd {
            return Err(Error::Invariant(r));
        }
        Ok(Self { dims, matrix })
    }

    /// Rescales to unit trace and validates. Handy for building mixtures
    /// from unnormalized weights.
    pub fn normalized(dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        let tr = matrix.trace().re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::InvalidInput(
                "matrix trace must be positive to normalize".into(),
            ));
        }
        Self::new(dims, matrix.unscale(tr))
    }

    /// Maximally mixed state.
    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        Self {
            dims,
            matrix: ComplexMatrix::identity(d, d).unscale(d as f64),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn residuals(&self) -> InvariantResiduals {
        invariant_residuals(&self.matrix)
    }

    pub fn eigen(&self) -> Eigen {
        eigh(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Number of eigenvalues above the PSD tolerance.
    pub fn rank(&self) -> usize {
        let tol = tolerances().psd;
        self.eigen().values.iter().filter(|&&v| v > tol).count()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityMatrix {
            dims,
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// `ρ^{⊗n}` for `n ≥ 1`.
    pub fn tensor_power(&self, n: usize) -> DensityMatrix {
        let mut out = self.clone();
        for _ in 1..n.max(1) {
            out = out.tensor(self);
        }
        out
    }

    /// `U ρ U†` for a unitary on the full space.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<DensityMatrix> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitary {}x{} on state of dimension {}",
                u.nrows(),
                u.ncols(),
                self.dim()
            )));
        }
        Ok(DensityMatrix {
            dims: self.dims.clone(),
            matrix: u * &self.matrix * u.adjoint(),
        })
    }

    /// Convex combination `p·self + (1−p)·other`.
    pub fn mix(&self, other: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
        crate::error::check_range("p", p, 0.0, 1.0, "[0, 1]")?;
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "cannot mix dims {:?} with {:?}",
                self.dims, other.dims
            )));
        }
        Ok(DensityMatrix {
            dims: self.dims.clone(),
            matrix: self.matrix.scale(p) + other.matrix.scale(1.0 - p),
        })
    }

    /// Reduced state of a single subsystem.
    pub fn marginal(&self, sys: usize) -> Result<DensityMatrix> {
        partial_trace(self, &[sys])
    }

    /// Builds a state without validation. The caller guarantees the
    /// invariants (used for matrices that are states by construction).
    pub(crate) fn from_parts_unchecked(dims: Vec<usize>, matrix: ComplexMatrix) -> Self {
        Self { dims, matrix }
    }
}

fn invariant_residuals(m: &ComplexMatrix) -> InvariantResiduals {
    let hermiticity = hermiticity_residual(m);
    let trace = (m.trace() - ONE).norm();
    let min_eigenvalue = eigvalsh(m).first().copied().unwrap_or(0.0);
    InvariantResiduals {
        hermiticity,
        trace,
        min_eigenvalue,
    }
}

/// Reduced state on the subsystems listed in `keep` (kept in their original
/// order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = rho.dims();
    let n = dims.len();
    if keep.is_empty() {
        return Err(Error::InvalidInput(
            "partial trace must keep at least one subsystem".into(),
        ));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    for w in kept.windows(2) {
        if w[0] == w[1] {
            return Err(Error::InvalidInput(format!(
                "subsystem {} listed twice",
                w[0]
            )));
        }
    }
    if let Some(&bad) = kept.iter().find(|&&k| k >= n) {
        return Err(Error::InvalidSubsystem {
            index: bad,
            count: n,
        });
    }
    let traced: Vec<usize> = (0..n).filter(|k| !kept.contains(k)).collect();
    let st = strides(dims);
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    let offset = |local: usize, subs: &[usize], sub_dims: &[usize]| -> usize {
        digits(local, sub_dims)
            .iter()
            .zip(subs)
            .map(|(d, &k)| d * st[k])
            .sum()
    };
    let kept_off: Vec<usize> = (0..dk).map(|i| offset(i, &kept, &kept_dims)).collect();
    let traced_off: Vec<usize> = (0..dt).map(|t| offset(t, &traced, &traced_dims)).collect();

    let m = rho.matrix();
    let out = ComplexMatrix::from_fn(dk, dk, |i, j| {
        traced_off
            .iter()
            .map(|&t| m[(kept_off[i] + t, kept_off[j] + t)])
            .sum()
    });
    Ok(DensityMatrix::from_parts_unchecked(kept_dims, out))
}

/// Transpose on subsystem `sys` only.
pub fn partial_transpose(rho: &DensityMatrix, sys: usize) -> Result<ComplexMatrix> {
    partial_transpose_matrix(rho.matrix(), rho.dims(), sys)
}

pub fn partial_transpose_matrix(
    m: &ComplexMatrix,
    dims: &[usize],
    sys: usize,
) -> Result<ComplexMatrix> {
    if sys >= dims.len() {
        return Err(Error::InvalidSubsystem {
            index: sys,
            count: dims.len(),
        });
    }
    let st = strides(dims)[sys];
    let d = dims[sys];
    let digit = |idx: usize| (idx / st) % d;
    Ok(ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let (di, dj) = (digit(i), digit(j));
        let i2 = i - di * st + dj * st;
        let j2 = j - dj * st + di * st;
        m[(i2, j2)]
    }))
}

fn same_dims(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dims() != sigma.dims() {
        return Err(Error::DimensionMismatch(format!(
            "states have dims {:?} and {:?}",
            rho.dims(),
            sigma.dims()
        )));
    }
    Ok(())
}

/// `T(ρ, σ) = ½ Σ |eig(ρ − σ)|`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dims(rho, sigma)?;
    Ok(trace_distance_matrices(rho.matrix(), sigma.matrix()))
}

pub(crate) fn trace_distance_matrices(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let diff = a - b;
    let t: f64 = eigvalsh(&diff).iter().map(|v| v.abs()).sum::<f64>() * 0.5;
    t.clamp(0.0, 1.0)
}

/// Uhlmann fidelity `‖√ρ √σ‖₁`, which is `|<ψ|φ>|` on pure states.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dims(rho, sigma)?;
    Ok(fidelity_matrices(rho.matrix(), sigma.matrix()))
}

pub(crate) fn fidelity_matrices(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let f = trace_norm(&(sqrt_psd(a) * sqrt_psd(b)));
    f.clamp(0.0, 1.0)
}

/// `|ψ> = Σ_j √λ_j |φ_j> ⊗ |j>` with one ancilla level per eigenvalue above
/// the PSD tolerance. The ancilla is appended as the last subsystem.
pub fn purify(rho: &DensityMatrix) -> Ket {
    let tol = tolerances().psd;
    let eig = rho.eigen();
    let support: Vec<usize> = (0..eig.values.len())
        .rev()
        .filter(|&k| eig.values[k] > tol)
        .collect();
    let r = support.len().max(1);
    let d = rho.dim();
    let mut amps = ComplexVector::zeros(d * r);
    for (anc, &k) in support.iter().enumerate() {
        let w = eig.values[k].sqrt();
        for i in 0..d {
            amps[i * r + anc] = eig.vectors[(i, k)] * w;
        }
    }
    let n = amps.norm();
    if n > 0.0 {
        amps.unscale_mut(n);
    }
    let mut dims = rho.dims().to_vec();
    dims.push(r);
    Ket {
        dims,
        amplitudes: amps,
    }
}

/// `Tr_last(|ψ><ψ|)`; inverse of [`purify`] on the system part.
pub fn trace_out_last(psi: &Ket) -> Result<DensityMatrix> {
    let n = psi.dims().len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "need at least two subsystems to trace out the last".into(),
        ));
    }
    partial_trace(&psi.projector(), &(0..n - 1).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sx() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    fn ket(v: &[C64]) -> Ket {
        Ket::normalized(vec![v.len()], ComplexVector::from_column_slice(v)).unwrap()
    }

    fn bell() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ket::new(
            vec![2, 2],
            ComplexVector::from_column_slice(&[c(s, 0.), ZERO, ZERO, c(s, 0.)]),
        )
        .unwrap()
        .projector()
    }

    #[test]
    fn tensor_identities_and_basis() {
        let i2 = ComplexMatrix::identity(2, 2);
        assert_eq!(tensor(&i2, &i2), ComplexMatrix::identity(4, 4));

        let p0 = real_diag(&[1.0, 0.0]);
        let p1 = real_diag(&[0.0, 1.0]);
        let t = tensor(&p0, &p1);
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == 1 && j == 1 { 1.0 } else { 0.0 };
                assert_eq!(t[(i, j)], c(want, 0.0));
            }
        }
    }

    #[test]
    fn sigma_x_pair_flips_00_to_11() {
        let xx = tensor(&sx(), &sx());
        let k00 = Ket::basis(vec![2, 2], &[0, 0]).unwrap();
        let out = k00.apply(&xx).unwrap();
        let k11 = Ket::basis(vec![2, 2], &[1, 1]).unwrap();
        assert_abs_diff_eq!((out.inner(&k11)).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_is_maximally_mixed() {
        let rho_a = partial_trace(&bell(), &[0]).unwrap();
        assert_eq!(rho_a.dims(), &[2]);
        assert!(max_abs(&(rho_a.matrix() - real_diag(&[0.5, 0.5]))) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_recovers_factor() {
        let a = ket(&[c(0.6, 0.0), c(0.0, 0.8)]).projector();
        let b = DensityMatrix::maximally_mixed(vec![3]);
        let ab = a.tensor(&b);
        let back = partial_trace(&ab, &[0]).unwrap();
        assert!(max_abs(&(back.matrix() - a.matrix())) < 1e-15);
        let back_b = partial_trace(&ab, &[1]).unwrap();
        assert!(max_abs(&(back_b.matrix() - b.matrix())) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_indices() {
        assert!(matches!(
            partial_trace(&bell(), &[2]),
            Err(Error::InvalidSubsystem { .. })
        ));
        assert!(partial_trace(&bell(), &[]).is_err());
        assert!(partial_trace(&bell(), &[0, 0]).is_err());
    }

    #[test]
    fn partial_trace_middle_subsystem() {
        // |0><0| ⊗ I/2 ⊗ |1><1|, trace out the middle.
        let a = real_diag(&[1.0, 0.0]);
        let b = real_diag(&[0.5, 0.5]);
        let cc = real_diag(&[0.0, 1.0]);
        let m = tensor_all([&a, &b, &cc]);
        let rho = DensityMatrix::new(vec![2, 2, 2], m).unwrap();
        let ac = partial_trace(&rho, &[0, 2]).unwrap();
        assert!(max_abs(&(ac.matrix() - tensor(&a, &cc))) < 1e-15);
    }

    #[test]
    fn partial_transpose_of_bell() {
        let pt = partial_transpose(&bell(), 1).unwrap();
        let ev = eigvalsh(&pt);
        assert_abs_diff_eq!(ev[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(hermiticity_residual(&pt), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_transpose_of_product_is_psd() {
        let a = ket(&[c(0.6, 0.0), c(0.0, 0.8)]).projector();
        let b = ket(&[c(1.0, 0.0), c(1.0, 1.0)]).projector();
        let pt = partial_transpose(&a.tensor(&b), 1).unwrap();
        assert!(eigvalsh(&pt)[0] > -1e-12);
    }

    #[test]
    fn eig_of_paulis() {
        let z = real_diag(&[1.0, -1.0]);
        let e = hermitian_eig(&z).unwrap();
        assert_eq!(e.values, vec![-1.0, 1.0]);
        let e = hermitian_eig(&sx()).unwrap();
        assert_abs_diff_eq!(e.values[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.values[1], 1.0, epsilon = 1e-14);
        // eigenvector of −1 is |−> up to phase
        let v = e.vectors.column(0);
        assert_abs_diff_eq!((v[0] + v[1]).norm(), 0.0, epsilon = 1e-14);
        assert!(max_abs(&(e.reconstruct() - sx())) < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn unitary_of_projector_at_pi() {
        let h = HermitianOperator::projector(2, 1);
        let u = unitary_of(&h, std::f64::consts::PI);
        assert!(max_abs(&(u - real_diag(&[1.0, -1.0]))) < 1e-15);
        let u0 = unitary_of(&h, 0.0);
        assert!(max_abs(&(u0 - ComplexMatrix::identity(2, 2))) < 1e-15);
    }

    #[test]
    fn distances_on_qubit_examples() {
        let z0 = ket(&[ONE, ZERO]).projector();
        let z1 = ket(&[ZERO, ONE]).projector();
        let plus = ket(&[ONE, ONE]).projector();
        assert_abs_diff_eq!(trace_distance(&z0, &z0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_distance(&z0, &z1).unwrap(), 1.0, epsilon = 1e-15);
        // difference |0><0| − |+><+| has eigenvalues ±1/√2; oracle by hand
        assert_abs_diff_eq!(
            trace_distance(&z0, &plus).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(fidelity(&z0, &z0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fidelity(&z0, &plus).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn distance_dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(vec![2]);
        let b = DensityMatrix::maximally_mixed(vec![3]);
        assert!(trace_distance(&a, &b).is_err());
        assert!(fidelity(&a, &b).is_err());
    }

    #[test]
    fn purify_pure_and_mixed() {
        let p = ket(&[c(0.6, 0.0), c(0.0, 0.8)]).projector();
        let psi = purify(&p);
        assert_eq!(psi.dims(), &[2, 1]);
        let mm = DensityMatrix::maximally_mixed(vec![2]);
        let psi = purify(&mm);
        assert_eq!(psi.dims(), &[2, 2]);
        let back = trace_out_last(&psi).unwrap();
        assert!(max_abs(&(back.matrix() - mm.matrix())) < 1e-14);
        // the purification of I/2 is maximally entangled
        let anc = partial_trace(&psi.projector(), &[1]).unwrap();
        assert!(max_abs(&(anc.matrix() - mm.matrix())) < 1e-14);
    }

    #[test]
    fn density_matrix_validation() {
        let bad = real_diag(&[0.7, 0.7]);
        assert!(matches!(
            DensityMatrix::new(vec![2], bad),
            Err(Error::Invariant(_))
        ));
        let neg = real_diag(&[1.2, -0.2]);
        assert!(DensityMatrix::new(vec![2], neg).is_err());
        let wrong_dims = real_diag(&[0.5, 0.5]);
        assert!(DensityMatrix::new(vec![3], wrong_dims).is_err());
        let mut nan = real_diag(&[0.5, 0.5]);
        nan[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(DensityMatrix::new(vec![2], nan), Err(Error::NonFinite)));
    }

    #[test]
    fn embed_places_operator() {
        let h = real_diag(&[0.0, 1.0]);
        let full = embed(&h, &[2, 3], 0).unwrap();
        assert_eq!(full.nrows(), 6);
        assert_eq!(full[(3, 3)], ONE);
        assert_eq!(full[(2, 2)], ZERO);
        assert!(embed(&h, &[2, 3], 1).is_err());
        assert!(embed(&h, &[2, 3], 2).is_err());
    }
}
