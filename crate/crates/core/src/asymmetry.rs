//! Modes of asymmetry and the twirling maps built from them.
//!
//! Every twirl here is an infinite-time phase average over a finite spectrum,
//! so it reduces to an entrywise mask in the eigenbasis of the generators:
//! an element survives exactly when its Bohr frequency matches the selected
//! one. Frequencies are grouped with the `freq` tolerance.
//!
//! Sign conventions, with `U(θ) = exp(−iθH)` and `H|i> = E_i|i>`:
//!
//! * local twirl `P^ω` keeps `|i><i'|` with `E_{i'} − E_i = ω`, so that
//!   `U(θ) P^ω(ρ) U†(θ) = e^{iωθ} P^ω(ρ)`;
//! * split twirl `P_AB^ω` (left `U_A`, right `V_B†`) keeps `<ij|ρ|i'j'>`
//!   with `G_{j'} − E_i = ω`, so that `U_A(θ) P_AB^ω(ρ) V_B†(θ) =
//!   e^{iωθ} P_AB^ω(ρ)`.

use serde::Serialize;

use crate::classify::HamiltonianPair;
use crate::error::{Error, Result};
use crate::qmat::{digits, embed, max_abs, ComplexMatrix, DensityMatrix, Eigen, HermitianOperator};
use crate::tolerance::{tolerances, Verdict};
use crate::Side;

/// Sorted cluster representatives of a set of real numbers. Values are
/// chained into one cluster while consecutive gaps stay within `tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    freqs: Vec<f64>,
}

impl FrequencyTable {
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I, tol: f64) -> Self {
        let mut v: Vec<f64> = values.into_iter().collect();
        v.sort_by(f64::total_cmp);
        let mut freqs = Vec::new();
        let mut cluster: Vec<f64> = Vec::new();
        for x in v {
            if let Some(&last) = cluster.last() {
                if x - last > tol {
                    freqs.push(mean(&cluster));
                    cluster.clear();
                }
            }
            cluster.push(x);
        }
        if !cluster.is_empty() {
            freqs.push(mean(&cluster));
        }
        // snap the zero cluster to exactly zero
        for f in &mut freqs {
            if f.abs() <= tol {
                *f = 0.0;
            }
        }
        Self { freqs }
    }

    /// All Bohr frequencies `E_{i'} − E_i` of the given spectra.
    pub fn bohr(spectra: &[&[f64]], tol: f64) -> Self {
        let diffs = spectra
            .iter()
            .flat_map(|s| s.iter().flat_map(move |a| s.iter().map(move |b| b - a)));
        Self::from_values(diffs, tol)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Index of the representative nearest to `x`.
    pub fn label(&self, x: f64) -> usize {
        let mut best = 0;
        for (k, f) in self.freqs.iter().enumerate() {
            if (f - x).abs() < (self.freqs[best] - x).abs() {
                best = k;
            }
        }
        best
    }

    /// Index of the representative within `tol` of `omega`, if any.
    pub fn find(&self, omega: f64, tol: f64) -> Option<usize> {
        if self.freqs.is_empty() {
            return None;
        }
        let k = self.label(omega);
        ((self.freqs[k] - omega).abs() <= tol).then_some(k)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Eigenbases of local generators placed on chosen subsystems.
struct Frame {
    full: ComplexMatrix,
    digits: Vec<Vec<usize>>,
}

impl Frame {
    fn new(dims: &[usize], locals: &[(usize, &Eigen)]) -> Result<Self> {
        let d: usize = dims.iter().product();
        let mut full = ComplexMatrix::identity(d, d);
        for (sys, eig) in locals {
            full = embed(&eig.vectors, dims, *sys)? * full;
        }
        let digits = (0..d).map(|i| digits(i, dims)).collect();
        Ok(Self {
            full,
            digits,
        })
    }

    fn into_frame(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.full.adjoint() * m * &self.full
    }

    fn out_of_frame(&self, m: &ComplexMatrix) -> ComplexMatrix {
        &self.full * m * self.full.adjoint()
    }

    /// Keeps the entries `(row, col)` for which `keep(row_digits, col_digits)`.
    fn masked<F: Fn(&[usize], &[usize]) -> bool>(&self, m: &ComplexMatrix, keep: F) -> ComplexMatrix {
        let inner = self.into_frame(m);
        let mut out = ComplexMatrix::zeros(inner.nrows(), inner.ncols());
        for r in 0..inner.nrows() {
            for c in 0..inner.ncols() {
                if keep(&self.digits[r], &self.digits[c]) {
                    out[(r, c)] = inner[(r, c)];
                }
            }
        }
        self.out_of_frame(&out)
    }
}

fn check_local(h: &HermitianOperator, dims: &[usize], sys: usize) -> Result<()> {
    if sys >= dims.len() {
        return Err(Error::InvalidSubsystem {
            index: sys,
            count: dims.len(),
        });
    }
    if h.dim() != dims[sys] {
        return Err(Error::DimensionMismatch(format!(
            "generator has dimension {} but subsystem {sys} has dimension {}",
            h.dim(),
            dims[sys]
        )));
    }
    Ok(())
}

fn bipartite(rho: &DensityMatrix) -> Result<()> {
    if rho.dims().len() != 2 {
        return Err(Error::InvalidInput(format!(
            "expected a bipartite state, got dims {:?}",
            rho.dims()
        )));
    }
    Ok(())
}

fn local_mode(
    m: &ComplexMatrix,
    dims: &[usize],
    sys: usize,
    eig: &Eigen,
    omega: f64,
    tol: f64,
) -> Result<ComplexMatrix> {
    let frame = Frame::new(dims, &[(sys, eig)])?;
    let e = &eig.values;
    Ok(frame.masked(m, |r, c| (e[c[sys]] - e[r[sys]] - omega).abs() <= tol))
}

/// `P^ω(ρ)` for the generator `h` acting on one side of a bipartite state.
pub fn mode_project(
    rho: &DensityMatrix,
    h: &HermitianOperator,
    side: Side,
    omega: f64,
) -> Result<ComplexMatrix> {
    bipartite(rho)?;
    mode_project_on(rho, h, side.index(), omega)
}

/// `P^ω(ρ)` for a generator on subsystem `sys` of any composite state.
pub fn mode_project_on(
    rho: &DensityMatrix,
    h: &HermitianOperator,
    sys: usize,
    omega: f64,
) -> Result<ComplexMatrix> {
    check_local(h, rho.dims(), sys)?;
    let tol = tolerances().freq;
    let eig = h.eigen();
    let table = FrequencyTable::bohr(&[&eig.values], tol);
    match table.find(omega, tol) {
        Some(k) => local_mode(rho.matrix(), rho.dims(), sys, &eig, table.freqs()[k], tol),
        None => Ok(ComplexMatrix::zeros(rho.dim(), rho.dim())),
    }
}

/// Mode components of a state under one local generator, one per Bohr
/// frequency, sorted by frequency.
#[derive(Debug, Clone, Serialize)]
pub struct ModeDecomposition {
    pub generator_spectrum: Vec<f64>,
    #[serde(skip)]
    pub modes: Vec<(f64, ComplexMatrix)>,
}

impl ModeDecomposition {
    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|(w, _)| *w).collect()
    }

    pub fn get(&self, omega: f64) -> Option<&ComplexMatrix> {
        let tol = tolerances().freq;
        self.modes
            .iter()
            .find(|(w, _)| (w - omega).abs() <= tol)
            .map(|(_, m)| m)
    }

    /// max |Σ_ω ρ^(ω) − ρ|.
    pub fn completeness_residual(&self, rho: &DensityMatrix) -> f64 {
        let mut sum = ComplexMatrix::zeros(rho.dim(), rho.dim());
        for (_, m) in &self.modes {
            sum += m;
        }
        max_abs(&(sum - rho.matrix()))
    }

    /// Frobenius norm of each mode.
    pub fn norms(&self) -> Vec<(f64, f64)> {
        self.modes.iter().map(|(w, m)| (*w, m.norm())).collect()
    }
}

pub fn mode_decompose(
    rho: &DensityMatrix,
    h: &HermitianOperator,
    side: Side,
) -> Result<ModeDecomposition> {
    bipartite(rho)?;
    mode_decompose_on(rho, h, side.index())
}

pub fn mode_decompose_on(
    rho: &DensityMatrix,
    h: &HermitianOperator,
    sys: usize,
) -> Result<ModeDecomposition> {
    check_local(h, rho.dims(), sys)?;
    let tol = tolerances().freq;
    let eig = h.eigen();
    let table = FrequencyTable::bohr(&[&eig.values], tol);
    let frame = Frame::new(rho.dims(), &[(sys, &eig)])?;
    let e = &eig.values;
    let modes = table
        .freqs()
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let m = frame.masked(rho.matrix(), |r, c| table.label(e[c[sys]] - e[r[sys]]) == k);
            (w, m)
        })
        .collect();
    Ok(ModeDecomposition {
        generator_spectrum: eig.values.clone(),
        modes,
    })
}

/// Result of the mode-equality form of the weak anonymity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeCheck {
    pub verdict: Verdict,
    pub holds: bool,
    /// max over ω of max |P_A^ω ρ − P_B^ω ρ|.
    pub residual: f64,
    /// Largest max-entry of any ω ≠ 0 mode on A.
    pub encoding_norm: f64,
    pub has_nonzero_mode: bool,
}

impl ModeCheck {
    fn new(residual: f64, encoding_norm: f64) -> Self {
        let tol = tolerances();
        let verdict =
            Verdict::from_residual(residual, &tol).and(Verdict::from_nonzero(encoding_norm, &tol));
        Self {
            verdict,
            holds: verdict.holds(),
            residual,
            encoding_norm,
            has_nonzero_mode: Verdict::from_nonzero(encoding_norm, &tol).holds(),
        }
    }
}

/// Weak anonymity through modes: `P_A^ω ρ = P_B^ω ρ` for every ω, and some
/// ω ≠ 0 mode of A is non-zero.
pub fn check_wa_modes(rho: &DensityMatrix, pair: &HamiltonianPair) -> Result<ModeCheck> {
    bipartite(rho)?;
    pair.check_dims(rho)?;
    multipartite_modes(rho, &[pair.h_a.clone(), pair.g_b.clone()])
}

fn multipartite_modes(rho: &DensityMatrix, generators: &[HermitianOperator]) -> Result<ModeCheck> {
    let dims = rho.dims();
    if generators.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} generators for {} subsystems",
            generators.len(),
            dims.len()
        )));
    }
    for (k, g) in generators.iter().enumerate() {
        check_local(g, dims, k)?;
    }
    let tol = tolerances().freq;
    let eigs: Vec<Eigen> = generators.iter().map(|g| g.eigen()).collect();
    let spectra: Vec<&[f64]> = eigs.iter().map(|e| e.values.as_slice()).collect();
    let table = FrequencyTable::bohr(&spectra, tol);
    let frames: Vec<Frame> = eigs
        .iter()
        .enumerate()
        .map(|(k, e)| Frame::new(dims, &[(k, e)]))
        .collect::<Result<_>>()?;

    let mut residual = 0.0_f64;
    let mut encoding = 0.0_f64;
    for (w_idx, &w) in table.freqs().iter().enumerate() {
        let modes: Vec<ComplexMatrix> = frames
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let e = &eigs[k].values;
                f.masked(rho.matrix(), |r, c| table.label(e[c[k]] - e[r[k]]) == w_idx)
            })
            .collect();
        for a in 0..modes.len() {
            for b in a + 1..modes.len() {
                residual = residual.max(max_abs(&(&modes[a] - &modes[b])));
            }
        }
        if w != 0.0 {
            encoding = encoding.max(max_abs(&modes[0]));
        }
    }
    Ok(ModeCheck::new(residual, encoding))
}

/// Pairwise mode equality across all parties plus a non-zero ω ≠ 0 mode.
pub fn multipartite_wa_check(
    rho: &DensityMatrix,
    generators: &[HermitianOperator],
) -> Result<ModeCheck> {
    if rho.dims().len() < 2 {
        return Err(Error::InvalidInput("need at least two parties".into()));
    }
    multipartite_modes(rho, generators)
}

/// `P_AB^ω(ρ)`: keeps `<ij|ρ|i'j'>` with `G_{j'} − E_i = ω`.
pub fn split_twirl(rho: &DensityMatrix, pair: &HamiltonianPair, omega: f64) -> Result<ComplexMatrix> {
    split_twirl_shifted(rho, pair, omega, 0.0)
}

/// Split twirl with `H_A` replaced by `H_A − shift`.
fn split_twirl_shifted(
    rho: &DensityMatrix,
    pair: &HamiltonianPair,
    omega: f64,
    shift: f64,
) -> Result<ComplexMatrix> {
    bipartite(rho)?;
    pair.check_dims(rho)?;
    let tol = tolerances().freq;
    let (ea, eb) = (pair.h_a.eigen(), pair.g_b.eigen());
    let frame = Frame::new(rho.dims(), &[(0, &ea), (1, &eb)])?;
    Ok(frame.masked(rho.matrix(), |r, c| {
        (eb.values[c[1]] - (ea.values[r[0]] - shift) - omega).abs() <= tol
    }))
}

/// Result of the split-twirl form of the strong anonymity test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitTwirlCheck {
    pub verdict: Verdict,
    pub holds: bool,
    /// min over admissible shifts c of max over ω of
    /// max |P_AB^ω ρ − P_B^ω ρ| with `H_A − c`.
    pub residual: f64,
    /// The minimizing shift (the absorbed global phase rate).
    pub shift: f64,
    pub encoding_norm: f64,
}

/// Strong anonymity through split twirling: `P_AB^ω ρ = P_B^ω ρ` for every
/// ω, after absorbing a global phase `e^{−icθ}` into `H_A`. The shift `c`
/// ranges over the eigenvalues of `H_A ⊗ 1 − 1 ⊗ G_B`.
pub fn check_sa_split_twirl(rho: &DensityMatrix, pair: &HamiltonianPair) -> Result<SplitTwirlCheck> {
    bipartite(rho)?;
    pair.check_dims(rho)?;
    let tol = tolerances();
    let (ea, eb) = (pair.h_a.eigen(), pair.g_b.eigen());
    let shifts = FrequencyTable::from_values(
        ea.values
            .iter()
            .flat_map(|e| eb.values.iter().map(move |g| e - g)),
        tol.freq,
    );
    let b_modes = mode_decompose_on(rho, &pair.g_b, 1)?;

    let mut best = (f64::INFINITY, 0.0);
    for &shift in shifts.freqs() {
        let split_freqs = FrequencyTable::from_values(
            ea.values.iter().flat_map(|e| {
                eb.values.iter().map(move |g| g - (e - shift))
            }),
            tol.freq,
        );
        let all = FrequencyTable::from_values(
            split_freqs
                .freqs()
                .iter()
                .chain(b_modes.frequencies().iter())
                .copied(),
            tol.freq,
        );
        let mut residual = 0.0_f64;
        for &w in all.freqs() {
            let split = split_twirl_shifted(rho, pair, w, shift)?;
            let zero = ComplexMatrix::zeros(rho.dim(), rho.dim());
            let b = b_modes.get(w).unwrap_or(&zero);
            residual = residual.max(max_abs(&(split - b)));
            if residual >= best.0 {
                break;
            }
        }
        if residual < best.0 {
            best = (residual, shift);
        }
    }
    let a_modes = mode_decompose_on(rho, &pair.h_a, 0)?;
    let encoding_norm = a_modes
        .modes
        .iter()
        .filter(|(w, _)| *w != 0.0)
        .fold(0.0_f64, |acc, (_, m)| acc.max(max_abs(m)));
    let verdict =
        Verdict::from_residual(best.0, &tol).and(Verdict::from_nonzero(encoding_norm, &tol));
    Ok(SplitTwirlCheck {
        verdict,
        holds: verdict.holds(),
        residual: best.0,
        shift: best.1,
        encoding_norm,
    })
}

/// G-twirl: average of `(U_A ⊗ V_B†) ρ (U_A ⊗ V_B†)†` over θ. Keeps
/// `<ij|ρ|i'j'>` with `E_i − G_j = E_{i'} − G_{j'}`.
pub fn g_twirl(rho: &DensityMatrix, pair: &HamiltonianPair) -> Result<ComplexMatrix> {
    bipartite(rho)?;
    pair.check_dims(rho)?;
    let tol = tolerances().freq;
    let (ea, eb) = (pair.h_a.eigen(), pair.g_b.eigen());
    let frame = Frame::new(rho.dims(), &[(0, &ea), (1, &eb)])?;
    let (e, g) = (&ea.values, &eb.values);
    Ok(frame.masked(rho.matrix(), |r, c| {
        ((e[r[0]] - g[r[1]]) - (e[c[0]] - g[c[1]])).abs() <= tol
    }))
}

/// G-twirl of a state, returned as a state (the twirl is a channel).
pub fn g_twirl_state(rho: &DensityMatrix, pair: &HamiltonianPair) -> Result<DensityMatrix> {
    let m = g_twirl(rho, pair)?;
    DensityMatrix::new(rho.dims().to_vec(), m)
}
