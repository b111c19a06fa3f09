//! Weak/strong anonymity tests, the witness search and the correlation
//! hierarchy (classical, discordant, entangled, aligned discord, aligned
//! entanglement).
//!
//! A state is weakly anonymous (WA) for a pair `(H_A, G_B)` when
//! `[H_A ⊗ 1 − 1 ⊗ G_B, ρ] = 0` and `[H_A ⊗ 1, ρ] ≠ 0`, and strongly
//! anonymous (SA) when `(H_A ⊗ 1 − 1 ⊗ G_B − c) ρ = 0` for some real `c`
//! (the global phase `e^{−icθ}`) with the same encoding condition.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::io::matrix_rows;
use crate::qmat::{
    commutator, digits, eigh, embed, max_abs, partial_transpose, ComplexMatrix, DensityMatrix,
    Eigen, HermitianOperator, ONE, ZERO,
};
use crate::states::random_unitary_with;
use crate::tolerance::{tolerances, Verdict};
use crate::Side;

/// Local generators `H_A` (Alice) and `G_B` (Bob).
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianPair {
    pub h_a: HermitianOperator,
    pub g_b: HermitianOperator,
}

impl HamiltonianPair {
    pub fn new(h_a: HermitianOperator, g_b: HermitianOperator) -> Self {
        Self { h_a, g_b }
    }

    pub fn diagonal(h: &[f64], g: &[f64]) -> Self {
        Self::new(HermitianOperator::diagonal(h), HermitianOperator::diagonal(g))
    }

    /// `H_A = G_B = |k><k|`.
    pub fn projectors(dim: usize, k: usize) -> Self {
        let p = HermitianOperator::projector(dim, k);
        Self::new(p.clone(), p)
    }

    pub fn generator(&self, side: Side) -> &HermitianOperator {
        match side {
            Side::A => &self.h_a,
            Side::B => &self.g_b,
        }
    }

    pub fn check_dims(&self, rho: &DensityMatrix) -> Result<()> {
        let dims = rho.dims();
        if dims.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "expected a bipartite state, got dims {dims:?}"
            )));
        }
        if self.h_a.dim() != dims[0] || self.g_b.dim() != dims[1] {
            return Err(Error::DimensionMismatch(format!(
                "pair acts on {}x{} but the state has dims {dims:?}",
                self.h_a.dim(),
                self.g_b.dim()
            )));
        }
        Ok(())
    }

    /// The generator of one side embedded in the full space.
    pub fn embedded(&self, side: Side, dims: &[usize]) -> Result<ComplexMatrix> {
        embed(self.generator(side).matrix(), dims, side.index())
    }

    /// `H_A ⊗ 1 − 1 ⊗ G_B`.
    pub fn difference(&self, dims: &[usize]) -> Result<ComplexMatrix> {
        Ok(self.embedded(Side::A, dims)? - self.embedded(Side::B, dims)?)
    }

    /// `exp(−iθ·generator)` on one side, embedded in the full space.
    pub fn local_unitary(&self, side: Side, theta: f64, dims: &[usize]) -> Result<ComplexMatrix> {
        let u = crate::qmat::unitary_of(self.generator(side), theta);
        embed(&u, dims, side.index())
    }
}

impl Serialize for HamiltonianPair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("HamiltonianPair", 4)?;
        st.serialize_field("h_a", &matrix_rows(self.h_a.matrix()))?;
        st.serialize_field("g_b", &matrix_rows(self.g_b.matrix()))?;
        st.serialize_field("h_a_spectrum", &self.h_a.eigen().values)?;
        st.serialize_field("g_b_spectrum", &self.g_b.eigen().values)?;
        st.end()
    }
}

/// Outcome of a direct anonymity test for a given pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnonymityCheck {
    pub verdict: Verdict,
    pub holds: bool,
    /// WA: max |[H_A − G_B, ρ]|. SA: max |(H_A − G_B − c)ρ|.
    pub residual: f64,
    /// max |[H_A ⊗ 1, ρ]|.
    pub encoding_residual: f64,
    /// The global phase rate `c` (zero for WA).
    pub phase_shift: f64,
}

impl AnonymityCheck {
    fn new(residual: f64, encoding_residual: f64, phase_shift: f64) -> Self {
        let tol = tolerances();
        let verdict = Verdict::from_residual(residual, &tol)
            .and(Verdict::from_nonzero(encoding_residual, &tol));
        Self {
            verdict,
            holds: verdict.holds(),
            residual,
            encoding_residual,
            phase_shift,
        }
    }
}

fn encoding_residual(rho: &DensityMatrix, pair: &HamiltonianPair) -> Result<f64> {
    let ha = pair.embedded(Side::A, rho.dims())?;
    Ok(max_abs(&commutator(&ha, rho.matrix())))
}

pub fn is_wa(rho: &DensityMatrix, pair: &HamiltonianPair) -> Result<AnonymityCheck> {
    pair.check_dims(rho)?;
    let k = pair.difference(rho.dims())?;
    let residual = max_abs(&commutator(&k, rho.matrix()));
    Ok(AnonymityCheck::new(residual, encoding_residual(rho, pair)?, 0.0))
}

/// Strong anonymity through `(H_A ⊗ 1 − 1 ⊗ G_B − c)ρ = 0`, with `c`
/// chosen by least squares: `c = Tr(ρKρ)/Tr(ρ²)`.
pub fn is_sa(rho: &DensityMatrix, pair: &HamiltonianPair) -> Result<AnonymityCheck> {
    pair.check_dims(rho)?;
    let k = pair.difference(rho.dims())?;
    let m = rho.matrix();
    let kr = &k * m;
    let shift = (m * &kr).trace().re / (m * m).trace().re;
    let residual = max_abs(&(kr - m.scale(shift)));
    Ok(AnonymityCheck::new(residual, encoding_residual(rho, pair)?, shift))
}

/// Multipartite strong anonymity: every pair of parties satisfies the
/// bipartite SA relation with its own phase, plus encoding on party 0.
pub fn multipartite_sa_check(
    rho: &DensityMatrix,
    generators: &[HermitianOperator],
) -> Result<AnonymityCheck> {
    let dims = rho.dims();
    if dims.len() < 2 || generators.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} generators for dims {dims:?}",
            generators.len()
        )));
    }
    let embedded: Vec<ComplexMatrix> = generators
        .iter()
        .enumerate()
        .map(|(k, g)| {
            if g.dim() != dims[k] {
                return Err(Error::DimensionMismatch(format!(
                    "generator {k} has dimension {} but subsystem has {}",
                    g.dim(),
                    dims[k]
                )));
            }
            embed(g.matrix(), dims, k)
        })
        .collect::<Result<_>>()?;
    let m = rho.matrix();
    let purity = (m * m).trace().re;
    let mut residual = 0.0_f64;
    let mut first_shift = 0.0;
    for a in 0..embedded.len() {
        for b in a + 1..embedded.len() {
            let kr = (&embedded[a] - &embedded[b]) * m;
            let shift = (m * &kr).trace().re / purity;
            if a == 0 && b == 1 {
                first_shift = shift;
            }
            residual = residual.max(max_abs(&(kr - m.scale(shift))));
        }
    }
    let encoding = max_abs(&commutator(&embedded[0], m));
    Ok(AnonymityCheck::new(residual, encoding, first_shift))
}

/// Peres-Horodecki test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PptCheck {
    /// The partial transpose has an eigenvalue below −psd.
    pub npt: bool,
    pub min_pt_eigenvalue: f64,
    /// NPT always certifies entanglement; PPT certifies separability only
    /// for 2×2 and 2×3.
    pub conclusive: bool,
}

pub fn is_entangled_ppt(rho: &DensityMatrix) -> Result<PptCheck> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "expected a bipartite state, got dims {dims:?}"
        )));
    }
    let pt = partial_transpose(rho, 1)?;
    let min = eigh(&pt).values.first().copied().unwrap_or(0.0);
    let npt = min < -tolerances().psd;
    let small = dims[0] * dims[1] <= 6;
    Ok(PptCheck {
        npt,
        min_pt_eigenvalue: min,
        conclusive: npt || small,
    })
}

/// Options shared by the witness search and the classical-form test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Integer spectra are drawn from `[0, bound]^d`.
    pub bound: u32,
    /// Random rotations tried inside degenerate marginal eigenspaces.
    pub random_bases: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            bound: 3,
            random_bases: 1000,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn with_bound(bound: u32) -> Self {
        Self {
            bound,
            ..Self::default()
        }
    }
}

/// Groups indices of a sorted spectrum into runs of (near-)equal values.
fn clusters(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (k, v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(run) if (v - values[*run.last().unwrap()]).abs() <= tol => run.push(k),
            _ => out.push(vec![k]),
        }
    }
    out
}

fn is_degenerate(eig: &Eigen) -> bool {
    clusters(&eig.values, tolerances().freq)
        .iter()
        .any(|c| c.len() > 1)
}

/// `V` times independent random unitaries inside each degenerate block.
fn rotate_within<R: rand::Rng>(rng: &mut R, eig: &Eigen, blocks: &[Vec<usize>]) -> ComplexMatrix {
    let d = eig.vectors.nrows();
    let mut r = ComplexMatrix::identity(d, d);
    for block in blocks.iter().filter(|b| b.len() > 1) {
        let u = random_unitary_with(rng, block.len());
        for (x, &i) in block.iter().enumerate() {
            for (y, &j) in block.iter().enumerate() {
                r[(i, j)] = u[(x, y)];
            }
        }
    }
    &eig.vectors * r
}

/// Bases related by a permutation with phases describe the same frame.
fn same_frame(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
    let overlap = a.adjoint() * b;
    overlap
        .iter()
        .all(|z| z.norm() < 1e-9 || (z.norm() - 1.0).abs() < 1e-9)
}

fn diagonalizes(v: &ComplexMatrix, m: &ComplexMatrix) -> bool {
    let t = v.adjoint() * m * v;
    let mut off = 0.0_f64;
    for r in 0..t.nrows() {
        for k in 0..t.ncols() {
            if r != k {
                off = off.max(t[(r, k)].norm());
            }
        }
    }
    off <= tolerances().holds
}

/// Completes orthonormal columns to a unitary by Gram-Schmidt against the
/// computational basis.
fn complete_basis(cols: &ComplexMatrix) -> ComplexMatrix {
    let d = cols.nrows();
    let mut basis: Vec<crate::qmat::ComplexVector> =
        cols.column_iter().map(|c| c.into_owned()).collect();
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = crate::qmat::ComplexVector::from_element(d, ZERO);
        v[k] = ONE;
        for b in &basis {
            let proj = b.dotc(&v);
            v -= b * proj;
        }
        let n = v.norm();
        if n > 1e-8 {
            basis.push(v.unscale(n));
        }
    }
    ComplexMatrix::from_columns(&basis)
}

/// Schmidt bases `(U, V)` of a vector `ψ = Σ s_k u_k ⊗ v_k`.
fn schmidt_bases(psi: &crate::qmat::ComplexVector, da: usize, db: usize) -> (ComplexMatrix, ComplexMatrix) {
    let coeff = ComplexMatrix::from_fn(da, db, |i, j| psi[i * db + j]);
    let dec = crate::qmat::svd(&coeff);
    // columns of V are conj of the rows of V†
    let v = dec.v_adjoint.transpose();
    (complete_basis(&dec.u), complete_basis(&v))
}

/// Local bases (one per side, as unitaries whose columns are the basis
/// vectors) explored by the witness search, in search order.
#[derive(Debug, Clone)]
pub struct CandidateBases {
    pub bases: Vec<(ComplexMatrix, ComplexMatrix)>,
    pub degenerate_marginals: bool,
}

/// Deterministic bases first: the marginal eigenbases, the computational
/// basis and the Schmidt bases of the dominant eigenvector (each only when it
/// diagonalizes its marginal). Random rotations inside degenerate eigenspaces
/// follow when a marginal is degenerate.
pub fn candidate_bases(rho: &DensityMatrix, cfg: &SearchConfig) -> Result<CandidateBases> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "expected a bipartite state, got dims {dims:?}"
        )));
    }
    let (da, db) = (dims[0], dims[1]);
    let ma = rho.marginal(0)?;
    let mb = rho.marginal(1)?;
    let (ea, eb) = (ma.eigen(), mb.eigen());
    let top = {
        let e = rho.eigen();
        e.vectors.column(e.values.len() - 1).into_owned()
    };
    let (sa, sb) = schmidt_bases(&top, da, db);

    let per_side = |eig: &Eigen, marginal: &ComplexMatrix, schmidt: ComplexMatrix, d: usize| {
        let mut out = vec![eig.vectors.clone()];
        for cand in [ComplexMatrix::identity(d, d), schmidt] {
            if diagonalizes(&cand, marginal) && !out.iter().any(|b| same_frame(b, &cand)) {
                out.push(cand);
            }
        }
        out
    };
    let side_a = per_side(&ea, ma.matrix(), sa.clone(), da);
    let side_b = per_side(&eb, mb.matrix(), sb.clone(), db);

    let mut bases = Vec::new();
    // the Schmidt pair goes together when both sides accept it
    if side_a.iter().any(|b| same_frame(b, &sa)) && side_b.iter().any(|b| same_frame(b, &sb)) {
        bases.push((sa, sb));
    }
    for a in &side_a {
        for b in &side_b {
            if !bases.iter().any(|(x, y)| same_frame(x, a) && same_frame(y, b)) {
                bases.push((a.clone(), b.clone()));
            }
        }
    }
    // eigenbases first
    let eig_first = bases
        .iter()
        .position(|(a, b)| same_frame(a, &ea.vectors) && same_frame(b, &eb.vectors))
        .unwrap_or(0);
    bases.swap(0, eig_first);

    let degenerate = is_degenerate(&ea) || is_degenerate(&eb);
    if degenerate {
        let tol = tolerances().freq;
        let (ca, cb) = (clusters(&ea.values, tol), clusters(&eb.values, tol));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.random_bases {
            let a = rotate_within(&mut rng, &ea, &ca);
            let b = rotate_within(&mut rng, &eb, &cb);
            bases.push((a, b));
        }
    }
    Ok(CandidateBases {
        bases,
        degenerate_marginals: degenerate,
    })
}

/// Non-constant integer vectors in `[0, bound]^d` with minimum zero, in
/// lexicographic order.
pub fn integer_spectra(d: usize, bound: u32) -> Vec<Vec<i64>> {
    let base = bound as usize + 1;
    let total = base.checked_pow(d as u32).unwrap_or(usize::MAX);
    let mut out = Vec::new();
    for n in 0..total {
        let mut v = vec![0i64; d];
        let mut x = n;
        for slot in v.iter_mut().rev() {
            *slot = (x % base) as i64;
            x /= base;
        }
        let min = *v.iter().min().unwrap_or(&0);
        let max = *v.iter().max().unwrap_or(&0);
        if min == 0 && max > 0 {
            out.push(v);
        }
    }
    out
}

fn pair_from(va: &ComplexMatrix, vb: &ComplexMatrix, h: &[i64], g: &[i64]) -> HamiltonianPair {
    let hf: Vec<f64> = h.iter().map(|&x| x as f64).collect();
    let gf: Vec<f64> = g.iter().map(|&x| x as f64).collect();
    HamiltonianPair::new(
        HermitianOperator::from_spectrum(va, &hf),
        HermitianOperator::from_spectrum(vb, &gf),
    )
}

/// Every pair the search can examine, in search order.
pub fn candidate_pairs(rho: &DensityMatrix, cfg: &SearchConfig) -> Result<Vec<HamiltonianPair>> {
    let cands = candidate_bases(rho, cfg)?;
    let sa = integer_spectra(rho.dims()[0], cfg.bound);
    let sb = integer_spectra(rho.dims()[1], cfg.bound);
    let mut out = Vec::with_capacity(cands.bases.len() * sa.len() * sb.len());
    for (va, vb) in &cands.bases {
        for h in &sa {
            for g in &sb {
                out.push(pair_from(va, vb, h, g));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Weak,
    Strong,
}

/// Outcome of a witness search.
#[derive(Debug, Clone, Serialize)]
pub struct PairSearch {
    pub pair: Option<HamiltonianPair>,
    /// A marginal has a repeated eigenvalue, so the local eigenbasis is not
    /// unique and a failed search proves nothing.
    pub degenerate_marginals: bool,
    pub bases_tried: usize,
    pub spectrum_bound: u32,
}

impl PairSearch {
    pub fn found(&self) -> bool {
        self.pair.is_some()
    }

    pub fn inconclusive(&self) -> bool {
        self.pair.is_none() && self.degenerate_marginals
    }
}

/// Non-zero entries `(i, j, i', j')` of ρ in a product frame.
fn support(rho: &DensityMatrix, va: &ComplexMatrix, vb: &ComplexMatrix) -> Vec<[usize; 4]> {
    let frame = va.kronecker(vb);
    let t = frame.adjoint() * rho.matrix() * &frame;
    let dims = rho.dims();
    let thr = tolerances().holds;
    let mut out = Vec::new();
    for r in 0..t.nrows() {
        for k in 0..t.ncols() {
            if t[(r, k)].norm() > thr {
                let (x, y) = (digits(r, dims), digits(k, dims));
                out.push([x[0], x[1], y[0], y[1]]);
            }
        }
    }
    out
}

fn search_basis(
    rho: &DensityMatrix,
    va: &ComplexMatrix,
    vb: &ComplexMatrix,
    spectra_a: &[Vec<i64>],
    spectra_b: &[Vec<i64>],
    kind: Kind,
) -> Option<HamiltonianPair> {
    let entries = support(rho, va, vb);
    for h in spectra_a {
        if !entries.iter().any(|e| h[e[0]] != h[e[2]]) {
            continue;
        }
        for g in spectra_b {
            let ok = match kind {
                Kind::Weak => entries
                    .iter()
                    .all(|e| h[e[0]] - g[e[1]] == h[e[2]] - g[e[3]]),
                Kind::Strong => {
                    let c = entries.first().map(|e| h[e[0]] - g[e[1]]);
                    entries.iter().all(|e| Some(h[e[0]] - g[e[1]]) == c)
                }
            };
            if !ok {
                continue;
            }
            let pair = pair_from(va, vb, h, g);
            let check = match kind {
                Kind::Weak => is_wa(rho, &pair),
                Kind::Strong => is_sa(rho, &pair),
            };
            if matches!(check, Ok(c) if c.holds) {
                return Some(pair);
            }
        }
    }
    None
}

fn find_pair(rho: &DensityMatrix, cfg: &SearchConfig, kind: Kind) -> Result<PairSearch> {
    if cfg.bound == 0 {
        return Err(Error::OutOfRange {
            name: "search bound",
            value: 0.0,
            range: "[1, ∞)",
        });
    }
    let cands = candidate_bases(rho, cfg)?;
    let sa = integer_spectra(rho.dims()[0], cfg.bound);
    let sb = integer_spectra(rho.dims()[1], cfg.bound);
    let hit = cands
        .bases
        .par_iter()
        .enumerate()
        .find_map_first(|(k, (va, vb))| search_basis(rho, va, vb, &sa, &sb, kind).map(|p| (k, p)));
    let bases_tried = hit.as_ref().map_or(cands.bases.len(), |(k, _)| k + 1);
    Ok(PairSearch {
        pair: hit.map(|(_, p)| p),
        degenerate_marginals: cands.degenerate_marginals,
        bases_tried,
        spectrum_bound: cfg.bound,
    })
}

/// First pair (in search order) that passes [`is_wa`].
pub fn find_wa_pair(rho: &DensityMatrix, cfg: &SearchConfig) -> Result<PairSearch> {
    find_pair(rho, cfg, Kind::Weak)
}

/// First pair (in search order) that passes [`is_sa`].
pub fn find_sa_pair(rho: &DensityMatrix, cfg: &SearchConfig) -> Result<PairSearch> {
    find_pair(rho, cfg, Kind::Strong)
}

/// Whether ρ has a CC, CQ or QC form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassicalCheck {
    pub cc: bool,
    pub cq: bool,
    pub qc: bool,
    /// False when a degenerate marginal left a form neither found nor ruled
    /// out.
    pub conclusive: bool,
    pub degenerate_marginals: bool,
}

impl ClassicalCheck {
    pub fn any(&self) -> bool {
        self.cc || self.cq || self.qc
    }
}

/// Off-diagonal blocks on `sys` vanish in the local frame `v`; returns the
/// diagonal blocks when they do.
fn classical_on(rho: &DensityMatrix, sys: usize, v: &ComplexMatrix) -> Option<Vec<ComplexMatrix>> {
    let dims = rho.dims();
    let full = embed(v, dims, sys).ok()?;
    let t = full.adjoint() * rho.matrix() * &full;
    let thr = tolerances().holds;
    let (d, other) = (dims[sys], dims[1 - sys]);
    let mut blocks = vec![ComplexMatrix::zeros(other, other); d];
    for r in 0..t.nrows() {
        for k in 0..t.ncols() {
            let (x, y) = (digits(r, dims), digits(k, dims));
            if x[sys] != y[sys] {
                if t[(r, k)].norm() > thr {
                    return None;
                }
            } else {
                blocks[x[sys]][(x[1 - sys], y[1 - sys])] = t[(r, k)];
            }
        }
    }
    Some(blocks)
}

fn blocks_commute(blocks: &[ComplexMatrix]) -> bool {
    let thr = tolerances().holds;
    blocks.iter().enumerate().all(|(i, a)| {
        blocks[i + 1..]
            .iter()
            .all(|b| max_abs(&commutator(a, b)) <= thr)
    })
}

fn local_frames(marginal: &DensityMatrix, cfg: &SearchConfig) -> (Vec<ComplexMatrix>, bool) {
    let eig = marginal.eigen();
    let d = marginal.dim();
    let mut out = vec![eig.vectors.clone()];
    let id = ComplexMatrix::identity(d, d);
    if diagonalizes(&id, marginal.matrix()) && !same_frame(&id, &eig.vectors) {
        out.push(id);
    }
    let degenerate = is_degenerate(&eig);
    if degenerate {
        let blocks = clusters(&eig.values, tolerances().freq);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        out.extend((0..cfg.random_bases).map(|_| rotate_within(&mut rng, &eig, &blocks)));
    }
    (out, degenerate)
}

pub fn is_classical(rho: &DensityMatrix) -> Result<ClassicalCheck> {
    is_classical_with(rho, &SearchConfig::default())
}

/// CQ holds when ρ is block diagonal on A in an eigenbasis of ρ_A, QC
/// likewise on B, and CC when additionally the conditional blocks commute.
pub fn is_classical_with(rho: &DensityMatrix, cfg: &SearchConfig) -> Result<ClassicalCheck> {
    let dims = rho.dims();
    if dims.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "expected a bipartite state, got dims {dims:?}"
        )));
    }
    let tol = tolerances();
    if rho.purity() >= 1.0 - tol.psd {
        let product = rho.marginal(0)?.purity() >= 1.0 - tol.psd;
        return Ok(ClassicalCheck {
            cc: product,
            cq: product,
            qc: product,
            conclusive: true,
            degenerate_marginals: false,
        });
    }
    let (frames_a, deg_a) = local_frames(&rho.marginal(0)?, cfg);
    let (frames_b, deg_b) = local_frames(&rho.marginal(1)?, cfg);

    let mut cq = false;
    let mut cc = false;
    for v in &frames_a {
        if let Some(blocks) = classical_on(rho, 0, v) {
            cq = true;
            if blocks_commute(&blocks) {
                cc = true;
                break;
            }
        }
    }
    let mut qc = false;
    for v in &frames_b {
        if let Some(blocks) = classical_on(rho, 1, v) {
            qc = true;
            if blocks_commute(&blocks) {
                cc = true;
                break;
            }
        }
    }
    let any = cc || cq || qc;
    Ok(ClassicalCheck {
        cc,
        cq: cq || cc,
        qc: qc || cc,
        conclusive: any || !(deg_a || deg_b),
        degenerate_marginals: deg_a || deg_b,
    })
}

/// Reasons a state provably lacks a witness pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    /// CC, CQ or QC: anonymity forces `[H_A, ρ] = 0`.
    NonDiscordant,
    /// Two qubits with nondegenerate marginals matching neither of the two
    /// admissible matrix patterns.
    TwoQubitForms,
    /// SA implies WA.
    NotWeaklyAnonymous,
    /// A separable state cannot be strongly anonymous.
    Separable,
    /// Full rank forces `H_A ⊗ 1 − 1 ⊗ G_B` to be a multiple of the identity.
    FullRank,
}

impl Exclusion {
    pub fn describe(self) -> &'static str {
        match self {
            Exclusion::NonDiscordant => "state has a classical (CC/CQ/QC) form; discord is necessary",
            Exclusion::TwoQubitForms => {
                "two-qubit state with nondegenerate marginals matches neither admissible form"
            }
            Exclusion::NotWeaklyAnonymous => "state is not weakly anonymous",
            Exclusion::Separable => "separable states cannot be strongly anonymous",
            Exclusion::FullRank => "full-rank states cannot be strongly anonymous",
        }
    }
}

/// WA or SA status of a state.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AnonymityStatus {
    Witnessed {
        pair: HamiltonianPair,
        check: AnonymityCheck,
    },
    /// Proven absent (witnessed-no).
    Excluded { reason: Exclusion, detail: String },
    /// Nondegenerate marginals, no pair within the spectrum bound.
    SearchExhausted { spectrum_bound: u32 },
    /// Degenerate marginals and no pair found.
    Inconclusive { reason: String },
}

impl AnonymityStatus {
    pub fn witnessed(&self) -> bool {
        matches!(self, AnonymityStatus::Witnessed { .. })
    }

    pub fn pair(&self) -> Option<&HamiltonianPair> {
        match self {
            AnonymityStatus::Witnessed { pair, .. } => Some(pair),
            _ => None,
        }
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, AnonymityStatus::Inconclusive { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            AnonymityStatus::Witnessed { .. } => "yes (witnessed)",
            AnonymityStatus::Excluded { .. } => "no (proven)",
            AnonymityStatus::SearchExhausted { .. } => "no witness found (search exhausted)",
            AnonymityStatus::Inconclusive { .. } => "inconclusive",
        }
    }

    fn excluded(reason: Exclusion) -> Self {
        AnonymityStatus::Excluded {
            reason,
            detail: reason.describe().to_string(),
        }
    }

    fn from_search(search: PairSearch, rho: &DensityMatrix, kind: Kind) -> Result<Self> {
        Ok(match search.pair {
            Some(pair) => {
                let check = match kind {
                    Kind::Weak => is_wa(rho, &pair)?,
                    Kind::Strong => is_sa(rho, &pair)?,
                };
                AnonymityStatus::Witnessed { pair, check }
            }
            None if search.degenerate_marginals => AnonymityStatus::Inconclusive {
                reason: format!(
                    "degenerate marginal; no pair found in {} candidate bases",
                    search.bases_tried
                ),
            },
            None => AnonymityStatus::SearchExhausted {
                spectrum_bound: search.spectrum_bound,
            },
        })
    }
}

/// Placement of a bipartite state in the correlation hierarchy.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub dims: Vec<usize>,
    pub wa: AnonymityStatus,
    pub sa: AnonymityStatus,
    pub ppt: PptCheck,
    pub classical: ClassicalCheck,
    /// A WA witness was found.
    pub aligned_discord: bool,
    /// An SA witness was found.
    pub aligned_entanglement: bool,
    pub discordant: Option<bool>,
    pub entangled: Option<bool>,
    pub spectrum_bound: u32,
    pub notes: Vec<String>,
}

impl ClassificationReport {
    /// Any part of the verdict left undecided.
    pub fn inconclusive(&self) -> bool {
        self.wa.is_inconclusive()
            || self.sa.is_inconclusive()
            || self.discordant.is_none()
            || self.entangled.is_none()
    }
}

pub fn classify(rho: &DensityMatrix, cfg: &SearchConfig) -> Result<ClassificationReport> {
    let ppt = is_entangled_ppt(rho)?;
    let classical = is_classical_with(rho, cfg)?;
    let dims = rho.dims().to_vec();
    let mut notes = Vec::new();

    let wa = if classical.any() {
        AnonymityStatus::excluded(Exclusion::NonDiscordant)
    } else {
        let search = find_wa_pair(rho, cfg)?;
        let two_qubit_exhaustive = dims == [2, 2] && !search.degenerate_marginals;
        if !search.found() && two_qubit_exhaustive {
            AnonymityStatus::excluded(Exclusion::TwoQubitForms)
        } else {
            AnonymityStatus::from_search(search, rho, Kind::Weak)?
        }
    };

    let separable = classical.any() || (ppt.conclusive && !ppt.npt);
    let full_rank = rho.rank() == rho.dim();
    let mut sa = match &wa {
        AnonymityStatus::Excluded { .. } => AnonymityStatus::excluded(Exclusion::NotWeaklyAnonymous),
        _ if separable => AnonymityStatus::excluded(Exclusion::Separable),
        _ if full_rank => AnonymityStatus::excluded(Exclusion::FullRank),
        _ => AnonymityStatus::from_search(find_sa_pair(rho, cfg)?, rho, Kind::Strong)?,
    };
    if !wa.witnessed() && matches!(sa, AnonymityStatus::SearchExhausted { .. }) {
        // no WA witness in the same search space means no SA witness either
        if let AnonymityStatus::Inconclusive { reason } = &wa {
            sa = AnonymityStatus::Inconclusive {
                reason: reason.clone(),
            };
        }
    }
    // an SA witness is a WA witness
    let wa = match (&wa, &sa) {
        (w, AnonymityStatus::Witnessed { pair, .. }) if !w.witnessed() => AnonymityStatus::Witnessed {
            pair: pair.clone(),
            check: is_wa(rho, pair)?,
        },
        _ => wa,
    };

    if !classical.conclusive {
        notes.push("classical-form test inconclusive: degenerate marginal".to_string());
    }
    if !ppt.conclusive {
        notes.push("PPT does not certify separability beyond 2x2 and 2x3".to_string());
    }
    let discordant = if classical.any() {
        Some(false)
    } else if classical.conclusive || ppt.npt || wa.witnessed() {
        Some(true)
    } else {
        None
    };
    let entangled = if ppt.npt || sa.witnessed() {
        Some(true)
    } else if separable {
        Some(false)
    } else {
        None
    };
    Ok(ClassificationReport {
        dims,
        aligned_discord: wa.witnessed(),
        aligned_entanglement: sa.witnessed(),
        wa,
        sa,
        ppt,
        classical,
        discordant,
        entangled,
        spectrum_bound: cfg.bound,
        notes,
    })
}
