//! Named states and state families, plus seeded random generators.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::qmat::{
    c, eigh, max_abs, partial_trace, ComplexMatrix, ComplexVector, DensityMatrix,
    HermitianOperator, Ket, C64, ONE, ZERO,
};

fn two_qubit_ket(amps: [C64; 4]) -> Ket {
    Ket::normalized(vec![2, 2], ComplexVector::from_column_slice(&amps))
        .expect("fixed two-qubit amplitudes are non-zero")
}

/// `|ψ+> = (|00> + |11>)/√2`.
pub fn bell_psi_plus() -> DensityMatrix {
    two_qubit_ket([ONE, ZERO, ZERO, ONE]).projector()
}

/// `|ψ−> = (|01> − |10>)/√2`, the singlet.
pub fn bell_psi_minus() -> DensityMatrix {
    two_qubit_ket([ZERO, ONE, -ONE, ZERO]).projector()
}

/// `a |ψ−><ψ−| + (1 − a) I/4`.
pub fn werner(a: f64) -> Result<DensityMatrix> {
    check_range("a", a, 0.0, 1.0, "[0, 1]")?;
    let singlet = bell_psi_minus();
    let mixed = DensityMatrix::maximally_mixed(vec![2, 2]);
    singlet.mix(&mixed, a)
}

/// `Σ_ij ρ_ij |ii><jj|` from a single-system density matrix of coefficients.
pub fn maximally_correlated(coeffs: &DensityMatrix) -> Result<DensityMatrix> {
    if coeffs.dims().len() != 1 {
        return Err(Error::InvalidInput(
            "coefficients must be a single-system density matrix".into(),
        ));
    }
    sa_degenerate(coeffs.matrix(), &vec![1; coeffs.dim()])
}

/// Support vectors `|iλ, iλ'>` for the given level degeneracies, in the order
/// level, then λ, then λ'. Returns the composite basis index of each.
pub fn degenerate_support(degeneracies: &[usize]) -> Vec<usize> {
    let d: usize = degeneracies.iter().sum();
    let mut out = Vec::new();
    let mut offset = 0;
    for &g in degeneracies {
        for lam in 0..g {
            for lam2 in 0..g {
                out.push((offset + lam) * d + offset + lam2);
            }
        }
        offset += g;
    }
    out
}

/// State of the form `Σ ρ_{ijλλ'μμ'} |iλ, iλ'><jμ, jμ'|`.
///
/// `coeffs` is a density matrix over the support vectors listed by
/// [`degenerate_support`]; level `i` occupies a block of `degeneracies[i]`
/// consecutive basis states on each side.
pub fn sa_degenerate(coeffs: &ComplexMatrix, degeneracies: &[usize]) -> Result<DensityMatrix> {
    if degeneracies.is_empty() || degeneracies.iter().any(|&g| g == 0) {
        return Err(Error::InvalidInput(
            "degeneracies must be a non-empty list of positive counts".into(),
        ));
    }
    let support = degenerate_support(degeneracies);
    let k = support.len();
    if coeffs.nrows() != k || coeffs.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "degeneracies {degeneracies:?} need a {k}x{k} coefficient matrix, got {}x{}",
            coeffs.nrows(),
            coeffs.ncols()
        )));
    }
    DensityMatrix::new(vec![k], coeffs.clone())?;
    let d: usize = degeneracies.iter().sum();
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for (r, &fr) in support.iter().enumerate() {
        for (s, &fs) in support.iter().enumerate() {
            m[(fr, fs)] = coeffs[(r, s)];
        }
    }
    DensityMatrix::new(vec![d, d], m)
}

/// The two-qubit mixture `m ρ₁ + (1 − m) ρ₂` with
/// `ρ₁ = |√a 00 + √(1−a) 11><…|` and `ρ₂ = |√b 01 + √(1−b) 10><…|`.
pub fn appendix_d_state(a: f64, b: f64, m: f64) -> Result<DensityMatrix> {
    check_range("a", a, 0.0, 1.0, "[0, 1]")?;
    check_range("b", b, 0.0, 1.0, "[0, 1]")?;
    check_range("m", m, 0.0, 1.0, "[0, 1]")?;
    let r = |x: f64| c(x.sqrt(), 0.0);
    let rho1 = two_qubit_ket([r(a), ZERO, ZERO, r(1.0 - a)]).projector();
    let rho2 = two_qubit_ket([ZERO, r(b), r(1.0 - b), ZERO]).projector();
    rho1.mix(&rho2, m)
}

/// Matrix entries quoted for the counterexample at `(a, b, m) = (0.45, 0.4,
/// 0.35)` in its local eigenbasis, rounded to one significant figure.
pub const APPENDIX_D_DISPLAY: [[f64; 4]; 4] = [
    [0.2, 0.0, 0.0, 0.2],
    [0.0, 0.3, 0.3, 0.0],
    [0.0, 0.3, 0.4, 0.0],
    [0.2, 0.0, 0.0, 0.1],
];

/// Eigenbasis of a single-system state as columns: eigenvalues descending,
/// each eigenvector's largest-magnitude component made real and positive
/// (the first such component on ties).
pub fn canonical_eigenbasis(rho: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = eigh(rho);
    let n = eig.values.len();
    let mut values = Vec::with_capacity(n);
    let mut basis = ComplexMatrix::zeros(n, n);
    for (col, k) in (0..n).rev().enumerate() {
        values.push(eig.values[k]);
        let v = eig.vectors.column(k);
        let mut best = 0;
        for i in 1..n {
            if v[i].norm() > v[best].norm() + 1e-12 {
                best = i;
            }
        }
        let phase = if v[best].norm() > 0.0 {
            v[best].conj() / v[best].norm()
        } else {
            ONE
        };
        for i in 0..n {
            basis[(i, col)] = v[i] * phase;
        }
    }
    (values, basis)
}

/// A bipartite state rewritten in the product of its marginals' canonical
/// eigenbases.
pub fn local_eigenbasis_view(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    if rho.dims().len() != 2 {
        return Err(Error::InvalidInput("expected a bipartite state".into()));
    }
    let (_, va) = canonical_eigenbasis(partial_trace(rho, &[0])?.matrix());
    let (_, vb) = canonical_eigenbasis(partial_trace(rho, &[1])?.matrix());
    let v = va.kronecker(&vb);
    Ok(v.adjoint() * rho.matrix() * v)
}

/// `½(|00><00| + |++><++|)`: separable but discordant.
pub fn discord_example() -> DensityMatrix {
    let k00 = two_qubit_ket([ONE, ZERO, ZERO, ZERO]).projector();
    let kpp = two_qubit_ket([ONE, ONE, ONE, ONE]).projector();
    k00.mix(&kpp, 0.5).expect("same dims")
}

/// Inputs for the three non-discordant forms.
#[derive(Debug, Clone)]
pub enum ClassicalForm {
    /// `Σ p_ij |i><i| ⊗ |j><j|` with `probs[i][j] = p_ij`.
    Cc {
        probs: Vec<Vec<f64>>,
        basis_a: ComplexMatrix,
        basis_b: ComplexMatrix,
    },
    /// `Σ p_i |i><i| ⊗ ρ_{B|i}`.
    Cq {
        probs: Vec<f64>,
        basis_a: ComplexMatrix,
        conditionals: Vec<DensityMatrix>,
    },
    /// `Σ p_j ρ_{A|j} ⊗ |j><j|`.
    Qc {
        probs: Vec<f64>,
        conditionals: Vec<DensityMatrix>,
        basis_b: ComplexMatrix,
    },
}

fn check_probabilities(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::InvalidInput(
            "probabilities must be finite and non-negative".into(),
        ));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "probabilities sum to {s}, not 1"
        )));
    }
    Ok(())
}

fn check_unitary(u: &ComplexMatrix, name: &str) -> Result<()> {
    if !u.is_square() {
        return Err(Error::InvalidInput(format!("{name} must be square")));
    }
    let n = u.nrows();
    let r = max_abs(&(u.adjoint() * u - ComplexMatrix::identity(n, n)));
    if r > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "{name} columns are not orthonormal (residual {r:.3e})"
        )));
    }
    Ok(())
}

fn basis_projector(u: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let v = u.column(k);
    v * v.adjoint()
}

pub fn classical_state(form: &ClassicalForm) -> Result<DensityMatrix> {
    match form {
        ClassicalForm::Cc {
            probs,
            basis_a,
            basis_b,
        } => {
            check_unitary(basis_a, "basis_a")?;
            check_unitary(basis_b, "basis_b")?;
            let (da, db) = (basis_a.nrows(), basis_b.nrows());
            if probs.len() != da || probs.iter().any(|row| row.len() != db) {
                return Err(Error::DimensionMismatch(format!(
                    "CC probabilities must be {da}x{db}"
                )));
            }
            let flat: Vec<f64> = probs.iter().flatten().copied().collect();
            check_probabilities(&flat)?;
            let mut m = ComplexMatrix::zeros(da * db, da * db);
            for i in 0..da {
                for j in 0..db {
                    m += basis_projector(basis_a, i)
                        .kronecker(&basis_projector(basis_b, j))
                        .scale(probs[i][j]);
                }
            }
            DensityMatrix::new(vec![da, db], m)
        }
        ClassicalForm::Cq {
            probs,
            basis_a,
            conditionals,
        } => {
            check_unitary(basis_a, "basis_a")?;
            let da = basis_a.nrows();
            let db = conditional_dim(conditionals, probs.len(), da)?;
            check_probabilities(probs)?;
            let mut m = ComplexMatrix::zeros(da * db, da * db);
            for (i, cond) in conditionals.iter().enumerate() {
                m += basis_projector(basis_a, i)
                    .kronecker(cond.matrix())
                    .scale(probs[i]);
            }
            DensityMatrix::new(vec![da, db], m)
        }
        ClassicalForm::Qc {
            probs,
            conditionals,
            basis_b,
        } => {
            check_unitary(basis_b, "basis_b")?;
            let db = basis_b.nrows();
            let da = conditional_dim(conditionals, probs.len(), db)?;
            check_probabilities(probs)?;
            let mut m = ComplexMatrix::zeros(da * db, da * db);
            for (j, cond) in conditionals.iter().enumerate() {
                m += cond
                    .matrix()
                    .kronecker(&basis_projector(basis_b, j))
                    .scale(probs[j]);
            }
            DensityMatrix::new(vec![da, db], m)
        }
    }
}

fn conditional_dim(conds: &[DensityMatrix], n_probs: usize, n_basis: usize) -> Result<usize> {
    if conds.len() != n_basis || n_probs != n_basis {
        return Err(Error::DimensionMismatch(format!(
            "need {n_basis} probabilities and conditional states, got {n_probs} and {}",
            conds.len()
        )));
    }
    let d = conds[0].dim();
    if conds.iter().any(|s| s.dim() != d || s.dims().len() != 1) {
        return Err(Error::DimensionMismatch(
            "conditional states must be single-system states of equal dimension".into(),
        ));
    }
    Ok(d)
}

/// `½(|00><00| + |11><11|)`.
pub fn cc_example() -> DensityMatrix {
    let id = ComplexMatrix::identity(2, 2);
    classical_state(&ClassicalForm::Cc {
        probs: vec![vec![0.5, 0.0], vec![0.0, 0.5]],
        basis_a: id.clone(),
        basis_b: id,
    })
    .expect("valid CC inputs")
}

/// `½ |0><0| ⊗ |+><+| + ½ |1><1| ⊗ |0><0|`.
pub fn cq_example() -> DensityMatrix {
    let plus = Ket::normalized(vec![2], ComplexVector::from_column_slice(&[ONE, ONE]))
        .expect("non-zero")
        .projector();
    let zero = Ket::basis(vec![2], &[0]).expect("valid").projector();
    classical_state(&ClassicalForm::Cq {
        probs: vec![0.5, 0.5],
        basis_a: ComplexMatrix::identity(2, 2),
        conditionals: vec![plus, zero],
    })
    .expect("valid CQ inputs")
}

/// `(Σ_i |i…i>)/√d` on `n` parties of dimension `d`.
pub fn ghz(n: usize, d: usize) -> Result<DensityMatrix> {
    if n < 2 || d < 2 {
        return Err(Error::InvalidInput(
            "GHZ state needs at least two parties of dimension at least two".into(),
        ));
    }
    let dims = vec![d; n];
    let total: usize = dims.iter().product();
    let stride: usize = (0..n).map(|k| d.pow(k as u32)).sum();
    let mut v = ComplexVector::zeros(total);
    for i in 0..d {
        v[i * stride] = ONE;
    }
    Ok(Ket::normalized(dims, v)?.projector())
}

/// `(1 − ε)|ψ+><ψ+| + ε |+0><+0|`, a Bell state nudged off the anonymous set.
pub fn perturbed_bell(eps: f64) -> Result<DensityMatrix> {
    check_range("eps", eps, 0.0, 1.0, "[0, 1]")?;
    let s = FRAC_1_SQRT_2;
    let plus_zero = two_qubit_ket([c(s, 0.0), ZERO, c(s, 0.0), ZERO]).projector();
    plus_zero.mix(&bell_psi_plus(), eps)
}

/// Default coefficient matrix of the `sa-degenerate` catalog entry.
pub const SA_DEGENERATE_FIXTURE_SEED: u64 = 2024;

/// Degeneracies `[2, 2]` with a full-rank random coefficient matrix; an SA
/// state for `H = G = diag(0, 0, 1, 1)`.
pub fn sa_degenerate_fixture() -> DensityMatrix {
    let degeneracies = [2, 2];
    let k = degenerate_support(&degeneracies).len();
    let coeffs = random_state(&[k], k, SA_DEGENERATE_FIXTURE_SEED).expect("valid dims");
    sa_degenerate(coeffs.matrix(), &degeneracies).expect("valid coefficients")
}

/// Name plus numeric parameters identifying a catalog state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub name: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

/// Catalog entries: name, parameters with defaults, description.
pub const CATALOG: &[(&str, &[(&str, f64)], &str)] = &[
    ("bell-psi-plus", &[], "(|00> + |11>)/sqrt2"),
    ("bell-psi-minus", &[], "(|01> - |10>)/sqrt2"),
    ("werner", &[("a", 0.5)], "a|psi-><psi-| + (1-a) I/4"),
    (
        "maximally-correlated",
        &[("p", 0.6), ("coherence", 0.3)],
        "p|00><00| + (1-p)|11><11| + coherence(|00><11| + h.c.)",
    ),
    (
        "sa-degenerate",
        &[],
        "degeneracies [2,2] SA state, witness H = G = diag(0,0,1,1)",
    ),
    (
        "appendix-d",
        &[("a", 0.45), ("b", 0.4), ("m", 0.35)],
        "m rho1 + (1-m) rho2, entangled but not WA",
    ),
    ("discord-example", &[], "(|00><00| + |++><++|)/2"),
    ("cc-example", &[], "(|00><00| + |11><11|)/2"),
    ("cq-example", &[], "|0><0| (x) |+><+|/2 + |1><1| (x) |0><0|/2"),
    ("ghz", &[("n", 3.0), ("d", 2.0)], "sum_i |i...i> / sqrt d"),
    (
        "perturbed-bell",
        &[("eps", 0.05)],
        "(1-eps)|psi+><psi+| + eps|+0><+0|",
    ),
    ("product", &[], "|0> (x) |+>"),
    ("maximally-mixed", &[("d", 2.0)], "I/d^2 on two d-level systems"),
];

impl StateSpec {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            parameters: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }

    /// Parameters with catalog defaults filled in. Unknown names or keys are
    /// rejected.
    pub fn resolved_parameters(&self) -> Result<BTreeMap<String, f64>> {
        let (_, defaults, _) = CATALOG
            .iter()
            .find(|(n, _, _)| *n == self.name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown catalog state `{}`", self.name)))?;
        for key in self.parameters.keys() {
            if !defaults.iter().any(|(k, _)| k == key) {
                return Err(Error::InvalidInput(format!(
                    "catalog state `{}` has no parameter `{key}`",
                    self.name
                )));
            }
        }
        Ok(defaults
            .iter()
            .map(|(k, v)| {
                (
                    k.to_string(),
                    self.parameters.get(*k).copied().unwrap_or(*v),
                )
            })
            .collect())
    }

    pub fn build(&self) -> Result<DensityMatrix> {
        let p = self.resolved_parameters()?;
        let get = |k: &str| p[k];
        let count = |k: &str| -> Result<usize> {
            let v = get(k);
            if v.fract() != 0.0 || v < 1.0 || v > 16.0 {
                return Err(Error::InvalidInput(format!(
                    "parameter {k} = {v} must be a small positive integer"
                )));
            }
            Ok(v as usize)
        };
        match self.name.as_str() {
            "bell-psi-plus" => Ok(bell_psi_plus()),
            "bell-psi-minus" => Ok(bell_psi_minus()),
            "werner" => werner(get("a")),
            "maximally-correlated" => {
                let (pp, coh) = (get("p"), get("coherence"));
                check_range("p", pp, 0.0, 1.0, "[0, 1]")?;
                let coeffs = ComplexMatrix::from_row_slice(
                    2,
                    2,
                    &[c(pp, 0.0), c(coh, 0.0), c(coh, 0.0), c(1.0 - pp, 0.0)],
                );
                maximally_correlated(&DensityMatrix::new(vec![2], coeffs)?)
            }
            "sa-degenerate" => Ok(sa_degenerate_fixture()),
            "appendix-d" => appendix_d_state(get("a"), get("b"), get("m")),
            "discord-example" => Ok(discord_example()),
            "cc-example" => Ok(cc_example()),
            "cq-example" => Ok(cq_example()),
            "ghz" => ghz(count("n")?, count("d")?),
            "perturbed-bell" => perturbed_bell(get("eps")),
            "product" => {
                let zero = Ket::basis(vec![2], &[0])?;
                let plus =
                    Ket::normalized(vec![2], ComplexVector::from_column_slice(&[ONE, ONE]))?;
                Ok(zero.tensor(&plus).projector())
            }
            "maximally-mixed" => {
                let d = count("d")?;
                Ok(DensityMatrix::maximally_mixed(vec![d, d]))
            }
            other => Err(Error::InvalidInput(format!("unknown catalog state `{other}`"))),
        }
    }
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = gaussian_c64(rng);
        }
    }
    m
}

/// Random state as the marginal of a Gaussian pure state on `D × rank`.
pub fn random_state(dims: &[usize], rank: usize, seed: u64) -> Result<DensityMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_state_with(&mut rng, dims, rank)
}

pub fn random_state_with<R: Rng + ?Sized>(
    rng: &mut R,
    dims: &[usize],
    rank: usize,
) -> Result<DensityMatrix> {
    let d: usize = dims.iter().product();
    if dims.is_empty() || d == 0 {
        return Err(Error::InvalidInput("dims must be non-empty and positive".into()));
    }
    if rank == 0 || rank > d {
        return Err(Error::InvalidInput(format!(
            "rank must be in 1..={d}, got {rank}"
        )));
    }
    let g = gaussian_matrix(rng, d, rank);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    Ok(DensityMatrix::from_parts_unchecked(dims.to_vec(), m.unscale(tr)))
}

/// Random pure state with Gaussian amplitudes.
pub fn random_ket_with<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> Result<Ket> {
    let d: usize = dims.iter().product();
    let v = ComplexVector::from_iterator(d, (0..d).map(|_| gaussian_c64(rng)));
    Ket::normalized(dims.to_vec(), v)
}

/// Gaussian Hermitian matrix `(A + A†)/2`.
pub fn random_hermitian(dim: usize, seed: u64) -> HermitianOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_hermitian_with(&mut rng, dim)
}

pub fn random_hermitian_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = gaussian_matrix(rng, dim, dim);
    HermitianOperator::new((&g + g.adjoint()).scale(0.5)).expect("Hermitian by construction")
}

/// Unitary from the QR decomposition of a Gaussian matrix, with the phases of
/// R's diagonal divided out.
pub fn random_unitary_with<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    let g = gaussian_matrix(rng, dim, dim);
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            let mut col = q.column_mut(j);
            col *= ph;
        }
    }
    q
}

/// Pure bipartite state with exactly `schmidt_rank` non-zero Schmidt
/// coefficients, in random local bases.
pub fn random_pure_with_schmidt_rank<R: Rng + ?Sized>(
    rng: &mut R,
    da: usize,
    db: usize,
    schmidt_rank: usize,
) -> Result<Ket> {
    if schmidt_rank == 0 || schmidt_rank > da.min(db) {
        return Err(Error::InvalidInput(format!(
            "Schmidt rank must be in 1..={}",
            da.min(db)
        )));
    }
    let ua = random_unitary_with(rng, da);
    let ub = random_unitary_with(rng, db);
    let mut v = ComplexVector::zeros(da * db);
    for k in 0..schmidt_rank {
        let w: f64 = 0.2 + rng.gen::<f64>();
        for i in 0..da {
            for j in 0..db {
                v[i * db + j] += ua[(i, k)] * ub[(j, k)] * w;
            }
        }
    }
    Ket::normalized(vec![da, db], v)
}

/// Random mixture of `terms` random product states.
pub fn random_separable_with<R: Rng + ?Sized>(
    rng: &mut R,
    da: usize,
    db: usize,
    terms: usize,
) -> Result<DensityMatrix> {
    if terms == 0 {
        return Err(Error::InvalidInput("need at least one term".into()));
    }
    let mut m = ComplexMatrix::zeros(da * db, da * db);
    let mut total = 0.0;
    for _ in 0..terms {
        let w: f64 = rng.gen::<f64>() + 1e-3;
        let (rank_a, rank_b) = (rng.gen_range(1..=da), rng.gen_range(1..=db));
        let ra = random_state_with(rng, &[da], rank_a)?;
        let rb = random_state_with(rng, &[db], rank_b)?;
        m += ra.matrix().kronecker(rb.matrix()).scale(w);
        total += w;
    }
    DensityMatrix::new(vec![da, db], m.unscale(total))
}

/// `rows × cols` matrix of reals, for building test fixtures.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    DMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c(x, 0.0)))
}
