//! Simulation of the three-party protocol and of Charlie's attacks.
//!
//! Alice and Bob share ρ; one of them applies `exp(−iθ·generator)` to their
//! half and both halves go to Charlie. Charlie measures every copy with a
//! fixed local informationally complete POVM, estimates θ by maximum
//! likelihood and guesses the encoder by a likelihood-ratio test.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymmetry::FrequencyTable;
use crate::classify::HamiltonianPair;
use crate::error::{Error, Result};
use crate::metrology::{multicopy_distance_bound, Extended};
use crate::qmat::{
    c, eigh, embed, purify, trace_distance_matrices, ComplexMatrix, ComplexVector, DensityMatrix,
    Ket, C64, I, ONE, ZERO,
};
use crate::tolerance::{tolerances, Verdict};
use crate::Side;

/// Largest total dimension `D^n` for which n-copy Helstrom is exact.
pub const EXACT_HELSTROM_LIMIT: usize = 4096;

fn rank_one(v: &ComplexVector, weight: f64) -> ComplexMatrix {
    (v * v.adjoint()).scale(weight)
}

fn qubit_sic() -> Vec<ComplexMatrix> {
    let s = (2.0f64).sqrt();
    let bloch = [
        [0.0, 0.0, 1.0],
        [2.0 * s / 3.0, 0.0, -1.0 / 3.0],
        [-s / 3.0, (2.0f64 / 3.0).sqrt(), -1.0 / 3.0],
        [-s / 3.0, -(2.0f64 / 3.0).sqrt(), -1.0 / 3.0],
    ];
    bloch
        .iter()
        .map(|[x, y, z]| {
            let mut m = ComplexMatrix::zeros(2, 2);
            m[(0, 0)] = c(1.0 + z, 0.0);
            m[(1, 1)] = c(1.0 - z, 0.0);
            m[(0, 1)] = c(*x, -*y);
            m[(1, 0)] = c(*x, *y);
            m.scale(0.25)
        })
        .collect()
}

/// Weyl-Heisenberg orbit of `(0, 1, −1)/√2`.
fn qutrit_sic() -> Vec<ComplexMatrix> {
    let w = C64::from_polar(1.0, TAU / 3.0);
    let fid = [ZERO, c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)];
    let mut out = Vec::with_capacity(9);
    for a in 0..3 {
        for b in 0..3 {
            let v = ComplexVector::from_fn(3, |k, _| {
                let src = (k + 3 - a) % 3;
                fid[src] * w.powu((b * k) as u32)
            });
            out.push(rank_one(&v, 1.0 / 3.0));
        }
    }
    out
}

/// `d²` rank-one projectors spanning the Hermitian matrices, made into a
/// POVM by `E_k = S^{−1/2} P_k S^{−1/2}` with `S = Σ P_k`.
fn generic_ic(d: usize) -> Vec<ComplexMatrix> {
    let mut vecs = Vec::with_capacity(d * d);
    for k in 0..d {
        let mut v = ComplexVector::zeros(d);
        v[k] = ONE;
        vecs.push(v);
    }
    for j in 0..d {
        for k in j + 1..d {
            for phase in [ONE, I] {
                let mut v = ComplexVector::zeros(d);
                v[j] = c(FRAC_1_SQRT_2, 0.0);
                v[k] = phase * FRAC_1_SQRT_2;
                vecs.push(v);
            }
        }
    }
    let projs: Vec<ComplexMatrix> = vecs.iter().map(|v| rank_one(v, 1.0)).collect();
    let s = projs.iter().fold(ComplexMatrix::zeros(d, d), |acc, p| acc + p);
    let inv_sqrt = eigh(&s).map(|x| c(1.0 / x.sqrt(), 0.0));
    projs.iter().map(|p| &inv_sqrt * p * &inv_sqrt).collect()
}

/// Informationally complete single-system POVM: SIC for d = 2, 3, the
/// generic construction otherwise.
pub fn ic_povm(d: usize) -> Result<Vec<ComplexMatrix>> {
    match d {
        0 => Err(Error::InvalidInput("dimension must be positive".into())),
        1 => Ok(vec![ComplexMatrix::identity(1, 1)]),
        2 => Ok(qubit_sic()),
        3 => Ok(qutrit_sic()),
        _ => Ok(generic_ic(d)),
    }
}

/// Product POVM `E_x ⊗ F_y` on a composite system; outcome index is
/// row-major over the parties.
pub fn local_povm(dims: &[usize]) -> Result<Vec<ComplexMatrix>> {
    let mut out = vec![ComplexMatrix::identity(1, 1)];
    for &d in dims {
        let local = ic_povm(d)?;
        out = out
            .iter()
            .flat_map(|m| local.iter().map(move |e| m.kronecker(e)))
            .collect();
    }
    Ok(out)
}

/// Outcome probabilities `p_k(θ) = Σ_ω c_{kω} e^{−iωθ}` for one encoding
/// hypothesis.
struct OutcomeModel {
    freqs: Vec<f64>,
    coeffs: Vec<Vec<C64>>,
}

impl OutcomeModel {
    fn new(rho: &DensityMatrix, pair: &HamiltonianPair, side: Side, povm: &[ComplexMatrix]) -> Result<Self> {
        let eig = pair.generator(side).eigen();
        let frame = embed(&eig.vectors, rho.dims(), side.index())?;
        let lam: Vec<f64> = (0..rho.dim())
            .map(|k| eig.values[crate::qmat::digits(k, rho.dims())[side.index()]])
            .collect();
        let tol = tolerances().freq;
        let table = FrequencyTable::bohr(&[&lam], tol);
        let r = frame.adjoint() * rho.matrix() * &frame;
        let freqs = table.freqs().to_vec();
        let coeffs = povm
            .iter()
            .map(|m| {
                let mp = frame.adjoint() * m * &frame;
                let mut cw = vec![ZERO; freqs.len()];
                for a in 0..r.nrows() {
                    for b in 0..r.ncols() {
                        let w = table.label(lam[a] - lam[b]);
                        cw[w] += mp[(b, a)] * r[(a, b)];
                    }
                }
                cw
            })
            .collect();
        Ok(Self { freqs, coeffs })
    }

    fn probs(&self, theta: f64) -> Vec<f64> {
        let phases: Vec<C64> = self.freqs.iter().map(|w| C64::from_polar(1.0, -w * theta)).collect();
        self.coeffs
            .iter()
            .map(|cw| cw.iter().zip(&phases).map(|(a, b)| a * b).sum::<C64>().re)
            .collect()
    }

    fn dprobs(&self, theta: f64) -> Vec<f64> {
        let d: Vec<C64> = self
            .freqs
            .iter()
            .map(|w| C64::from_polar(1.0, -w * theta) * c(0.0, -w))
            .collect();
        self.coeffs
            .iter()
            .map(|cw| cw.iter().zip(&d).map(|(a, b)| a * b).sum::<C64>().re)
            .collect()
    }

    fn log_likelihood(&self, counts: &[u64], theta: f64) -> f64 {
        self.probs(theta)
            .iter()
            .zip(counts)
            .filter(|(_, &n)| n > 0)
            .map(|(p, &n)| n as f64 * p.max(1e-300).ln())
            .sum()
    }

    fn fisher(&self, theta: f64) -> f64 {
        self.probs(theta)
            .iter()
            .zip(self.dprobs(theta))
            .filter(|(p, _)| **p > 1e-15)
            .map(|(p, dp)| dp * dp / p)
            .sum()
    }
}

/// Encoded state `U ρ U†` for the given side.
pub fn encoded_state(rho: &DensityMatrix, pair: &HamiltonianPair, side: Side, theta: f64) -> Result<DensityMatrix> {
    pair.check_dims(rho)?;
    rho.conjugate(&pair.local_unitary(side, theta, rho.dims())?)
}

/// Optimal identity-guessing probability between two states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HelstromReport {
    pub copies: usize,
    pub trace_distance: f64,
    /// `(1 + T)/2` for a single copy.
    pub single_copy: f64,
    /// Exact n-copy value when `D^n ≤ 4096`.
    pub exact: Option<f64>,
    /// `(1 + √(1 − (1 − T)^{2n}))/2`.
    pub bound: f64,
}

impl HelstromReport {
    /// The exact value when available, the bound otherwise.
    pub fn best(&self) -> f64 {
        self.exact.unwrap_or(self.bound)
    }
}

fn tensor_power_matrix(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut out = m.clone();
    for _ in 1..n {
        out = out.kronecker(m);
    }
    out
}

pub fn helstrom_guess_probability(rho1: &DensityMatrix, rho2: &DensityMatrix, n: usize) -> Result<HelstromReport> {
    if rho1.dims() != rho2.dims() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compare dims {:?} and {:?}",
            rho1.dims(),
            rho2.dims()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("need at least one copy".into()));
    }
    let t = trace_distance_matrices(rho1.matrix(), rho2.matrix()).min(1.0);
    let exact = rho1
        .dim()
        .checked_pow(n as u32)
        .filter(|&d| d <= EXACT_HELSTROM_LIMIT)
        .map(|_| {
            let tn = trace_distance_matrices(
                &tensor_power_matrix(rho1.matrix(), n),
                &tensor_power_matrix(rho2.matrix(), n),
            );
            0.5 * (1.0 + tn.min(1.0))
        });
    Ok(HelstromReport {
        copies: n,
        trace_distance: t,
        single_copy: 0.5 * (1.0 + t),
        exact,
        bound: 0.5 * (1.0 + multicopy_distance_bound(t, n)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolTranscript {
    pub encoder: Side,
    pub theta_true: f64,
    pub n_copies: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub outcome_counts: Vec<u64>,
    pub theta_estimate: f64,
    pub estimate_stderr: Extended,
    /// The likelihood does not depend on θ (nothing was encoded).
    pub likelihood_flat: bool,
    /// `max_θ log L_A − max_θ log L_B`.
    pub log_likelihood_ratio: f64,
    pub charlie_guess: Side,
    pub guess_was_tie: bool,
    pub charlie_correct: bool,
    pub helstrom_optimal_prob: f64,
    pub charlie_guess_prob_bound: f64,
    pub charlie_guess_prob_exact: bool,
}

/// Settings of a protocol run besides the state and pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub encoder: Side,
    pub theta: f64,
    pub copies: usize,
    pub seed: u64,
    pub grid_points: usize,
}

impl ProtocolConfig {
    pub fn new(encoder: Side, theta: f64, copies: usize, seed: u64) -> Self {
        Self {
            encoder,
            theta,
            copies,
            seed,
            grid_points: 1024,
        }
    }
}

/// Inverse-CDF sample with a per-copy stream of a seeded generator.
fn sample(cdf: &[f64], seed: u64, copy: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(copy);
    let u: f64 = rng.gen::<f64>() * cdf.last().copied().unwrap_or(1.0);
    cdf.iter().position(|&x| u < x).unwrap_or(cdf.len() - 1)
}

pub fn run_protocol(
    rho: &DensityMatrix,
    pair: &HamiltonianPair,
    encoder: Side,
    theta_true: f64,
    n_copies: usize,
    seed: u64,
) -> Result<ProtocolTranscript> {
    run_protocol_with(rho, pair, &ProtocolConfig::new(encoder, theta_true, n_copies, seed))
}

pub fn run_protocol_with(rho: &DensityMatrix, pair: &HamiltonianPair, cfg: &ProtocolConfig) -> Result<ProtocolTranscript> {
    pair.check_dims(rho)?;
    if !(cfg.theta.is_finite() && (0.0..TAU).contains(&cfg.theta)) {
        return Err(Error::OutOfRange {
            name: "theta",
            value: cfg.theta,
            range: "[0, 2π)",
        });
    }
    if cfg.copies == 0 {
        return Err(Error::InvalidInput("need at least one copy".into()));
    }
    if cfg.grid_points == 0 {
        return Err(Error::InvalidInput("θ grid is empty".into()));
    }
    let povm = local_povm(rho.dims())?;
    let models = [
        OutcomeModel::new(rho, pair, Side::A, &povm)?,
        OutcomeModel::new(rho, pair, Side::B, &povm)?,
    ];

    let truth = models[cfg.encoder.index()].probs(cfg.theta);
    let mut cdf = Vec::with_capacity(truth.len());
    let mut acc = 0.0;
    for p in &truth {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let outcomes: Vec<usize> = (0..cfg.copies as u64)
        .into_par_iter()
        .map(|k| sample(&cdf, cfg.seed, k))
        .collect();
    let mut counts = vec![0u64; povm.len()];
    for o in outcomes {
        counts[o] += 1;
    }

    let grid: Vec<f64> = (0..cfg.grid_points)
        .map(|k| TAU * k as f64 / cfg.grid_points as f64)
        .collect();
    let scan = |m: &OutcomeModel| -> (f64, f64, f64) {
        let ll: Vec<f64> = grid.iter().map(|&t| m.log_likelihood(&counts, t)).collect();
        let (mut best, mut arg, mut worst) = (f64::NEG_INFINITY, 0.0, f64::INFINITY);
        for (t, v) in grid.iter().zip(&ll) {
            if *v > best {
                best = *v;
                arg = *t;
            }
            worst = worst.min(*v);
        }
        (best, arg, worst)
    };
    let (max_a, arg_a, min_a) = scan(&models[0]);
    let (max_b, arg_b, min_b) = scan(&models[1]);
    let ratio = max_a - max_b;
    let tie = ratio.abs() <= 1e-9 * (1.0 + max_a.abs());
    let guess = if tie {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::MAX);
        if rng.gen_bool(0.5) {
            Side::A
        } else {
            Side::B
        }
    } else if ratio > 0.0 {
        Side::A
    } else {
        Side::B
    };
    let (theta_estimate, best, worst) = match guess {
        Side::A => (arg_a, max_a, min_a),
        Side::B => (arg_b, max_b, min_b),
    };
    let flat = best - worst <= 1e-9 * (1.0 + best.abs());
    let fisher = models[guess.index()].fisher(theta_estimate);
    let estimate_stderr = if fisher > 1e-15 {
        Extended::Finite(1.0 / (cfg.copies as f64 * fisher).sqrt())
    } else {
        Extended::Infinite
    };

    let rho_h = encoded_state(rho, pair, Side::A, cfg.theta)?;
    let rho_g = encoded_state(rho, pair, Side::B, cfg.theta)?;
    let helstrom = helstrom_guess_probability(&rho_h, &rho_g, cfg.copies)?;

    Ok(ProtocolTranscript {
        encoder: cfg.encoder,
        theta_true: cfg.theta,
        n_copies: cfg.copies,
        seed: cfg.seed,
        grid_points: cfg.grid_points,
        outcome_counts: counts,
        theta_estimate,
        estimate_stderr,
        likelihood_flat: flat,
        log_likelihood_ratio: ratio,
        charlie_guess: guess,
        guess_was_tie: tie,
        charlie_correct: guess == cfg.encoder,
        helstrom_optimal_prob: helstrom.single_copy,
        charlie_guess_prob_bound: helstrom.best(),
        charlie_guess_prob_exact: helstrom.exact.is_some(),
    })
}

/// `T` between pure states after optimizing the relative global phase,
/// computed as `√((1 − |z|)(1 + |z|))` with `1 − |z| = ‖a − e^{iφ}b‖²/2` so
/// that nearly parallel vectors give a small result without cancellation.
pub fn pure_trace_distance(a: &ComplexVector, b: &ComplexVector) -> f64 {
    let z = a.dotc(b);
    let phase = if z.norm() > 0.0 { z / z.norm() } else { ONE };
    let diff = a - b * phase.conj();
    let gap = (0.5 * diff.norm_squared()).clamp(0.0, 1.0);
    (gap * (2.0 - gap)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackReport {
    pub theta: f64,
    /// `T(U_A|ψ⟩, V_B|ψ⟩)` at `theta`, with `|ψ⟩` a purification of ρ.
    pub leak: f64,
    pub max_leak: f64,
    pub argmax_theta: f64,
    /// No leak anywhere on the grid.
    pub sa_safe: bool,
    /// The pair encodes θ on this state at all.
    pub applicable: bool,
    pub purification_dim: usize,
}

fn leak_at(psi: &Ket, pair: &HamiltonianPair, theta: f64) -> Result<f64> {
    let dims = psi.dims();
    let ua = embed(&crate::qmat::unitary_of(&pair.h_a, theta), dims, 0)?;
    let vb = embed(&crate::qmat::unitary_of(&pair.g_b, theta), dims, 1)?;
    let a = &ua * psi.amplitudes();
    let b = &vb * psi.amplitudes();
    Ok(pure_trace_distance(&a, &b))
}

/// Charlie holds the purifying system and tries to tell `U_A|ψ⟩` from
/// `V_B|ψ⟩`. Safe exactly for strongly anonymous states.
pub fn purification_attack(rho: &DensityMatrix, pair: &HamiltonianPair, theta: f64) -> Result<AttackReport> {
    purification_attack_on_grid(rho, pair, theta, 256)
}

pub fn purification_attack_on_grid(
    rho: &DensityMatrix,
    pair: &HamiltonianPair,
    theta: f64,
    grid_points: usize,
) -> Result<AttackReport> {
    pair.check_dims(rho)?;
    if !theta.is_finite() {
        return Err(Error::NonFinite);
    }
    if grid_points == 0 {
        return Err(Error::InvalidInput("θ grid is empty".into()));
    }
    let tol = tolerances();
    let ha = pair.embedded(Side::A, rho.dims())?;
    let encoding = crate::qmat::max_abs(&crate::qmat::commutator(&ha, rho.matrix()));
    let applicable = Verdict::from_nonzero(encoding, &tol).holds();
    let psi = purify(rho);
    let leak = leak_at(&psi, pair, theta)?;
    let mut best = (0.0_f64, 0.0);
    for k in 0..grid_points {
        let t = TAU * k as f64 / grid_points as f64;
        let l = leak_at(&psi, pair, t)?;
        if l > best.0 {
            best = (l, t);
        }
    }
    Ok(AttackReport {
        theta,
        leak,
        max_leak: best.0,
        argmax_theta: best.1,
        sa_safe: best.0 <= tol.holds,
        applicable,
        purification_dim: psi.dims()[2],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelocalisedReport {
    pub theta: f64,
    pub path_coherence_in: f64,
    pub path_coherence_out: f64,
    /// Coherence preserved: the path factors out of the joint state.
    pub factorized: bool,
}

/// Path qubit prepared in `a|L⟩ + b|R⟩`, controlling which party encodes:
/// `W = |L⟩⟨L| ⊗ U_A ⊗ 1 + |R⟩⟨R| ⊗ 1 ⊗ V_B`.
pub fn path_state(rho: &DensityMatrix, a: C64, b: C64) -> Result<DensityMatrix> {
    let norm = a.norm_sqr() + b.norm_sqr();
    if (norm - 1.0).abs() > tolerances().norm {
        return Err(Error::NotNormalized {
            residual: (norm - 1.0).abs(),
        });
    }
    let path = Ket::new(vec![2], ComplexVector::from_vec(vec![a, b]))?.projector();
    Ok(path.tensor(rho))
}

pub fn delocalised_measurement(
    rho: &DensityMatrix,
    pair: &HamiltonianPair,
    a: C64,
    b: C64,
    theta: f64,
) -> Result<DelocalisedReport> {
    pair.check_dims(rho)?;
    let joint = path_state(rho, a, b)?;
    let dims = joint.dims().to_vec();
    let left = embed(crate::qmat::HermitianOperator::projector(2, 0).matrix(), &dims, 0)?;
    let right = embed(crate::qmat::HermitianOperator::projector(2, 1).matrix(), &dims, 0)?;
    let ua = embed(&crate::qmat::unitary_of(&pair.h_a, theta), &dims, 1)?;
    let vb = embed(&crate::qmat::unitary_of(&pair.g_b, theta), &dims, 2)?;
    let w = &left * ua + &right * vb;
    let out = w.clone() * joint.matrix() * w.adjoint();
    let coherence = |m: &ComplexMatrix| {
        let d = m.nrows() / 2;
        let mut s = ZERO;
        for k in 0..d {
            s += m[(k, d + k)];
        }
        s.norm()
    };
    let cin = coherence(joint.matrix());
    let cout = coherence(&out);
    Ok(DelocalisedReport {
        theta,
        path_coherence_in: cin,
        path_coherence_out: cout,
        factorized: (cin - cout).abs() <= tolerances().holds,
    })
}
