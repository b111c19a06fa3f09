//! Quantum Fisher information, the anonymity-limited copy budget `n_δ`, the
//! figure of merit `M(ρ; H, G)` and the robustness bounds.
//!
//! ```text
//! F̄       = ½ (𝓕(ρ; H_A) + 𝓕(ρ; G_B))
//! n_δ     = log(1 − 4δ²) / (2 log min_θ F(ρ_H(θ), ρ_G(θ)))
//! M       = F̄ / (−log min_θ F(ρ_H(θ), ρ_G(θ)))
//! ```

use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::classify::HamiltonianPair;
use crate::error::{check_range, Error, Result};
use crate::qmat::{c, embed, sqrt_psd, trace_norm, ComplexMatrix, DensityMatrix, HermitianOperator, C64};
use crate::tolerance::tolerances;
use crate::Side;

/// `1 − min F` at or below this counts as perfect anonymity.
pub const PERFECT_FIDELITY_GAP: f64 = 1e-12;

/// A non-negative quantity that may be unbounded. Serializes the unbounded
/// case as the string `"+inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_infinite(self) -> bool {
        matches!(self, Extended::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            Extended::Infinite => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl PartialOrd for Extended {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(x) => write!(f, "{x:.6}"),
            Extended::Infinite => f.write_str("+inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Extended::Finite(x) => s.serialize_f64(*x),
            Extended::Infinite => s.serialize_str("+inf"),
        }
    }
}

/// SLD quantum Fisher information of `exp(−iθH)ρ exp(iθH)` with `H` acting
/// on one side.
pub fn qfi(rho: &DensityMatrix, h: &HermitianOperator, side: Side) -> Result<f64> {
    if rho.dims().len() != 2 {
        return Err(Error::InvalidInput("expected a bipartite state".into()));
    }
    qfi_on(rho, h, side.index())
}

/// QFI for a generator on subsystem `sys` of any composite state.
pub fn qfi_on(rho: &DensityMatrix, h: &HermitianOperator, sys: usize) -> Result<f64> {
    if sys >= rho.dims().len() || rho.dims()[sys] != h.dim() {
        return Err(Error::DimensionMismatch(format!(
            "generator of dimension {} does not fit subsystem {sys} of {:?}",
            h.dim(),
            rho.dims()
        )));
    }
    let full = embed(h.matrix(), rho.dims(), sys)?;
    Ok(qfi_full(&rho.eigen(), &full))
}

fn qfi_full(eig: &crate::qmat::Eigen, h: &ComplexMatrix) -> f64 {
    let cutoff = tolerances().qfi_cutoff;
    let hp = eig.vectors.adjoint() * h * &eig.vectors;
    let l = &eig.values;
    let mut f = 0.0;
    for i in 0..l.len() {
        for j in 0..l.len() {
            let s = l[i] + l[j];
            if s > cutoff {
                f += (l[i] - l[j]).powi(2) / s * hp[(i, j)].norm_sqr();
            }
        }
    }
    2.0 * f
}

/// θ grid on `[0, 2π)`; the coarse minimum is refined with `refine`
/// sub-steps on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ThetaGrid {
    pub points: usize,
    pub refine: usize,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        Self {
            points: 256,
            refine: 4,
        }
    }
}

impl ThetaGrid {
    pub fn new(points: usize) -> Self {
        Self {
            points,
            ..Self::default()
        }
    }

    pub fn coarse(&self) -> Vec<f64> {
        (0..self.points)
            .map(|k| TAU * k as f64 / self.points as f64)
            .collect()
    }

    /// Minimizes `f` over the grid; returns `(value, argmin)`.
    pub fn minimize<F: Fn(f64) -> f64>(&self, f: F) -> Result<(f64, f64)> {
        if self.points == 0 {
            return Err(Error::InvalidInput("θ grid is empty".into()));
        }
        let mut best = (f64::INFINITY, 0.0);
        for t in self.coarse() {
            let v = f(t);
            if v < best.0 {
                best = (v, t);
            }
        }
        let h = TAU / self.points as f64;
        let centre = best.1;
        let r = self.refine as i64;
        for j in -r + 1..r {
            if j == 0 {
                continue;
            }
            let t = (centre + h * j as f64 / r as f64).rem_euclid(TAU);
            let v = f(t);
            if v < best.0 {
                best = (v, t);
            }
        }
        Ok(best)
    }
}

/// `F(θ) = ‖√ρ W(θ) √ρ‖₁` with `W = U_A†V_B`, which is diagonal in the
/// product eigenbasis of the pair.
struct FidelityScan {
    sqrt_frame: ComplexMatrix,
    /// `E_i − G_j` for each product basis state.
    gaps: Vec<f64>,
}

impl FidelityScan {
    fn new(sqrt_rho: &ComplexMatrix, pair: &HamiltonianPair) -> Self {
        let (ea, eb) = (pair.h_a.eigen(), pair.g_b.eigen());
        let frame = ea.vectors.kronecker(&eb.vectors);
        let sqrt_frame = frame.adjoint() * sqrt_rho * &frame;
        let gaps = ea
            .values
            .iter()
            .flat_map(|e| eb.values.iter().map(move |g| e - g))
            .collect();
        Self { sqrt_frame, gaps }
    }

    fn at(&self, theta: f64) -> f64 {
        let mut right = self.sqrt_frame.clone();
        for (r, gap) in self.gaps.iter().enumerate() {
            let ph = C64::from_polar(1.0, theta * gap);
            let mut row = right.row_mut(r);
            row *= ph;
        }
        trace_norm(&(&self.sqrt_frame * right)).min(1.0)
    }
}

/// `min_θ F(ρ_H(θ), ρ_G(θ))` over the grid, with the minimizing θ.
pub fn min_fidelity_over_theta(
    rho: &DensityMatrix,
    pair: &HamiltonianPair,
    grid: &ThetaGrid,
) -> Result<(f64, f64)> {
    pair.check_dims(rho)?;
    let scan = FidelityScan::new(&sqrt_psd(rho.matrix()), pair);
    grid.minimize(|t| scan.at(t))
}

pub fn n_delta_from_fidelity(min_fidelity: f64, delta: f64) -> Result<Extended> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::OutOfRange {
            name: "delta",
            value: delta,
            range: "(0, 0.5)",
        });
    }
    check_range("min fidelity", min_fidelity, 0.0, 1.0, "[0, 1]")?;
    if 1.0 - min_fidelity <= PERFECT_FIDELITY_GAP {
        return Ok(Extended::Infinite);
    }
    if min_fidelity == 0.0 {
        return Ok(Extended::Finite(0.0));
    }
    Ok(Extended::Finite(
        (1.0 - 4.0 * delta * delta).ln() / (2.0 * min_fidelity.ln()),
    ))
}

/// Copies Charlie may receive before his identity-guess advantage exceeds δ.
pub fn n_delta(rho: &DensityMatrix, pair: &HamiltonianPair, delta: f64, grid: &ThetaGrid) -> Result<Extended> {
    let (f, _) = min_fidelity_over_theta(rho, pair, grid)?;
    n_delta_from_fidelity(f, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeritReport {
    pub qfi_a: f64,
    pub qfi_b: f64,
    pub avg_qfi: f64,
    pub min_fidelity: f64,
    pub argmin_theta: f64,
    pub delta: f64,
    pub n_delta: Extended,
    pub merit: Extended,
    pub grid_points: usize,
}

fn merit_from(avg_qfi: f64, min_fidelity: f64) -> Extended {
    if avg_qfi <= tolerances().qfi_cutoff {
        Extended::Finite(0.0)
    } else if 1.0 - min_fidelity <= PERFECT_FIDELITY_GAP {
        Extended::Infinite
    } else if min_fidelity == 0.0 {
        Extended::Finite(0.0)
    } else {
        Extended::Finite(avg_qfi / -min_fidelity.ln())
    }
}

pub fn figure_of_merit(
    rho: &DensityMatrix,
    pair: &HamiltonianPair,
    grid: &ThetaGrid,
    delta: f64,
) -> Result<MeritReport> {
    pair.check_dims(rho)?;
    let qfi_a = qfi(rho, &pair.h_a, Side::A)?;
    let qfi_b = qfi(rho, &pair.g_b, Side::B)?;
    let avg_qfi = 0.5 * (qfi_a + qfi_b);
    let (min_fidelity, argmin_theta) = min_fidelity_over_theta(rho, pair, grid)?;
    Ok(MeritReport {
        qfi_a,
        qfi_b,
        avg_qfi,
        min_fidelity,
        argmin_theta,
        delta,
        n_delta: n_delta_from_fidelity(min_fidelity, delta)?,
        merit: merit_from(avg_qfi, min_fidelity),
        grid_points: grid.points,
    })
}

/// Which extremum of `M(ρ; H, G)` over unit-norm pairs to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Min,
    Max,
}

impl Direction {
    fn better(self, a: Extended, b: Extended) -> bool {
        match self {
            Direction::Max => a > b,
            Direction::Min => a < b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub steps: usize,
    pub seed: u64,
    pub direction: Direction,
    pub grid: ThetaGrid,
    pub initial_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            steps: 200,
            seed: 0,
            direction: Direction::Max,
            grid: ThetaGrid { points: 64, refine: 4 },
            initial_step: 0.5,
        }
    }
}

pub const DIRECTION_NOTE: &str = "the definition of M(rho) is ambiguous between a minimum and a \
maximum over unit-norm Hamiltonians; this value uses the direction shown. Under `min` the value \
is 0 for every state, since H = 1 has unit norm and no Fisher information.";

#[derive(Debug, Clone, Serialize)]
pub struct StateMerit {
    pub value: Extended,
    pub direction: Direction,
    pub pair: HamiltonianPair,
    pub report: MeritReport,
    pub restarts: usize,
    pub steps: usize,
    pub note: &'static str,
}

/// Hermitian matrix from `d²` reals: diagonal, then real and imaginary
/// parts of the upper triangle.
fn hermitian_from(d: usize, p: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    let mut k = d;
    for i in 0..d {
        m[(i, i)] = c(p[i], 0.0);
        for j in i + 1..d {
            let z = c(p[k], p[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

fn normalized_op(d: usize, p: &[f64]) -> Option<HermitianOperator> {
    let op = HermitianOperator::new(hermitian_from(d, p)).ok()?;
    let n = op.operator_norm();
    if n <= 1e-12 {
        return None;
    }
    Some(op.scaled(1.0 / n))
}

/// Evaluates `M(ρ; H, G)` with the state-dependent parts cached.
struct MeritEvaluator<'a> {
    rho: &'a DensityMatrix,
    eig: crate::qmat::Eigen,
    sqrt: ComplexMatrix,
    grid: ThetaGrid,
}

impl<'a> MeritEvaluator<'a> {
    fn new(rho: &'a DensityMatrix, grid: ThetaGrid) -> Self {
        Self {
            rho,
            eig: rho.eigen(),
            sqrt: sqrt_psd(rho.matrix()),
            grid,
        }
    }

    fn pair_from(&self, p: &[f64]) -> Option<HamiltonianPair> {
        let (da, db) = (self.rho.dims()[0], self.rho.dims()[1]);
        let h = normalized_op(da, &p[..da * da])?;
        let g = normalized_op(db, &p[da * da..])?;
        Some(HamiltonianPair::new(h, g))
    }

    fn merit(&self, pair: &HamiltonianPair) -> Extended {
        let dims = self.rho.dims();
        let (Ok(ha), Ok(gb)) = (embed(pair.h_a.matrix(), dims, 0), embed(pair.g_b.matrix(), dims, 1)) else {
            return Extended::Finite(0.0);
        };
        let avg = 0.5 * (qfi_full(&self.eig, &ha) + qfi_full(&self.eig, &gb));
        if avg <= tolerances().qfi_cutoff {
            return Extended::Finite(0.0);
        }
        let scan = FidelityScan::new(&self.sqrt, pair);
        let (f, _) = self.grid.minimize(|t| scan.at(t)).unwrap_or((1.0, 0.0));
        merit_from(avg, f)
    }

    fn eval(&self, p: &[f64]) -> Extended {
        self.pair_from(p).map_or(Extended::Finite(0.0), |pair| self.merit(&pair))
    }
}

fn diagonal_params(d: usize, values: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; d * d];
    p[..d].copy_from_slice(values);
    p
}

/// All vectors in `{−1, 0, 1}^d`.
fn ternary(d: usize) -> Vec<Vec<f64>> {
    (0..3usize.pow(d as u32))
        .map(|mut n| {
            (0..d)
                .map(|_| {
                    let v = (n % 3) as f64 - 1.0;
                    n /= 3;
                    v
                })
                .collect()
        })
        .collect()
}

/// Best diagonal pair (computational basis) with entries in `{−1, 0, 1}`.
fn best_diagonal_start(ev: &MeritEvaluator, direction: Direction) -> Vec<f64> {
    let (da, db) = (ev.rho.dims()[0], ev.rho.dims()[1]);
    let mut best: Option<(Extended, Vec<f64>)> = None;
    for h in ternary(da) {
        for g in ternary(db) {
            let mut p = diagonal_params(da, &h);
            p.extend(diagonal_params(db, &g));
            if ev.pair_from(&p).is_none() {
                continue;
            }
            let v = ev.eval(&p);
            if best.as_ref().map_or(true, |(b, _)| direction.better(v, *b)) {
                best = Some((v, p));
            }
        }
    }
    best.map(|(_, p)| p).unwrap_or_else(|| {
        let mut p = diagonal_params(da, &vec![1.0; da]);
        p.extend(diagonal_params(db, &vec![1.0; db]));
        p
    })
}

fn descend(ev: &MeritEvaluator, start: Vec<f64>, cfg: &OptimizerConfig) -> (Extended, Vec<f64>) {
    let mut x = start;
    let mut best = ev.eval(&x);
    let mut step = cfg.initial_step;
    let mut stale = 0;
    for t in 0..cfg.steps {
        if best.is_infinite() && cfg.direction == Direction::Max {
            break;
        }
        let k = t % x.len();
        let mut improved = false;
        for sign in [1.0, -1.0] {
            let mut y = x.clone();
            y[k] += sign * step;
            let v = ev.eval(&y);
            if cfg.direction.better(v, best) {
                best = v;
                x = y;
                improved = true;
                break;
            }
        }
        if improved {
            stale = 0;
        } else {
            stale += 1;
            if stale >= x.len() {
                step *= 0.5;
                stale = 0;
            }
        }
    }
    (best, x)
}

/// `M(ρ)`: extremum of `M(ρ; H, G)` over pairs with unit operator norm, by
/// random-restart coordinate descent. Restart 0 starts from the best diagonal
/// pair with entries in {−1, 0, 1}; the others start at random.
pub fn state_merit(rho: &DensityMatrix, cfg: &OptimizerConfig) -> Result<StateMerit> {
    if rho.dims().len() != 2 {
        return Err(Error::InvalidInput("expected a bipartite state".into()));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }
    let ev = MeritEvaluator::new(rho, cfg.grid);
    let (da, db) = (rho.dims()[0], rho.dims()[1]);
    let n = da * da + db * db;
    let first = descend(&ev, best_diagonal_start(&ev, cfg.direction), cfg);
    // an unbounded maximum cannot be improved on
    let rest = if first.0.is_infinite() && cfg.direction == Direction::Max {
        Vec::new()
    } else {
        (1..cfg.restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(r as u64);
                let start = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                descend(&ev, start, cfg)
            })
            .collect()
    };
    let (value, x) = std::iter::once(first)
        .chain(rest)
        .reduce(|a, b| if cfg.direction.better(b.0, a.0) { b } else { a })
        .expect("at least one restart");
    let pair = ev
        .pair_from(&x)
        .unwrap_or_else(|| HamiltonianPair::new(
            HermitianOperator::diagonal(&vec![1.0; da]),
            HermitianOperator::diagonal(&vec![1.0; db]),
        ));
    let report = figure_of_merit(rho, &pair, &cfg.grid, 0.1)?;
    Ok(StateMerit {
        value,
        direction: cfg.direction,
        pair,
        report,
        restarts: cfg.restarts,
        steps: cfg.steps,
        note: DIRECTION_NOTE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiCopyBound {
    pub n: usize,
    /// `√(1 − (1 − T)^{2n})` with `T` the single-copy WA distance bound.
    pub wa_distance_bound: f64,
    pub wa_guess_bound: f64,
    /// Same with the SA purification distance bound.
    pub sa_distance_bound: f64,
    pub sa_guess_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub epsilon: f64,
    /// `min(1, 2ε)`.
    pub wa_distance_bound: f64,
    /// `min(1, 2√(ε − ε²))`.
    pub sa_distance_bound: f64,
    /// `½ + min(ε, ½)`.
    pub wa_guess_bound: f64,
    /// `½ + √(ε − ε²)`.
    pub sa_guess_bound: f64,
    pub multicopy: Vec<MultiCopyBound>,
}

/// `√(1 − (1 − T)^{2n})`.
pub fn multicopy_distance_bound(t: f64, n: usize) -> f64 {
    let base = (1.0 - t).clamp(0.0, 1.0);
    (1.0 - base.powi(2 * n as i32)).max(0.0).sqrt()
}

pub fn robustness_bounds(epsilon: f64, copies: &[usize]) -> Result<RobustnessReport> {
    check_range("epsilon", epsilon, 0.0, 1.0, "[0, 1]")?;
    if copies.contains(&0) {
        return Err(Error::InvalidInput("copy counts must be at least 1".into()));
    }
    let wa_t = (2.0 * epsilon).min(1.0);
    let root = (epsilon - epsilon * epsilon).max(0.0).sqrt();
    let sa_t = (2.0 * root).min(1.0);
    let multicopy = copies
        .iter()
        .map(|&n| {
            let wa = multicopy_distance_bound(wa_t, n);
            let sa = multicopy_distance_bound(sa_t, n);
            MultiCopyBound {
                n,
                wa_distance_bound: wa,
                wa_guess_bound: 0.5 * (1.0 + wa),
                sa_distance_bound: sa,
                sa_guess_bound: 0.5 * (1.0 + sa),
            }
        })
        .collect();
    Ok(RobustnessReport {
        epsilon,
        wa_distance_bound: wa_t,
        sa_distance_bound: sa_t,
        wa_guess_bound: 0.5 + epsilon.min(0.5),
        sa_guess_bound: 0.5 + root,
        multicopy,
    })
}
