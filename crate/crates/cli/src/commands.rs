use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use anonmet::asymmetry::mode_decompose;
use anonmet::classify::{classify, find_wa_pair, AnonymityStatus, HamiltonianPair, SearchConfig};
use anonmet::io::{load_state, matrix_rows, report_json, state_to_json, MatrixRows};
use anonmet::metrology::{figure_of_merit, robustness_bounds, state_merit, OptimizerConfig, ThetaGrid};
use anonmet::protocol::{delocalised_measurement, purification_attack_on_grid, run_protocol_with, ProtocolConfig};
use anonmet::qmat::{trace_distance, ComplexMatrix, DensityMatrix};
use anonmet::states::{StateSpec, CATALOG};
use anonmet::tolerance::{set_tolerances, tolerances};
use anonmet::{Error, Side};

use crate::spec::{parse_complex, parse_operator, parse_param, tolerances_from};
use crate::{Cli, Command, Global, PairArgs, StateArgs};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Invariant(_)) => 3,
            _ => 2,
        }
    }
}

/// Rendered command output.
pub struct Outcome {
    pub text: String,
    pub inconclusive: bool,
}

impl Outcome {
    fn done(text: String) -> Self {
        Self {
            text,
            inconclusive: false,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    set_tolerances(tolerances_from(&cli.global.tol)?);
    let g = &cli.global;
    match &cli.command {
        Command::Catalog => catalog(g),
        Command::Export { state, output } => export(state, output.as_ref()),
        Command::Classify { state } => cmd_classify(g, state),
        Command::Modes {
            state,
            h,
            side,
            show_matrices,
        } => modes(g, state, h, (*side).into(), *show_matrices),
        Command::Merit {
            state,
            pair,
            optimize,
            delta,
            direction,
            restarts,
            steps,
        } => {
            let loaded = Loaded::from_args(state)?;
            if *optimize {
                let cfg = OptimizerConfig {
                    restarts: *restarts,
                    steps: *steps,
                    seed: g.seed,
                    direction: (*direction).into(),
                    grid: g.grid_points.map(ThetaGrid::new).unwrap_or(OptimizerConfig::default().grid),
                    ..OptimizerConfig::default()
                };
                optimize_merit(g, &loaded, &cfg, *delta)
            } else {
                merit(g, &loaded, pair, *delta)
            }
        }
        Command::Simulate {
            state,
            pair,
            encoder,
            theta,
            copies,
        } => simulate(g, state, pair, (*encoder).into(), *theta, *copies),
        Command::Robustness { epsilon, state, copies } => robustness(g, *epsilon, state, copies),
        Command::Attack { state, pair, theta } => attack(g, state, pair, *theta),
        Command::Delocalise {
            state,
            pair,
            a,
            b,
            theta,
        } => delocalise(g, state, pair, a, b, *theta),
    }
}

struct Loaded {
    rho: DensityMatrix,
    spec: Option<StateSpec>,
    label: String,
}

impl Loaded {
    fn from_args(args: &StateArgs) -> Result<Self, CliError> {
        match (&args.file, &args.catalog) {
            (Some(path), _) => {
                let (rho, spec) = load_state(path)?;
                Ok(Self {
                    rho,
                    label: spec.as_ref().map(spec_label).unwrap_or_else(|| path.display().to_string()),
                    spec,
                })
            }
            (None, Some(name)) => {
                let mut spec = StateSpec::new(name);
                for p in &args.params {
                    let (k, v) = parse_param(p)?;
                    spec = spec.with(&k, v);
                }
                let rho = spec.build()?;
                Ok(Self {
                    rho,
                    label: spec_label(&spec),
                    spec: Some(spec),
                })
            }
            (None, None) => Err(CliError::input("no state given: pass a state file or --catalog NAME")),
        }
    }

    fn dims(&self) -> &[usize] {
        self.rho.dims()
    }
}

fn spec_label(spec: &StateSpec) -> String {
    if spec.parameters.is_empty() {
        return spec.name.clone();
    }
    let params: Vec<String> = spec.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{}({})", spec.name, params.join(", "))
}

fn search_config(g: &Global) -> SearchConfig {
    SearchConfig {
        bound: g.search_bound,
        random_bases: g.random_bases,
        seed: g.seed,
    }
}

/// Explicit pair, or the first weak-anonymity witness.
fn resolve_pair(g: &Global, loaded: &Loaded, args: &PairArgs) -> Result<(HamiltonianPair, &'static str), CliError> {
    if let (Some(h), Some(gb)) = (&args.h_a, &args.g_b) {
        let dims = loaded.dims();
        if dims.len() != 2 {
            return Err(CliError::input(format!("expected a bipartite state, got dims {dims:?}")));
        }
        let pair = HamiltonianPair::new(parse_operator(h, dims[0])?, parse_operator(gb, dims[1])?);
        return Ok((pair, "given"));
    }
    let search = find_wa_pair(&loaded.rho, &search_config(g))?;
    match search.pair {
        Some(pair) => Ok((pair, "witness search")),
        None => Err(CliError::input(format!(
            "no weak-anonymity witness found for {} (spectrum bound {}); pass --h-a and --g-b",
            loaded.label, search.spectrum_bound
        ))),
    }
}

fn table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<width$}  {v}");
    }
    out.pop();
    out
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

fn tri(b: Option<bool>) -> String {
    b.map(yes_no).unwrap_or_else(|| "inconclusive".to_string())
}

fn spectrum(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn pair_rows(pair: &HamiltonianPair, source: &str) -> Vec<(&'static str, String)> {
    vec![
        ("H_A spectrum", spectrum(&pair.h_a.eigen().values)),
        ("G_B spectrum", spectrum(&pair.g_b.eigen().values)),
        ("pair source", source.to_string()),
    ]
}

fn render_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| {
                let z = m[(i, j)];
                format!("{:>8.4}{:+.4}i", z.re, z.im)
            })
            .collect();
        let _ = writeln!(out, "    {}", row.join("  "));
    }
    out.pop();
    out
}

#[derive(Serialize)]
struct CatalogEntry {
    name: &'static str,
    parameters: std::collections::BTreeMap<&'static str, f64>,
    dims: Vec<usize>,
    description: &'static str,
}

fn catalog(g: &Global) -> Result<Outcome, CliError> {
    let entries = CATALOG
        .iter()
        .map(|(name, params, description)| {
            let rho = StateSpec::new(name).build()?;
            Ok(CatalogEntry {
                name,
                parameters: params.iter().copied().collect(),
                dims: rho.dims().to_vec(),
                description,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    if g.json {
        #[derive(Serialize)]
        struct Body {
            states: Vec<CatalogEntry>,
        }
        return Ok(Outcome::done(report_json("catalog", &Body { states: entries })));
    }
    let mut out = String::new();
    for e in &entries {
        let params: Vec<String> = e.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(
            out,
            "{:<22} {:<8} {:<28} {}",
            e.name,
            format!("{:?}", e.dims),
            params.join(" "),
            e.description
        );
    }
    out.pop();
    Ok(Outcome::done(out))
}

fn export(state: &StateArgs, output: Option<&PathBuf>) -> Result<Outcome, CliError> {
    let loaded = Loaded::from_args(state)?;
    let text = state_to_json(&loaded.rho, loaded.spec.as_ref());
    match output {
        Some(path) => {
            std::fs::write(path, text + "\n")
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))?;
            Ok(Outcome::done(format!("wrote {} to {}", loaded.label, path.display())))
        }
        None => Ok(Outcome::done(text)),
    }
}

fn status_text(status: &AnonymityStatus) -> String {
    match status {
        AnonymityStatus::Witnessed { check, .. } => {
            format!("yes (witness residual {:.2e})", check.residual)
        }
        AnonymityStatus::Excluded { detail, .. } => format!("no ({detail})"),
        AnonymityStatus::SearchExhausted { spectrum_bound } => {
            format!("no witness with integer spectra in [0, {spectrum_bound}]")
        }
        AnonymityStatus::Inconclusive { reason } => format!("inconclusive ({reason})"),
    }
}

fn cmd_classify(g: &Global, state: &StateArgs) -> Result<Outcome, CliError> {
    let loaded = Loaded::from_args(state)?;
    let mut report = classify(&loaded.rho, &search_config(g))?;
    if let Some(spec) = &loaded.spec {
        if spec.name == "werner" {
            let a = spec.resolved_parameters()?.get("a").copied().unwrap_or(0.5);
            if a > 0.5 {
                report
                    .notes
                    .push("a > 1/2: steerable regime, entangled but not strongly anonymous".into());
            }
        }
    }
    let inconclusive = report.inconclusive();
    if g.json {
        #[derive(Serialize)]
        struct Body<'a> {
            state: &'a str,
            #[serde(flatten)]
            report: &'a anonmet::classify::ClassificationReport,
        }
        let body = Body {
            state: &loaded.label,
            report: &report,
        };
        return Ok(Outcome {
            text: report_json("classification", &body),
            inconclusive,
        });
    }
    let c = &report.classical;
    let mut rows = vec![
        ("state", loaded.label.clone()),
        ("dims", format!("{:?}", report.dims)),
        ("aligned discord (WA)", status_text(&report.wa)),
        ("aligned entanglement (SA)", status_text(&report.sa)),
        ("discordant", tri(report.discordant)),
        ("entangled", tri(report.entangled)),
        (
            "PPT",
            format!(
                "min PT eigenvalue {:.3e}{}",
                report.ppt.min_pt_eigenvalue,
                if report.ppt.npt { " (NPT)" } else { "" }
            ),
        ),
        (
            "classical forms",
            format!(
                "CC {} / CQ {} / QC {}{}",
                yes_no(c.cc),
                yes_no(c.cq),
                yes_no(c.qc),
                if c.conclusive { "" } else { " (inconclusive)" }
            ),
        ),
    ];
    for (tag, status) in [("WA", &report.wa), ("SA", &report.sa)] {
        if let Some(pair) = status.pair() {
            let label = if tag == "WA" { "WA witness" } else { "SA witness" };
            rows.push((
                label,
                format!(
                    "H_A {} G_B {}",
                    spectrum(&pair.h_a.eigen().values),
                    spectrum(&pair.g_b.eigen().values)
                ),
            ));
        }
    }
    for note in &report.notes {
        rows.push(("note", note.clone()));
    }
    Ok(Outcome {
        text: table(&rows),
        inconclusive,
    })
}

fn modes(g: &Global, state: &StateArgs, h: &str, side: Side, show: bool) -> Result<Outcome, CliError> {
    let loaded = Loaded::from_args(state)?;
    let dims = loaded.dims();
    if dims.len() != 2 {
        return Err(CliError::input(format!("expected a bipartite state, got dims {dims:?}")));
    }
    let op = parse_operator(h, dims[side.index()])?;
    let dec = mode_decompose(&loaded.rho, &op, side)?;
    let completeness = dec.completeness_residual(&loaded.rho);
    let holds = tolerances().holds;
    let present: Vec<&(f64, ComplexMatrix)> = dec.modes.iter().filter(|(_, m)| m.norm() > holds).collect();
    if g.json {
        #[derive(Serialize)]
        struct Mode {
            omega: f64,
            norm: f64,
            #[serde(skip_serializing_if = "Option::is_none")]
            matrix: Option<MatrixRows>,
        }
        #[derive(Serialize)]
        struct Body<'a> {
            state: &'a str,
            side: Side,
            generator_spectrum: &'a [f64],
            completeness_residual: f64,
            modes: Vec<Mode>,
        }
        let body = Body {
            state: &loaded.label,
            side,
            generator_spectrum: &dec.generator_spectrum,
            completeness_residual: completeness,
            modes: present
                .iter()
                .map(|(w, m)| Mode {
                    omega: *w,
                    norm: m.norm(),
                    matrix: show.then(|| matrix_rows(m)),
                })
                .collect(),
        };
        return Ok(Outcome::done(report_json("modes", &body)));
    }
    let mut out = String::new();
    let _ = writeln!(out, "state {}  side {:?}  generator spectrum {}", loaded.label, side, spectrum(&dec.generator_spectrum));
    let _ = writeln!(out, "{:>10}  {:>12}  {:>14}", "omega", "norm", "completeness");
    for (w, m) in &present {
        let _ = writeln!(out, "{:>10.4}  {:>12.6}  {:>14.2e}", w, m.norm(), completeness);
        if show {
            let _ = writeln!(out, "{}", render_matrix(m));
        }
    }
    out.pop();
    Ok(Outcome::done(out))
}

fn merit(g: &Global, loaded: &Loaded, pair_args: &PairArgs, delta: f64) -> Result<Outcome, CliError> {
    let (pair, source) = resolve_pair(g, loaded, pair_args)?;
    let grid = g.grid_points.map(ThetaGrid::new).unwrap_or_default();
    let report = figure_of_merit(&loaded.rho, &pair, &grid, delta)?;
    if g.json {
        #[derive(Serialize)]
        struct Body<'a> {
            state: &'a str,
            pair: &'a HamiltonianPair,
            #[serde(flatten)]
            report: &'a anonmet::metrology::MeritReport,
        }
        let body = Body {
            state: &loaded.label,
            pair: &pair,
            report: &report,
        };
        return Ok(Outcome::done(report_json("merit", &body)));
    }
    let mut rows = vec![("state", loaded.label.clone())];
    rows.extend(pair_rows(&pair, source));
    rows.extend([
        ("QFI A", format!("{:.6}", report.qfi_a)),
        ("QFI B", format!("{:.6}", report.qfi_b)),
        ("average QFI", format!("{:.6}", report.avg_qfi)),
        ("min fidelity", format!("{:.9}", report.min_fidelity)),
        ("argmin theta", format!("{:.6}", report.argmin_theta)),
        ("delta", format!("{}", report.delta)),
        ("n_delta", report.n_delta.to_string()),
        ("merit", report.merit.to_string()),
        ("grid points", report.grid_points.to_string()),
    ]);
    Ok(Outcome::done(table(&rows)))
}

fn optimize_merit(g: &Global, loaded: &Loaded, cfg: &OptimizerConfig, delta: f64) -> Result<Outcome, CliError> {
    let result = state_merit(&loaded.rho, cfg)?;
    let report = figure_of_merit(&loaded.rho, &result.pair, &cfg.grid, delta)?;
    if g.json {
        #[derive(Serialize)]
        struct Body<'a> {
            state: &'a str,
            delta: f64,
            n_delta: anonmet::metrology::Extended,
            #[serde(flatten)]
            result: &'a anonmet::metrology::StateMerit,
        }
        let body = Body {
            state: &loaded.label,
            delta,
            n_delta: report.n_delta,
            result: &result,
        };
        return Ok(Outcome::done(report_json("state_merit", &body)));
    }
    let mut rows = vec![
        ("state", loaded.label.clone()),
        ("direction", format!("{:?}", result.direction).to_lowercase()),
        ("M", result.value.to_string()),
    ];
    rows.extend(pair_rows(&result.pair, "optimizer"));
    rows.extend([
        ("average QFI", format!("{:.6}", result.report.avg_qfi)),
        ("min fidelity", format!("{:.9}", result.report.min_fidelity)),
        ("n_delta", format!("{} (delta = {delta})", report.n_delta)),
        ("restarts x steps", format!("{} x {}", result.restarts, result.steps)),
        ("note", result.note.to_string()),
    ]);
    Ok(Outcome::done(table(&rows)))
}

fn simulate(
    g: &Global,
    state: &StateArgs,
    pair_args: &PairArgs,
    encoder: Side,
    theta: f64,
    copies: usize,
) -> Result<Outcome, CliError> {
    let loaded = Loaded::from_args(state)?;
    let (pair, source) = resolve_pair(g, &loaded, pair_args)?;
    let mut cfg = ProtocolConfig::new(encoder, theta, copies, g.seed);
    if let Some(n) = g.grid_points {
        cfg.grid_points = n;
    }
    let t = run_protocol_with(&loaded.rho, &pair, &cfg)?;
    if g.json {
        #[derive(Serialize)]
        struct Body<'a> {
            state: &'a str,
            pair: &'a HamiltonianPair,
            #[serde(flatten)]
            transcript: &'a anonmet::protocol::ProtocolTranscript,
        }
        let body = Body {
            state: &loaded.label,
            pair: &pair,
            transcript: &t,
        };
        return Ok(Outcome::done(report_json("protocol_transcript", &body)));
    }
    let mut rows = vec![("state", loaded.label.clone())];
    rows.extend(pair_rows(&pair, source));
    rows.extend([
        ("encoder", format!("{:?}", t.encoder)),
        ("theta (true)", format!("{:.6}", t.theta_true)),
        ("copies", t.n_copies.to_string()),
        ("seed", t.seed.to_string()),
        ("theta estimate", format!("{:.6} +/- {}", t.theta_estimate, t.estimate_stderr)),
        ("likelihood flat", yes_no(t.likelihood_flat)),
        ("log-likelihood ratio A:B", format!("{:.6}", t.log_likelihood_ratio)),
        (
            "Charlie's guess",
            format!(
                "{:?}{} ({})",
                t.charlie_guess,
                if t.guess_was_tie { " by coin flip" } else { "" },
                if t.charlie_correct { "correct" } else { "wrong" }
            ),
        ),
        (
            "Helstrom optimum",
            format!(
                "{:.6} ({})",
                t.helstrom_optimal_prob,
                if t.charlie_guess_prob_exact { "exact" } else { "bound" }
            ),
        ),
    ]);
    Ok(Outcome::done(table(&rows)))
}

/// Trace distance to the closest catalog state (default parameters, same
/// dims) that has a weak-anonymity witness.
fn nearest_anonymous(g: &Global, loaded: &Loaded) -> Result<(String, f64), CliError> {
    let cfg = search_config(g);
    let mut best: Option<(String, f64)> = None;
    for (name, _, _) in CATALOG {
        let candidate = StateSpec::new(name).build()?;
        if candidate.dims() != loaded.dims() {
            continue;
        }
        if !find_wa_pair(&candidate, &cfg)?.found() {
            continue;
        }
        let d = trace_distance(&loaded.rho, &candidate)?;
        if best.as_ref().map_or(true, |(_, b)| d < *b) {
            best = Some((name.to_string(), d));
        }
    }
    best.ok_or_else(|| {
        CliError::input(format!(
            "no anonymous catalog state with dims {:?}; pass --epsilon",
            loaded.dims()
        ))
    })
}

fn robustness(g: &Global, epsilon: Option<f64>, state: &StateArgs, copies: &[usize]) -> Result<Outcome, CliError> {
    let has_state = state.file.is_some() || state.catalog.is_some();
    let (eps, reference) = match (epsilon, has_state) {
        (Some(e), false) => (e, None),
        (None, true) => {
            let loaded = Loaded::from_args(state)?;
            let (name, d) = nearest_anonymous(g, &loaded)?;
            (d.min(1.0), Some((loaded.label, name)))
        }
        (Some(_), true) => return Err(CliError::input("pass either --epsilon or a state, not both")),
        (None, false) => return Err(CliError::input("pass --epsilon or a state")),
    };
    let report = robustness_bounds(eps, copies)?;
    if g.json {
        #[derive(Serialize)]
        struct Body<'a> {
            #[serde(skip_serializing_if = "Option::is_none")]
            state: Option<&'a str>,
            #[serde(skip_serializing_if = "Option::is_none")]
            nearest_anonymous: Option<&'a str>,
            #[serde(flatten)]
            report: &'a anonmet::metrology::RobustnessReport,
        }
        let body = Body {
            state: reference.as_ref().map(|r| r.0.as_str()),
            nearest_anonymous: reference.as_ref().map(|r| r.1.as_str()),
            report: &report,
        };
        return Ok(Outcome::done(report_json("robustness", &body)));
    }
    let mut rows = Vec::new();
    if let Some((label, name)) = &reference {
        rows.push(("state", label.clone()));
        rows.push(("nearest anonymous", name.clone()));
    }
    rows.extend([
        ("epsilon", format!("{}", report.epsilon)),
        ("WA distance bound", format!("{:.6}", report.wa_distance_bound)),
        ("SA distance bound", format!("{:.6}", report.sa_distance_bound)),
        ("WA guess bound", format!("{:.6}", report.wa_guess_bound)),
        ("SA guess bound", format!("{:.6}", report.sa_guess_bound)),
    ]);
    let mut out = table(&rows);
    let _ = write!(out, "\n{:>6}  {:>14}  {:>14}", "copies", "WA guess bound", "SA guess bound");
    for m in &report.multicopy {
        let _ = write!(out, "\n{:>6}  {:>14.6}  {:>14.6}", m.n, m.wa_guess_bound, m.sa_guess_bound);
    }
    Ok(Outcome::done(out))
}

fn attack(g: &Global, state: &StateArgs, pair_args: &PairArgs, theta: f64) -> Result<Outcome, CliError> {
    let loaded = Loaded::from_args(state)?;
    let (pair, source) = resolve_pair(g, &loaded, pair_args)?;
    let report = purification_attack_on_grid(&loaded.rho, &pair, theta, g.grid_points.unwrap_or(256))?;
    if g.json {
        #[derive(Serialize)]
        struct Body<'a> {
            state: &'a str,
            pair: &'a HamiltonianPair,
            #[serde(flatten)]
            report: &'a anonmet::protocol::AttackReport,
        }
        let body = Body {
            state: &loaded.label,
            pair: &pair,
            report: &report,
        };
        return Ok(Outcome::done(report_json("attack", &body)));
    }
    let mut rows = vec![("state", loaded.label.clone())];
    rows.extend(pair_rows(&pair, source));
    rows.extend([
        ("theta", format!("{:.6}", report.theta)),
        ("leak (trace distance)", format!("{:.6e}", report.leak)),
        ("max leak over theta", format!("{:.6e} at theta {:.6}", report.max_leak, report.argmax_theta)),
        ("safe against purification", yes_no(report.sa_safe)),
        ("pair encodes theta", yes_no(report.applicable)),
        ("purifying dimension", report.purification_dim.to_string()),
    ]);
    Ok(Outcome::done(table(&rows)))
}

fn delocalise(
    g: &Global,
    state: &StateArgs,
    pair_args: &PairArgs,
    a: &str,
    b: &str,
    theta: f64,
) -> Result<Outcome, CliError> {
    let loaded = Loaded::from_args(state)?;
    let (pair, source) = resolve_pair(g, &loaded, pair_args)?;
    let report = delocalised_measurement(&loaded.rho, &pair, parse_complex(a)?, parse_complex(b)?, theta)?;
    if g.json {
        #[derive(Serialize)]
        struct Body<'a> {
            state: &'a str,
            pair: &'a HamiltonianPair,
            #[serde(flatten)]
            report: &'a anonmet::protocol::DelocalisedReport,
        }
        let body = Body {
            state: &loaded.label,
            pair: &pair,
            report: &report,
        };
        return Ok(Outcome::done(report_json("delocalised", &body)));
    }
    let mut rows = vec![("state", loaded.label.clone())];
    rows.extend(pair_rows(&pair, source));
    rows.extend([
        ("theta", format!("{:.6}", report.theta)),
        ("path coherence in", format!("{:.9}", report.path_coherence_in)),
        ("path coherence out", format!("{:.9}", report.path_coherence_out)),
        ("path factorizes", yes_no(report.factorized)),
    ]);
    Ok(Outcome::done(table(&rows)))
}
