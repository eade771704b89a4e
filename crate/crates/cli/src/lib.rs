//! Query driver behind the `decisive` binary: argument handling, query
//! dispatch against the three model frontends, and report rendering.
//!
//! Exit codes: 0 for a decided or computed result, 2 when the outcome is
//! `Unknown` or the expansion budget ran out (the bounds are still valid),
//! 1 for errors.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use decisive_core::algorithms::{approx_reach, approx_repeat_reach, AlgorithmError};
use decisive_core::chain::{
    validate_chain_contract, CertificateKind, DecisivenessCertificate, EffectiveChain,
    QueryResult, TriBool,
};
use decisive_core::oracle::{exact_reach_prob, exact_repeat_reach_prob, monte_carlo, truncate};
use decisive_core::parse::{parse_model, parse_target, Model, ParseOptions, Target};
use decisive_core::plcs::{self, PlcsState, PlcsTarget};
use decisive_core::pntm;
use decisive_core::pvass::{self, PvassTarget, SearchLimits};
use decisive_core::rational::{decimal_string, parse_rational, Rational};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "decisive",
    about = "Qualitative and approximate quantitative analysis of infinite-state Markov chains",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and validate a model, then spot-check the chain contract on a
    /// sample of reachable states.
    Validate(CommonArgs),
    /// Decide whether the target is reached with probability one (or zero).
    QualReach(QualArgs),
    /// Decide whether the target is visited infinitely often with
    /// probability one (or zero).
    QualRepeat(QualArgs),
    /// Compute theta with theta <= P(eventually target) <= theta + eps.
    ApproxReach(ApproxArgs),
    /// Compute theta with theta <= P(infinitely often target) <= theta + eps.
    ApproxRepeat(ApproxArgs),
    /// Emit a decisiveness certificate for the model and target.
    Certify(CommonArgs),
    /// Exact reachability bounds on a finite truncation of the chain.
    Oracle(OracleArgs),
    /// Monte Carlo estimate of bounded reachability.
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Model file.
    pub model: PathBuf,
    /// Target set, e.g. "q s1 s2", "up s1 x>=2" or "up q1 c>=\"ab\"".
    /// Overrides any target declared in the model file.
    #[arg(long)]
    pub target: Option<String>,
    /// Repair deadlocked control states with neutral self-loops.
    #[arg(long)]
    pub auto_selfloop: bool,
    /// Repair missing (state, read) rows of a noisy machine.
    #[arg(long)]
    pub auto_total: bool,
    /// Emit the machine-readable JSON report instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone)]
pub struct QualArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Which probability to decide.
    #[arg(long)]
    pub side: Side,
}

#[derive(Args, Debug, Clone)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Precision, a positive fraction such as 1/100.
    #[arg(long)]
    pub eps: String,
    /// Maximum number of state expansions before giving up with valid
    /// partial bounds.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: usize,
}

#[derive(Args, Debug, Clone)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Truncation bound: maximum counter value, channel length, or machine
    /// time, depending on the model kind.
    #[arg(long, default_value_t = 25)]
    pub bound: u64,
    /// Maximum number of enumerated states.
    #[arg(long, default_value_t = 100_000)]
    pub state_limit: usize,
}

#[derive(Args, Debug, Clone)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of independent runs.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Maximum run length.
    #[arg(long, default_value_t = 1_000)]
    pub horizon: usize,
    /// Generator seed; runs are reproducible given (seed, trials, horizon).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    One,
    Zero,
}

// ---------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------

#[derive(Serialize, Debug, Default)]
pub struct Report {
    pub query: QueryEcho,
    pub result: ResultBlock,
    /// Wall-clock data, isolated so the rest of the report is
    /// byte-deterministic for identical queries.
    pub timing: Timing,
}

#[derive(Serialize, Debug, Default)]
pub struct QueryEcho {
    pub kind: String,
    pub model: String,
    pub model_kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Serialize, Debug, Default)]
pub struct ResultBlock {
    /// decided | computed | unknown | budget-exhausted | valid | invalid
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_decimal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub yes: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expansions: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reach_lower: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reach_upper: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeat_lower: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeat_upper: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wilson_low: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wilson_high: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hits: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states_checked: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub violations: Vec<String>,
}

#[derive(Serialize, Debug)]
pub struct CertBlock {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub target: String,
}

#[derive(Serialize, Debug, Default)]
pub struct Timing {
    pub wall_ms: u128,
}

fn frac(r: &Rational) -> String {
    r.to_string()
}

fn cert_block(cert: &DecisivenessCertificate) -> CertBlock {
    match &cert.kind {
        CertificateKind::GloballyCoarse { beta, span, alpha } => CertBlock {
            kind: "globally-coarse".into(),
            beta: Some(frac(beta)),
            span: Some(*span),
            alpha: Some(frac(alpha)),
            note: None,
            target: cert.target.clone(),
        },
        CertificateKind::FiniteAttractor { note } => CertBlock {
            kind: "finite-attractor".into(),
            beta: None,
            span: None,
            alpha: None,
            note: Some(note.clone()),
            target: cert.target.clone(),
        },
        CertificateKind::Unverified => CertBlock {
            kind: "unverified".into(),
            beta: None,
            span: None,
            alpha: None,
            note: None,
            target: cert.target.clone(),
        },
    }
}

// ---------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------

struct Loaded {
    model: Model,
    target: Option<Target>,
}

fn load(common: &CommonArgs) -> Result<Loaded> {
    let text = std::fs::read_to_string(&common.model)
        .with_context(|| format!("reading {}", common.model.display()))?;
    let parsed = parse_model(
        &text,
        ParseOptions {
            auto_selfloop: common.auto_selfloop,
            auto_total: common.auto_total,
        },
    )
    .map_err(|e| anyhow!("{e}"))?;
    let target = match &common.target {
        Some(spec) => Some(parse_target(spec, &parsed.model).map_err(|e| anyhow!("{e}"))?),
        None => parsed.target,
    };
    Ok(Loaded {
        model: parsed.model,
        target,
    })
}

fn require_target(loaded: &Loaded) -> Result<Target> {
    loaded
        .target
        .clone()
        .ok_or_else(|| anyhow!("no target: pass --target or add a target line to the model file"))
}

fn echo(kind: &str, common: &CommonArgs, model: &Model) -> QueryEcho {
    QueryEcho {
        kind: kind.into(),
        model: common.model.display().to_string(),
        model_kind: model.kind().into(),
        target: common.target.clone(),
        ..Default::default()
    }
}

/// Runs a command and returns the report plus the process exit code.
pub fn run(command: &Command) -> Result<(Report, i32)> {
    let start = Instant::now();
    let (query, mut result) = match command {
        Command::Validate(common) => run_validate(common)?,
        Command::QualReach(args) => run_qual(args, false)?,
        Command::QualRepeat(args) => run_qual(args, true)?,
        Command::ApproxReach(args) => run_approx(args, false)?,
        Command::ApproxRepeat(args) => run_approx(args, true)?,
        Command::Certify(common) => run_certify(common)?,
        Command::Oracle(args) => run_oracle(args)?,
        Command::Simulate(args) => run_simulate(args)?,
    };
    let code = match result.status.as_str() {
        "decided" | "computed" | "valid" => EXIT_OK,
        "unknown" | "budget-exhausted" => EXIT_UNDECIDED,
        _ => EXIT_ERROR,
    };
    if result.status == "invalid" {
        result.reason.get_or_insert_with(|| "contract violations found".into());
    }
    Ok((
        Report {
            query,
            result,
            timing: Timing {
                wall_ms: start.elapsed().as_millis(),
            },
        },
        code,
    ))
}

fn run_validate(common: &CommonArgs) -> Result<(QueryEcho, ResultBlock)> {
    let loaded = load(common)?;
    let query = echo("validate", common, &loaded.model);
    // Contract spot-check on a breadth-first sample of reachable states.
    const SAMPLE: usize = 40;
    let report = match (&loaded.model, &loaded.target) {
        (Model::Pvass(m), t) => {
            let target = match t {
                Some(Target::Pvass(t)) => t.clone(),
                _ => PvassTarget::QStates((0..m.control_names.len()).collect()),
            };
            let chain = m.chain(&target).map_err(|e| anyhow!("{e}"))?;
            let samples = sample_states(&chain, SAMPLE);
            validate_chain_contract(&chain, &samples)
        }
        (Model::Plcs(m), t) => {
            let target = match t {
                Some(Target::Plcs(t)) => t.clone(),
                _ => PlcsTarget::QStates((0..m.control_names.len()).collect()),
            };
            let chain = m.chain(&target).map_err(|e| anyhow!("{e}"))?;
            let samples = sample_states(&chain, SAMPLE);
            validate_chain_contract(&chain, &samples)
        }
        (Model::Pntm(m), t) => {
            let controls = match t {
                Some(Target::Pntm(q)) => q.clone(),
                _ => (0..m.control_names.len()).collect(),
            };
            let chain = m.chain(&controls);
            let samples = sample_states(&chain, SAMPLE);
            validate_chain_contract(&chain, &samples)
        }
    };
    let result = ResultBlock {
        status: if report.is_clean() { "valid" } else { "invalid" }.into(),
        states_checked: Some(report.states_checked),
        violations: report.violations.iter().map(|v| v.to_string()).collect(),
        ..Default::default()
    };
    Ok((query, result))
}

fn sample_states<C: EffectiveChain>(chain: &C, limit: usize) -> Vec<C::State> {
    let mut seen = std::collections::BTreeSet::new();
    let mut queue = std::collections::VecDeque::from([chain.initial()]);
    let mut out = Vec::new();
    while let Some(s) = queue.pop_front() {
        if out.len() >= limit {
            break;
        }
        if !seen.insert(s.clone()) {
            continue;
        }
        for (succ, _) in chain.successors(&s).iter() {
            queue.push_back(succ.clone());
        }
        out.push(s);
    }
    out
}

fn run_qual(args: &QualArgs, repeat: bool) -> Result<(QueryEcho, ResultBlock)> {
    let loaded = load(&args.common)?;
    let target = require_target(&loaded)?;
    let mut query = echo(
        if repeat { "qual-repeat" } else { "qual-reach" },
        &args.common,
        &loaded.model,
    );
    query.side = Some(format!("{:?}", args.side).to_lowercase());

    let verdict = match (&loaded.model, &target) {
        (Model::Pvass(m), Target::Pvass(t)) => {
            let q = match (repeat, args.side) {
                (false, Side::One) => pvass::QualQuery::ReachOne,
                (false, Side::Zero) => pvass::QualQuery::ReachZero,
                (true, Side::One) => pvass::QualQuery::RepeatOne,
                (true, Side::Zero) => pvass::QualQuery::RepeatZero,
            };
            m.qual_decide(&m.initial.clone(), t, q, &SearchLimits::default())
                .map_err(|e| anyhow!("{e}"))?
        }
        (Model::Plcs(m), Target::Plcs(t)) => {
            let q = match (repeat, args.side) {
                (false, Side::One) => plcs::QualQuery::ReachOne,
                (false, Side::Zero) => plcs::QualQuery::ReachZero,
                (true, Side::One) => plcs::QualQuery::RepeatOne,
                (true, Side::Zero) => plcs::QualQuery::RepeatZero,
            };
            m.qual_decide(&m.initial.clone(), t, q).map_err(|e| anyhow!("{e}"))?
        }
        (Model::Pntm(m), Target::Pntm(q_set)) => {
            let q = match (repeat, args.side) {
                (false, Side::One) => pntm::QualQuery::ReachOne,
                (false, Side::Zero) => pntm::QualQuery::ReachZero,
                (true, Side::One) => pntm::QualQuery::RepeatOne,
                (true, Side::Zero) => pntm::QualQuery::RepeatZero,
            };
            m.qual_decide(&m.initial.clone(), q_set, q)
        }
        _ => bail!("target kind does not match the model kind"),
    };

    let result = match verdict {
        TriBool::Holds => ResultBlock {
            status: "decided".into(),
            verdict: Some("holds".into()),
            ..Default::default()
        },
        TriBool::Fails => ResultBlock {
            status: "decided".into(),
            verdict: Some("fails".into()),
            ..Default::default()
        },
        TriBool::Unknown(reason) => ResultBlock {
            status: "unknown".into(),
            verdict: Some("unknown".into()),
            reason: Some(reason),
            ..Default::default()
        },
    };
    Ok((query, result))
}

fn approx_result(outcome: QueryResult) -> ResultBlock {
    match outcome {
        QueryResult::Approx {
            theta,
            eps,
            depth,
            yes,
            no,
            expansions,
        } => ResultBlock {
            status: "computed".into(),
            theta: Some(frac(&theta)),
            theta_decimal: Some(decimal_string(&theta, 6)),
            eps: Some(frac(&eps)),
            yes: Some(frac(&yes)),
            no: Some(frac(&no)),
            depth: Some(depth),
            expansions: Some(expansions),
            ..Default::default()
        },
        QueryResult::BudgetExhausted {
            yes,
            no,
            expansions,
        } => ResultBlock {
            status: "budget-exhausted".into(),
            reason: Some(
                "expansion budget ran out; yes is a valid lower bound and 1 - no a valid upper bound"
                    .into(),
            ),
            yes: Some(frac(&yes)),
            no: Some(frac(&no)),
            expansions: Some(expansions),
            ..Default::default()
        },
        QueryResult::Qualitative { .. } => unreachable!("approximation returns numeric results"),
    }
}

fn run_approx(args: &ApproxArgs, repeat: bool) -> Result<(QueryEcho, ResultBlock)> {
    let loaded = load(&args.common)?;
    let target = require_target(&loaded)?;
    let eps = parse_rational(&args.eps).map_err(|e| anyhow!("{e}"))?;
    let mut query = echo(
        if repeat { "approx-repeat" } else { "approx-reach" },
        &args.common,
        &loaded.model,
    );
    query.eps = Some(frac(&eps));
    query.budget = Some(args.budget);

    let go = |res: std::result::Result<QueryResult, AlgorithmError>| -> Result<ResultBlock> {
        Ok(approx_result(res.map_err(|e| anyhow!("{e}"))?))
    };
    let result = match (&loaded.model, &target) {
        (Model::Pvass(m), Target::Pvass(t)) => {
            let chain = m.chain(t).map_err(|e| anyhow!("{e}"))?;
            if repeat {
                go(approx_repeat_reach(&chain, &eps, args.budget))?
            } else {
                go(approx_reach(&chain, &eps, args.budget))?
            }
        }
        (Model::Plcs(m), Target::Plcs(t)) => {
            let chain = m.chain(t).map_err(|e| anyhow!("{e}"))?;
            if repeat {
                go(approx_repeat_reach(&chain, &eps, args.budget))?
            } else {
                go(approx_reach(&chain, &eps, args.budget))?
            }
        }
        (Model::Pntm(m), Target::Pntm(q)) => {
            let chain = m.chain(q);
            if repeat {
                go(approx_repeat_reach(&chain, &eps, args.budget))?
            } else {
                go(approx_reach(&chain, &eps, args.budget))?
            }
        }
        _ => bail!("target kind does not match the model kind"),
    };
    Ok((query, result))
}

fn run_certify(common: &CommonArgs) -> Result<(QueryEcho, ResultBlock)> {
    let loaded = load(common)?;
    let query = echo("certify", common, &loaded.model);
    let cert = match (&loaded.model, &loaded.target) {
        (Model::Pvass(m), Some(Target::Pvass(t))) => m
            .decisiveness_certificate(&t.upward())
            .map_err(|e| anyhow!("{e}"))?,
        (Model::Pvass(_), _) => bail!("certify on a counter system needs a target"),
        (Model::Plcs(m), Some(Target::Plcs(t))) => m.decisiveness_certificate(t),
        (Model::Plcs(m), _) => m.decisiveness_certificate(&PlcsTarget::QStates(
            (0..m.control_names.len()).collect(),
        )),
        (Model::Pntm(m), _) => m.certificate(),
    };
    let result = ResultBlock {
        status: "computed".into(),
        certificate: Some(cert_block(&cert)),
        ..Default::default()
    };
    Ok((query, result))
}

fn run_oracle(args: &OracleArgs) -> Result<(QueryEcho, ResultBlock)> {
    let loaded = load(&args.common)?;
    let target = require_target(&loaded)?;
    let mut query = echo("oracle", &args.common, &loaded.model);
    query.bound = Some(args.bound);

    fn solve<C: EffectiveChain>(
        chain: &C,
        in_bounds: impl Fn(&C::State) -> bool,
        state_limit: usize,
    ) -> Result<ResultBlock> {
        let t = truncate(chain, in_bounds, state_limit).map_err(|e| anyhow!("{e}"))?;
        let (rl, ru) = exact_reach_prob(&t.chain, t.chain.target_flags()).map_err(|e| anyhow!("{e}"))?;
        let (pl, pu) =
            exact_repeat_reach_prob(&t.chain, t.chain.target_flags()).map_err(|e| anyhow!("{e}"))?;
        Ok(ResultBlock {
            status: "computed".into(),
            reach_lower: Some(frac(&rl)),
            reach_upper: Some(frac(&ru)),
            repeat_lower: Some(frac(&pl)),
            repeat_upper: Some(frac(&pu)),
            truncation_states: Some(t.chain.len()),
            ..Default::default()
        })
    }

    let bound = args.bound;
    let result = match (&loaded.model, &target) {
        (Model::Pvass(m), Target::Pvass(t)) => {
            let chain = m.chain(t).map_err(|e| anyhow!("{e}"))?;
            solve(
                &chain,
                |s| s.valuation.iter().all(|&v| v <= bound),
                args.state_limit,
            )?
        }
        (Model::Plcs(m), Target::Plcs(t)) => {
            let chain = m.chain(t).map_err(|e| anyhow!("{e}"))?;
            solve(
                &chain,
                |s| match s {
                    PlcsState::Start => true,
                    PlcsState::Cfg(c) => c.contents.iter().all(|w| w.len() as u64 <= bound),
                },
                args.state_limit,
            )?
        }
        (Model::Pntm(m), Target::Pntm(q)) => {
            let chain = m.chain(q);
            solve(&chain, |s| s.time <= bound, args.state_limit)?
        }
        _ => bail!("target kind does not match the model kind"),
    };
    Ok((query, result))
}

fn run_simulate(args: &SimulateArgs) -> Result<(QueryEcho, ResultBlock)> {
    let loaded = load(&args.common)?;
    let target = require_target(&loaded)?;
    let mut query = echo("simulate", &args.common, &loaded.model);
    query.trials = Some(args.trials);
    query.horizon = Some(args.horizon);
    query.seed = Some(args.seed);

    let est = match (&loaded.model, &target) {
        (Model::Pvass(m), Target::Pvass(t)) => {
            let chain = m.chain(t).map_err(|e| anyhow!("{e}"))?;
            monte_carlo(&chain, args.horizon, args.trials, args.seed)
        }
        (Model::Plcs(m), Target::Plcs(t)) => {
            let chain = m.chain(t).map_err(|e| anyhow!("{e}"))?;
            monte_carlo(&chain, args.horizon, args.trials, args.seed)
        }
        (Model::Pntm(m), Target::Pntm(q)) => {
            let chain = m.chain(q);
            monte_carlo(&chain, args.horizon, args.trials, args.seed)
        }
        _ => bail!("target kind does not match the model kind"),
    };
    let result = ResultBlock {
        status: "computed".into(),
        estimate: Some(est.estimate),
        wilson_low: Some(est.wilson_low),
        wilson_high: Some(est.wilson_high),
        hits: Some(est.hits),
        ..Default::default()
    };
    Ok((query, result))
}

// ---------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------

pub fn render(report: &Report, json: bool) -> String {
    if json {
        return serde_json::to_string_pretty(report).expect("report serializes");
    }
    let mut out = String::new();
    let r = &report.result;
    let _ = writeln!(out, "{} on {} [{}]", report.query.kind, report.query.model, report.query.model_kind);
    let _ = writeln!(out, "status: {}", r.status);
    if let Some(v) = &r.verdict {
        let _ = writeln!(out, "verdict: {v}");
    }
    if let Some(reason) = &r.reason {
        let _ = writeln!(out, "reason: {reason}");
    }
    if let (Some(theta), Some(dec)) = (&r.theta, &r.theta_decimal) {
        let _ = writeln!(out, "theta: {theta} (~ {dec}), eps: {}", r.eps.as_deref().unwrap_or("-"));
    }
    if let (Some(yes), Some(no)) = (&r.yes, &r.no) {
        let _ = writeln!(out, "yes: {yes}, no: {no}");
    }
    if let (Some(depth), Some(exp)) = (r.depth, r.expansions) {
        let _ = writeln!(out, "depth: {depth}, expansions: {exp}");
    } else if let Some(exp) = r.expansions {
        let _ = writeln!(out, "expansions: {exp}");
    }
    if let Some(cert) = &r.certificate {
        match cert.kind.as_str() {
            "globally-coarse" => {
                let _ = writeln!(
                    out,
                    "certificate: globally coarse (beta = {}, span = {}, alpha = {}) for {}",
                    cert.beta.as_deref().unwrap_or("-"),
                    cert.span.unwrap_or(0),
                    cert.alpha.as_deref().unwrap_or("-"),
                    cert.target
                );
            }
            kind => {
                let _ = writeln!(
                    out,
                    "certificate: {kind} for {} ({})",
                    cert.target,
                    cert.note.as_deref().unwrap_or("")
                );
            }
        }
    }
    if let (Some(lo), Some(hi)) = (&r.reach_lower, &r.reach_upper) {
        let _ = writeln!(out, "reach probability in [{lo}, {hi}]");
    }
    if let (Some(lo), Some(hi)) = (&r.repeat_lower, &r.repeat_upper) {
        let _ = writeln!(out, "repeat-reach probability in [{lo}, {hi}]");
    }
    if let Some(n) = r.truncation_states {
        let _ = writeln!(out, "truncation states: {n}");
    }
    if let (Some(est), Some(lo), Some(hi)) = (r.estimate, r.wilson_low, r.wilson_high) {
        let _ = writeln!(out, "estimate: {est} (95% Wilson interval [{lo:.6}, {hi:.6}])");
    }
    if let Some(checked) = r.states_checked {
        let _ = writeln!(out, "states checked: {checked}");
    }
    for v in &r.violations {
        let _ = writeln!(out, "violation: {v}");
    }
    let _ = writeln!(out, "wall time: {} ms", report.timing.wall_ms);
    out
}

pub fn json_flag(command: &Command) -> bool {
    match command {
        Command::Validate(c) | Command::Certify(c) => c.json,
        Command::QualReach(a) | Command::QualRepeat(a) => a.common.json,
        Command::ApproxReach(a) | Command::ApproxRepeat(a) => a.common.json,
        Command::Oracle(a) => a.common.json,
        Command::Simulate(a) => a.common.json,
    }
}
