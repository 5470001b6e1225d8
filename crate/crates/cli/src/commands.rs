//! Dispatch from a command name to the solvers.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clearnet_core::equity::compute_bounds;
use clearnet_core::fixpoint::{
    enumerate_clearing_set, max_fixpoint, min_fixpoint, ClearingSet, EnumerationOptions,
    RegimeVector,
};
use clearnet_core::gauss::gaussian_max_clearing_traced;
use clearnet_core::milp::{
    build_p1, build_p2, maximal_pair_from, minimal_pair_from, mps, solve_milp_checked,
    MilpInstance, MilpSolution, ObjectiveWeights,
};
use clearnet_core::{ClearingPair, FinancialNetwork};

use crate::error::{CliError, Result};
use crate::report::{
    round_sig, ComparisonReport, EnumerationReport, LemmaView, MethodResult, MilpView, Outcome,
    PairReport, PairView, RegimeRow, Report, Side, StepView, ValidateReport,
};
use crate::scenario::Scenario;

/// Largest sup-norm gap between methods that still counts as agreement.
pub const AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Validate,
    Max,
    Min,
    Enumerate,
    MilpMax,
    MilpMin,
    Gauss,
    Compare,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Max => "max",
            Command::Min => "min",
            Command::Enumerate => "enumerate",
            Command::MilpMax => "milp-max",
            Command::MilpMin => "milp-min",
            Command::Gauss => "gauss",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flags {
    pub tol: f64,
    /// Per-component weights `(f1, f2, f3)`; all ones when absent.
    pub weights: Option<(f64, f64, f64)>,
    pub max_n: usize,
    pub export_mps: Option<PathBuf>,
    pub parallel: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            tol: clearnet_core::DEFAULT_TOLERANCE,
            weights: None,
            max_n: 16,
            export_mps: None,
            parallel: true,
        }
    }
}

/// Parses `f1,f2,f3`, three strictly positive numbers.
pub fn parse_weights(text: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || {
        CliError::Argument(format!(
            "weights must be three positive numbers f1,f2,f3, got `{text}`"
        ))
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut w = [0.0; 3];
    for (slot, part) in w.iter_mut().zip(&parts) {
        let x: f64 = part.parse().map_err(|_| bad())?;
        if !(x.is_finite() && x > 0.0) {
            return Err(bad());
        }
        *slot = x;
    }
    Ok((w[0], w[1], w[2]))
}

fn weights(net: &FinancialNetwork, flags: &Flags) -> ObjectiveWeights {
    match flags.weights {
        Some((f1, f2, f3)) => ObjectiveWeights::uniform(net.n(), f1, f2, f3),
        None => ObjectiveWeights::ones(net.n()),
    }
}

pub fn run_command(cmd: Command, scenario: &Scenario, flags: &Flags) -> Result<Report> {
    if !(flags.tol.is_finite() && flags.tol > 0.0) {
        return Err(CliError::Argument(format!(
            "tolerance must be positive, got {}",
            flags.tol
        )));
    }
    let net = scenario.network(flags.tol)?;
    let n = net.n();
    let label = scenario.label();
    let pair_report = |pair: &ClearingPair| PairReport {
        command: cmd.name(),
        scenario: label.clone(),
        n,
        pair: PairView::new(pair),
        milp: None,
        eliminations: None,
    };

    let report = match cmd {
        Command::Validate => {
            let bounds = compute_bounds(net.system())?;
            let ch = net.charges();
            Report::Validate(ValidateReport::new(
                label,
                n,
                (ch.alpha, ch.beta, ch.gamma),
                net.totals(),
                net.holdings_norm(),
                net.has_strict_holdings(),
                bounds.kappa,
                bounds.kappa1,
            ))
        }
        Command::Max => Report::Pair(pair_report(&max_fixpoint(&net, &RegimeVector::ones(n))?)),
        Command::Min => Report::Pair(pair_report(&min_fixpoint(&net, &RegimeVector::zeros(n))?)),
        Command::Enumerate => {
            let set = enumerate(&net, flags)?;
            Report::Enumerate(enumeration_report(label, n, &set))
        }
        Command::MilpMax => {
            let inst = build_p1(&net, &weights(&net, flags))?;
            let mps = export(&inst, flags)?;
            let sol = solve_milp_checked(&inst)?;
            let pair = maximal_pair_from(&inst, &sol)?;
            let mut r = pair_report(&pair);
            r.milp = Some(milp_view("P1", &inst, &sol, None, mps));
            Report::Pair(r)
        }
        Command::MilpMin => {
            let inst = build_p2(&net, &weights(&net, flags))?;
            let mps = export(&inst, flags)?;
            let sol = solve_milp_checked(&inst)?;
            let min = minimal_pair_from(&inst, &sol)?;
            let mut r = pair_report(&min.pair);
            r.milp = Some(milp_view("P2", &inst, &sol, Some(min.equality_flag), mps));
            Report::Pair(r)
        }
        Command::Gauss => {
            let (pair, trace) = gaussian_max_clearing_traced(&net)?;
            let mut r = pair_report(&pair);
            r.eliminations = Some(
                trace
                    .iter()
                    .map(|s| StepView {
                        bank: s.bank,
                        remaining: s.dim,
                        pi_row_sum_max: round_sig(s.pi_row_sum_max),
                        theta_norm: round_sig(s.theta_norm),
                        degenerate: s.degenerate,
                    })
                    .collect(),
            );
            Report::Pair(r)
        }
        Command::Compare => Report::Compare(compare(label, &net, flags)),
    };
    Ok(report)
}

fn enumerate(net: &FinancialNetwork, flags: &Flags) -> Result<ClearingSet> {
    Ok(enumerate_clearing_set(
        net,
        EnumerationOptions {
            max_n: flags.max_n,
            parallel: flags.parallel,
        },
    )?)
}

fn enumeration_report(scenario: String, n: usize, set: &ClearingSet) -> EnumerationReport {
    let round = |v: &nalgebra::DVector<f64>| v.iter().map(|&x| round_sig(x)).collect();
    EnumerationReport {
        command: "enumerate",
        scenario,
        n,
        regimes: set
            .entries
            .iter()
            .map(|e| RegimeRow {
                regime: e.regime.to_string(),
                min_p: round(&e.min.p),
                max_p: round(&e.max.p),
                unique: e.unique,
            })
            .collect(),
        distinct: set.distinct.iter().map(PairView::new).collect(),
        global_min: PairView::new(&set.global_min),
        global_max: PairView::new(&set.global_max),
    }
}

fn export(inst: &MilpInstance, flags: &Flags) -> Result<Option<String>> {
    let Some(path) = &flags.export_mps else {
        return Ok(None);
    };
    let text = mps::to_mps(&inst.program)?;
    fs::write(path, text).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(Some(path.display().to_string()))
}

fn milp_view(
    problem: &'static str,
    inst: &MilpInstance,
    sol: &MilpSolution,
    equality_flag: Option<bool>,
    mps: Option<String>,
) -> MilpView {
    let checks = sol
        .lemma_checks
        .clone()
        .expect("checked solutions carry lemma checks");
    MilpView {
        problem,
        a: sol.a.iter().map(|&x| u8::from(x > 0.5)).collect(),
        objective: round_sig(sol.objective),
        nodes: sol.nodes,
        kappa: round_sig(inst.kappa),
        kappa1: round_sig(inst.kappa1),
        lemma_checks: LemmaView {
            indicator: checks.indicator,
            payment: checks.payment,
            equity: checks.equity,
            near_ties: checks.near_ties,
        },
        equality_flag,
        mps,
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}

fn method(
    name: &'static str,
    side: Side,
    result: std::result::Result<ClearingPair, String>,
    wall_ms: f64,
) -> MethodResult {
    let outcome = match result {
        Ok(pair) => Outcome::Ok {
            pair: PairView::new(&pair),
        },
        Err(error) => Outcome::Failed { error },
    };
    MethodResult {
        method: name,
        side,
        outcome,
        wall_ms,
        compared: true,
        note: None,
    }
}

fn skipped(name: &'static str, side: Side, reason: String) -> MethodResult {
    MethodResult {
        method: name,
        side,
        outcome: Outcome::Skipped { reason },
        wall_ms: 0.0,
        compared: false,
        note: None,
    }
}

/// Runs every applicable method. Failures are recorded in the report and
/// make the verdict negative; they do not abort the comparison.
fn compare(scenario: String, net: &FinancialNetwork, flags: &Flags) -> ComparisonReport {
    let n = net.n();
    let w = weights(net, flags);
    let msg = |e: clearnet_core::Error| e.to_string();
    let mut methods = Vec::new();

    let (r, ms) = timed(|| max_fixpoint(net, &RegimeVector::ones(n)).map_err(msg));
    methods.push(method("fixpoint-max", Side::Maximal, r, ms));

    let (r, ms) = timed(|| {
        let inst = build_p1(net, &w)?;
        let sol = solve_milp_checked(&inst)?;
        maximal_pair_from(&inst, &sol)
    });
    methods.push(method("milp-p1", Side::Maximal, r.map_err(msg), ms));

    let ch = net.charges();
    if !ch.is_uniform() {
        methods.push(skipped(
            "gaussian",
            Side::Maximal,
            "requires alpha = beta = gamma".into(),
        ));
    } else if !net.has_strict_holdings() {
        methods.push(skipped(
            "gaussian",
            Side::Maximal,
            "requires every holdings row sum below 1".into(),
        ));
    } else {
        let (r, ms) = timed(|| {
            gaussian_max_clearing_traced(net)
                .map(|(p, _)| p)
                .map_err(msg)
        });
        methods.push(method("gaussian", Side::Maximal, r, ms));
    }

    let enumerated = if n <= flags.max_n {
        let (r, ms) = timed(|| enumerate(net, flags));
        Some((r, ms))
    } else {
        None
    };
    match &enumerated {
        Some((Ok(set), ms)) => {
            methods.push(method(
                "enumeration-max",
                Side::Maximal,
                Ok(set.global_max.clone()),
                *ms,
            ));
        }
        Some((Err(e), ms)) => {
            methods.push(method(
                "enumeration-max",
                Side::Maximal,
                Err(e.to_string()),
                *ms,
            ));
        }
        None => methods.push(skipped(
            "enumeration-max",
            Side::Maximal,
            format!("n = {n} exceeds max-n = {}", flags.max_n),
        )),
    }

    let (r, ms) = timed(|| min_fixpoint(net, &RegimeVector::zeros(n)).map_err(msg));
    methods.push(method("fixpoint-min", Side::Minimal, r, ms));

    // P2 is only compared when no bank sits on its threshold; otherwise its
    // optimum may lie strictly below the least clearing pair.
    let (r, ms) = timed(|| {
        let inst = build_p2(net, &w)?;
        let sol = solve_milp_checked(&inst)?;
        let ties = sol
            .lemma_checks
            .as_ref()
            .map(|c| c.near_ties.clone())
            .unwrap_or_default();
        let pair = ClearingPair::new(net, sol.p, sol.v)?;
        Ok::<_, clearnet_core::Error>((pair, ties))
    });
    let p2 = match r {
        Ok((pair, ties)) => {
            let mut m = method("milp-p2", Side::Minimal, Ok(pair), ms);
            if !ties.is_empty() {
                m.compared = false;
                m.note = Some(format!(
                    "not compared: banks {ties:?} have y within tolerance of l"
                ));
            }
            m
        }
        Err(e) => method("milp-p2", Side::Minimal, Err(e.to_string()), ms),
    };
    methods.push(p2);

    match &enumerated {
        Some((Ok(set), ms)) => {
            methods.push(method(
                "enumeration-min",
                Side::Minimal,
                Ok(set.global_min.clone()),
                *ms,
            ));
        }
        Some((Err(e), ms)) => {
            methods.push(method(
                "enumeration-min",
                Side::Minimal,
                Err(e.to_string()),
                *ms,
            ));
        }
        None => methods.push(skipped(
            "enumeration-min",
            Side::Minimal,
            format!("n = {n} exceeds max-n = {}", flags.max_n),
        )),
    }

    ComparisonReport::new(scenario, n, AGREEMENT_TOL, methods)
}
