//! Command results and their JSON or table rendering. Every number is
//! rounded to nine significant digits.

use std::fmt::Write as _;

use clap::ValueEnum;
use clearnet_core::ClearingPair;
use nalgebra::DVector;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Table,
}

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn rounded(v: &DVector<f64>) -> Vec<f64> {
    v.iter().map(|&x| round_sig(x)).collect()
}

/// C-style `%.9g`.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (8 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|&x| fmt_num(x)).collect();
    format!("({})", items.join(", "))
}

fn fmt_set(v: &[usize]) -> String {
    if v.is_empty() {
        return "none".into();
    }
    let items: Vec<String> = v.iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

/// Right-aligned text table.
fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(k, (c, w))| {
                if k == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        parts.join("  ")
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    for row in rows {
        let _ = writeln!(out, "{}", line(row.iter().map(String::as_str).collect()));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairView {
    pub p: Vec<f64>,
    pub v: Vec<f64>,
    pub defaulted: Vec<usize>,
}

impl PairView {
    pub fn new(pair: &ClearingPair) -> Self {
        Self {
            p: rounded(&pair.p),
            v: rounded(&pair.v),
            defaulted: pair.default_set(),
        }
    }

    fn table(&self, out: &mut String) {
        let rows: Vec<Vec<String>> = (0..self.p.len())
            .map(|i| {
                vec![
                    i.to_string(),
                    fmt_num(self.p[i]),
                    fmt_num(self.v[i]),
                    if self.defaulted.contains(&i) {
                        "yes"
                    } else {
                        "no"
                    }
                    .to_string(),
                ]
            })
            .collect();
        table(out, &["bank", "p", "V", "default"], &rows);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateReport {
    pub command: &'static str,
    pub scenario: String,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub totals: Vec<f64>,
    pub holdings_norm: f64,
    pub strict_holdings: bool,
    pub kappa: f64,
    pub kappa1: f64,
}

impl ValidateReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        scenario: String,
        n: usize,
        charges: (f64, f64, f64),
        totals: &DVector<f64>,
        holdings_norm: f64,
        strict_holdings: bool,
        kappa: f64,
        kappa1: f64,
    ) -> Self {
        Self {
            command: "validate",
            scenario,
            n,
            alpha: charges.0,
            beta: charges.1,
            gamma: charges.2,
            totals: rounded(totals),
            holdings_norm: round_sig(holdings_norm),
            strict_holdings,
            kappa: round_sig(kappa),
            kappa1: round_sig(kappa1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaView {
    pub indicator: bool,
    pub payment: bool,
    pub equity: bool,
    pub near_ties: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MilpView {
    pub problem: &'static str,
    pub a: Vec<u8>,
    pub objective: f64,
    pub nodes: usize,
    pub kappa: f64,
    pub kappa1: f64,
    pub lemma_checks: LemmaView,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equality_flag: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mps: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepView {
    pub bank: usize,
    pub remaining: usize,
    pub pi_row_sum_max: f64,
    pub theta_norm: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub command: &'static str,
    pub scenario: String,
    pub n: usize,
    #[serde(flatten)]
    pub pair: PairView,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub milp: Option<MilpView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eliminations: Option<Vec<StepView>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeRow {
    pub regime: String,
    pub min_p: Vec<f64>,
    pub max_p: Vec<f64>,
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnumerationReport {
    pub command: &'static str,
    pub scenario: String,
    pub n: usize,
    pub regimes: Vec<RegimeRow>,
    pub distinct: Vec<PairView>,
    pub global_min: PairView,
    pub global_max: PairView,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Maximal,
    Minimal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Outcome {
    Ok {
        #[serde(flatten)]
        pair: PairView,
    },
    Skipped {
        reason: String,
    },
    Failed {
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: &'static str,
    pub side: Side,
    #[serde(flatten)]
    pub outcome: Outcome,
    pub wall_ms: f64,
    /// Whether the method takes part in the agreement verdict.
    pub compared: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta {
    pub first: &'static str,
    pub second: &'static str,
    pub sup_p: f64,
    pub sup_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub command: &'static str,
    pub scenario: String,
    pub n: usize,
    pub tolerance: f64,
    pub methods: Vec<MethodResult>,
    pub deltas: Vec<Delta>,
    pub agreement: bool,
}

impl ComparisonReport {
    /// Fills in the pairwise deltas and the verdict: every compared method
    /// succeeded and all deltas are within tolerance.
    pub fn new(scenario: String, n: usize, tolerance: f64, methods: Vec<MethodResult>) -> Self {
        let mut deltas = Vec::new();
        for (k, a) in methods.iter().enumerate() {
            for b in &methods[k + 1..] {
                if !(a.compared && b.compared && a.side == b.side) {
                    continue;
                }
                if let (Outcome::Ok { pair: pa }, Outcome::Ok { pair: pb }) =
                    (&a.outcome, &b.outcome)
                {
                    deltas.push(Delta {
                        first: a.method,
                        second: b.method,
                        sup_p: round_sig(sup(&pa.p, &pb.p)),
                        sup_v: round_sig(sup(&pa.v, &pb.v)),
                    });
                }
            }
        }
        let failed = methods
            .iter()
            .any(|m| matches!(m.outcome, Outcome::Failed { .. }));
        let agreement = !failed
            && deltas
                .iter()
                .all(|d| d.sup_p <= tolerance && d.sup_v <= tolerance);
        Self {
            command: "compare",
            scenario,
            n,
            tolerance,
            methods,
            deltas,
            agreement,
        }
    }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Validate(ValidateReport),
    Pair(PairReport),
    Enumerate(EnumerationReport),
    Compare(ComparisonReport),
}

impl Report {
    /// A report whose content signals an internal inconsistency.
    pub fn failed(&self) -> bool {
        matches!(self, Report::Compare(c) if !c.agreement)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = match self {
                    Report::Validate(r) => serde_json::to_string_pretty(r),
                    Report::Pair(r) => serde_json::to_string_pretty(r),
                    Report::Enumerate(r) => serde_json::to_string_pretty(r),
                    Report::Compare(r) => serde_json::to_string_pretty(r),
                }
                .expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Table => self.table(),
        }
    }

    fn table(&self) -> String {
        let mut out = String::new();
        match self {
            Report::Validate(r) => {
                let _ = writeln!(out, "scenario {} is valid", r.scenario);
                let _ = writeln!(out, "banks            {}", r.n);
                let _ = writeln!(
                    out,
                    "charges          alpha {}  beta {}  gamma {}",
                    fmt_num(r.alpha),
                    fmt_num(r.beta),
                    fmt_num(r.gamma)
                );
                let _ = writeln!(out, "total debts      {}", fmt_list(&r.totals));
                let _ = writeln!(
                    out,
                    "holdings norm    {}{}",
                    fmt_num(r.holdings_norm),
                    if r.strict_holdings { " (strict)" } else { "" }
                );
                let _ = writeln!(out, "kappa            {}", fmt_num(r.kappa));
                let _ = writeln!(out, "kappa1           {}", fmt_num(r.kappa1));
            }
            Report::Pair(r) => {
                let _ = writeln!(out, "{} on {} ({} banks)", r.command, r.scenario, r.n);
                r.pair.table(&mut out);
                if let Some(m) = &r.milp {
                    let _ = writeln!(
                        out,
                        "{}: objective {}, {} nodes, kappa {}, kappa1 {}",
                        m.problem,
                        fmt_num(m.objective),
                        m.nodes,
                        fmt_num(m.kappa),
                        fmt_num(m.kappa1)
                    );
                    let a: Vec<String> = m.a.iter().map(|x| x.to_string()).collect();
                    let _ = writeln!(out, "a = ({})", a.join(", "));
                    let c = &m.lemma_checks;
                    let _ = writeln!(
                        out,
                        "checks: indicator {}, payment {}, equity {}, near ties {}",
                        c.indicator,
                        c.payment,
                        c.equity,
                        fmt_set(&c.near_ties)
                    );
                    if let Some(flag) = m.equality_flag {
                        let _ = writeln!(out, "equality flag: {flag}");
                    }
                    if let Some(path) = &m.mps {
                        let _ = writeln!(out, "MPS written to {path}");
                    }
                }
                if let Some(steps) = &r.eliminations {
                    let _ = writeln!(out, "{} elimination(s)", steps.len());
                    let rows: Vec<Vec<String>> = steps
                        .iter()
                        .map(|s| {
                            vec![
                                s.bank.to_string(),
                                s.remaining.to_string(),
                                fmt_num(s.pi_row_sum_max),
                                fmt_num(s.theta_norm),
                                s.degenerate.to_string(),
                            ]
                        })
                        .collect();
                    table(
                        &mut out,
                        &["bank", "left", "max pi row", "theta norm", "degenerate"],
                        &rows,
                    );
                }
            }
            Report::Enumerate(r) => {
                let _ = writeln!(
                    out,
                    "enumerate on {} ({} banks, {} regimes, {} distinct vector(s))",
                    r.scenario,
                    r.n,
                    r.regimes.len(),
                    r.distinct.len()
                );
                let rows: Vec<Vec<String>> = r
                    .regimes
                    .iter()
                    .map(|g| {
                        vec![
                            g.regime.clone(),
                            fmt_list(&g.min_p),
                            fmt_list(&g.max_p),
                            g.unique.to_string(),
                        ]
                    })
                    .collect();
                table(&mut out, &["regime", "min p", "max p", "unique"], &rows);
                let _ = writeln!(out, "least    {}", fmt_list(&r.global_min.p));
                let _ = writeln!(out, "greatest {}", fmt_list(&r.global_max.p));
            }
            Report::Compare(r) => {
                let _ = writeln!(out, "compare on {} ({} banks)", r.scenario, r.n);
                let rows: Vec<Vec<String>> = r
                    .methods
                    .iter()
                    .map(|m| {
                        let (status, p) = match &m.outcome {
                            Outcome::Ok { pair } => ("ok".to_string(), fmt_list(&pair.p)),
                            Outcome::Skipped { reason } => ("skipped".to_string(), reason.clone()),
                            Outcome::Failed { error } => ("failed".to_string(), error.clone()),
                        };
                        let side = match m.side {
                            Side::Maximal => "max",
                            Side::Minimal => "min",
                        };
                        vec![
                            m.method.to_string(),
                            side.to_string(),
                            status,
                            format!("{:.1}", m.wall_ms),
                            p,
                        ]
                    })
                    .collect();
                table(&mut out, &["method", "side", "status", "ms", "p"], &rows);
                for m in r.methods.iter().filter(|m| m.note.is_some()) {
                    let _ = writeln!(out, "{}: {}", m.method, m.note.as_deref().unwrap_or(""));
                }
                for d in &r.deltas {
                    let _ = writeln!(
                        out,
                        "{} vs {}: |dp| {}, |dV| {}",
                        d.first,
                        d.second,
                        fmt_num(d.sup_p),
                        fmt_num(d.sup_v)
                    );
                }
                let verdict = if r.agreement { "agree" } else { "DISAGREE" };
                let _ = writeln!(
                    out,
                    "methods {verdict} at tolerance {}",
                    fmt_num(r.tolerance)
                );
            }
        }
        out
    }
}
