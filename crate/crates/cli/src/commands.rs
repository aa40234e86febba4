use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::Instant;

use bipartite::chsh::{chsh_optimize, submatrix_chsh, ChshResult, SubmatrixChsh};
use bipartite::criteria::{
    factorize, is_separable, reduced_criterion, Factorization, SeparabilityVerdict,
};
use bipartite::entanglement::{e_total, e_upper_bound, generate_maxent, maxent_check};
use bipartite::oracle::grid_chsh;
use bipartite::ppt::{
    closed_form_spectrum_2xm, cubic_spectrum_3x3, ppt_spectrum, spectrum_deviation, trace_checks,
    Side,
};
use bipartite::state::{reduce, zero_flag, StateMatrix};
use bipartite::{Error, QuadSelector};
use serde::Serialize;

use crate::render::{bloch, complex_list, list, num};
use crate::{emit, read_state, AnalyzeArgs, ChshArgs, InputArgs, InputInfo, MaxentArgs, PptArgs};

/// Stage timer that records nothing unless timings were requested.
pub struct Stages {
    enabled: bool,
    times: BTreeMap<&'static str, f64>,
}

impl Stages {
    pub fn new(enabled: bool) -> Self {
        Self {
            enabled,
            times: BTreeMap::new(),
        }
    }

    pub fn run<T>(&mut self, name: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            self.times.insert(name, start.elapsed().as_secs_f64() * 1e3);
        }
        out
    }

    pub fn finish(self) -> Option<BTreeMap<&'static str, f64>> {
        self.enabled.then_some(self.times)
    }
}

#[derive(Serialize)]
struct SeparabilitySection {
    #[serde(flatten)]
    verdict: SeparabilityVerdict,
    reduced_rows: usize,
    reduced_cols: usize,
    zero_flag: u8,
    reduced_value: f64,
}

#[derive(Serialize)]
struct Param {
    selector: QuadSelector,
    value: f64,
}

#[derive(Serialize)]
struct EntanglementSection {
    total: f64,
    upper_bound: f64,
    maxent_residual: f64,
    param_count: usize,
    /// Largest first; every parameter with --all-params.
    params: Vec<Param>,
}

#[derive(Serialize)]
pub struct ClosedFormSection {
    pub kind: &'static str,
    pub values: Vec<f64>,
    pub max_deviation: f64,
    /// Set for 2xm states with m > 5.
    pub extrapolated: bool,
}

#[derive(Serialize)]
pub struct PptSection {
    side: Side,
    tol: f64,
    eigenvalues: Vec<f64>,
    min_eigenvalue: f64,
    ppt_positive: bool,
    trace: f64,
    trace_sq: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<ClosedFormSection>,
}

#[derive(Serialize)]
pub struct ChshSection {
    /// Block searched; absent when the whole 2x2 state was used.
    #[serde(skip_serializing_if = "Option::is_none")]
    selector: Option<QuadSelector>,
    block_norm2: f64,
    #[serde(flatten)]
    result: ChshResult,
    /// `2⟨ψ|ψ⟩`, the local-hidden-variable limit for this block.
    classical_bound: f64,
    violation: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<GridSection>,
}

#[derive(Serialize)]
struct GridSection {
    resolution: usize,
    value: f64,
    evaluations: u64,
}

#[derive(Serialize)]
struct AnalysisReport {
    input: InputInfo,
    separability: SeparabilitySection,
    #[serde(skip_serializing_if = "Option::is_none")]
    factorization: Option<Factorization>,
    entanglement: EntanglementSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    ppt: Option<PptSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chsh: Option<ChshSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<BTreeMap<&'static str, f64>>,
}

const VIOLATION_TOL: f64 = 1e-9;

pub struct ClosedForm {
    pub kind: &'static str,
    /// Descending.
    pub values: Vec<f64>,
    pub extrapolated: bool,
}

/// Closed-form spectrum for 2xm, mx2 (through the transpose, which leaves
/// the spectrum unchanged) and 3x3 states; `None` for other shapes.
pub fn closed_form_values(c: &StateMatrix, tol: f64) -> Option<Result<ClosedForm, Error>> {
    let sorted = |mut v: Vec<f64>| {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    };
    if c.rows() == 2 || c.cols() == 2 {
        let oriented = if c.rows() == 2 {
            c.clone()
        } else {
            c.transpose()
        };
        Some(
            closed_form_spectrum_2xm(&oriented, tol).map(|cf| ClosedForm {
                kind: "2xm",
                values: sorted(cf.values),
                extrapolated: cf.extrapolated,
            }),
        )
    } else if c.rows() == 3 && c.cols() == 3 {
        Some(cubic_spectrum_3x3(c).map(|cs| ClosedForm {
            kind: "3x3",
            values: sorted(cs.values),
            extrapolated: false,
        }))
    } else {
        None
    }
}

pub fn ppt_section(
    c: &StateMatrix,
    side: Side,
    tol: f64,
    closed_form: bool,
) -> Result<PptSection, Error> {
    let spec = ppt_spectrum(c, side, tol)?;
    let (trace, trace_sq) = trace_checks(&spec.transpose.sigma);
    let closed_form = if closed_form {
        let cf = closed_form_values(c, 1e-12).unwrap_or_else(|| {
            Err(Error::NotApplicable(format!(
                "no closed form for a {}x{} state",
                c.rows(),
                c.cols()
            )))
        })?;
        let max_deviation = spectrum_deviation(&spec.eigenvalues, &cf.values);
        Some(ClosedFormSection {
            kind: cf.kind,
            values: cf.values,
            max_deviation,
            extrapolated: cf.extrapolated,
        })
    } else {
        None
    };
    Ok(PptSection {
        side,
        tol,
        min_eigenvalue: spec.min_eigenvalue,
        ppt_positive: spec.ppt_positive,
        eigenvalues: spec.eigenvalues,
        trace,
        trace_sq,
        closed_form,
    })
}

fn chsh_section(
    c: &StateMatrix,
    selector: Option<QuadSelector>,
    search: &crate::SearchArgs,
    grid: Option<usize>,
) -> Result<ChshSection, Error> {
    let (block_norm2, result, block) = match selector {
        None => (
            c.norm2(),
            chsh_optimize(c, search.budget(), search.seed)?,
            c.clone(),
        ),
        Some(sel) => {
            let SubmatrixChsh {
                block_norm2,
                result,
                ..
            } = submatrix_chsh(c, sel, search.budget(), search.seed)?;
            let q = bipartite::submatrix_q(c, sel)?;
            (block_norm2, result, StateMatrix::from_rows(&q.0)?)
        }
    };
    let grid = match grid {
        Some(res) => {
            let g = grid_chsh(&block, res)?;
            Some(GridSection {
                resolution: res,
                value: g.value,
                evaluations: g.evaluations,
            })
        }
        None => None,
    };
    let classical_bound = 2.0 * block_norm2;
    Ok(ChshSection {
        selector,
        block_norm2,
        violation: result.achieved > classical_bound + VIOLATION_TOL,
        classical_bound,
        result,
        grid,
    })
}

pub fn analyze(args: &AnalyzeArgs) -> Result<u8, Error> {
    let mut stages = Stages::new(args.output.timings);
    let (c, input) = stages.run("load", || read_state(&args.input))?;
    let verdict = stages.run("separability", || is_separable(&c, args.tol));
    let reduced = reduce(&c, args.tol)?;
    let criterion = reduced_criterion(&c, args.tol)?;
    let separability = SeparabilitySection {
        verdict,
        reduced_rows: reduced.matrix.rows(),
        reduced_cols: reduced.matrix.cols(),
        zero_flag: zero_flag(&reduced.matrix, args.tol),
        reduced_value: criterion.value,
    };
    let factorization = if verdict.separable {
        Some(stages.run("factorization", || factorize(&c, args.tol))?)
    } else {
        None
    };

    let report = stages.run("entanglement", || e_total(&c));
    let ranked = report.ranked();
    let shown = if args.all_params {
        ranked.len()
    } else {
        args.top.min(ranked.len())
    };
    let entanglement = EntanglementSection {
        total: report.total,
        upper_bound: report.upper_bound,
        maxent_residual: report.maxent_residual,
        param_count: ranked.len(),
        params: ranked[..shown]
            .iter()
            .map(|&(selector, value)| Param { selector, value })
            .collect(),
    };

    let ppt = if args.ppt {
        Some(stages.run("ppt", || {
            ppt_section(&c, args.side.into(), args.ppt_tol, false)
        })?)
    } else {
        None
    };
    let chsh = if args.chsh {
        let selector = if c.rows() == 2 && c.cols() == 2 {
            None
        } else {
            Some(verdict.witness.unwrap_or(QuadSelector::new(0, 1, 0, 1)?))
        };
        Some(stages.run("chsh", || chsh_section(&c, selector, &args.search, None))?)
    } else {
        None
    };

    let out = AnalysisReport {
        input,
        separability,
        factorization,
        entanglement,
        ppt,
        chsh,
        timings_ms: stages.finish(),
    };
    emit(args.output.format, &out, analysis_text)?;
    Ok(if verdict.separable { 0 } else { 1 })
}

fn input_line(out: &mut String, i: &InputInfo) {
    let note = if i.normalized_on_load {
        ", normalized on load"
    } else {
        ""
    };
    writeln!(
        out,
        "input: {} ({}x{}, norm2 = {}{note})",
        i.source,
        i.rows,
        i.cols,
        num(i.norm2)
    )
    .unwrap();
}

fn timings_text(out: &mut String, t: &Option<BTreeMap<&'static str, f64>>) {
    if let Some(t) = t {
        let parts: Vec<String> = t.iter().map(|(k, v)| format!("{k} {}", num(*v))).collect();
        writeln!(out, "timings (ms): {}", parts.join(", ")).unwrap();
    }
}

fn analysis_text(r: &AnalysisReport) -> String {
    let mut out = String::new();
    input_line(&mut out, &r.input);
    let s = &r.separability;
    let v = &s.verdict;
    match v.witness {
        Some(w) => writeln!(
            out,
            "verdict: entangled (q_sum = {}, tol = {}, witness {w})",
            num(v.q_sum),
            num(v.tol)
        ),
        None => writeln!(
            out,
            "verdict: separable (q_sum = {}, tol = {})",
            num(v.q_sum),
            num(v.tol)
        ),
    }
    .unwrap();
    writeln!(
        out,
        "reduced matrix: {}x{}, zero flag {}, criterion value {}",
        s.reduced_rows,
        s.reduced_cols,
        s.zero_flag,
        num(s.reduced_value)
    )
    .unwrap();
    if let Some(f) = &r.factorization {
        writeln!(out, "factorization: a = [{}]", complex_list(&f.a)).unwrap();
        writeln!(out, "               b = [{}]", complex_list(&f.b)).unwrap();
        writeln!(out, "               residual = {}", num(f.residual)).unwrap();
    }
    let e = &r.entanglement;
    writeln!(
        out,
        "E_total = {} (upper bound {}, maxent residual {})",
        num(e.total),
        num(e.upper_bound),
        num(e.maxent_residual)
    )
    .unwrap();
    writeln!(out, "parameters ({} of {}):", e.params.len(), e.param_count).unwrap();
    for p in &e.params {
        writeln!(out, "  {:<12} {}", p.selector.to_string(), num(p.value)).unwrap();
    }
    if let Some(p) = &r.ppt {
        ppt_text(&mut out, p);
    }
    if let Some(c) = &r.chsh {
        chsh_text(&mut out, c);
    }
    timings_text(&mut out, &r.timings_ms);
    out
}

fn ppt_text(out: &mut String, p: &PptSection) {
    let verdict = if p.ppt_positive {
        "positive"
    } else {
        "negative"
    };
    writeln!(
        out,
        "partial transpose on {:?}: {verdict} (min eigenvalue {}, tol {})",
        p.side,
        num(p.min_eigenvalue),
        num(p.tol)
    )
    .unwrap();
    writeln!(out, "  eigenvalues: {}", list(&p.eigenvalues)).unwrap();
    writeln!(
        out,
        "  Tr sigma = {}, Tr sigma^2 = {}",
        num(p.trace),
        num(p.trace_sq)
    )
    .unwrap();
    if let Some(cf) = &p.closed_form {
        let note = if cf.extrapolated {
            ", extrapolated"
        } else {
            ""
        };
        writeln!(
            out,
            "  closed form ({}{note}): {}",
            cf.kind,
            list(&cf.values)
        )
        .unwrap();
        writeln!(out, "  max deviation: {}", num(cf.max_deviation)).unwrap();
    }
}

fn chsh_text(out: &mut String, c: &ChshSection) {
    let r = &c.result;
    match c.selector {
        Some(sel) => writeln!(out, "chsh on block {sel} (norm2 {}):", num(c.block_norm2)),
        None => writeln!(out, "chsh (norm2 {}):", num(c.block_norm2)),
    }
    .unwrap();
    writeln!(
        out,
        "  achieved {} of closed form {} (gap {})",
        num(r.achieved),
        num(r.closed_form_max),
        num(r.gap)
    )
    .unwrap();
    let verdict = if c.violation {
        "violated"
    } else {
        "not violated"
    };
    writeln!(
        out,
        "  classical bound {}: {verdict}",
        num(c.classical_bound)
    )
    .unwrap();
    let s = &r.settings;
    writeln!(out, "  q = {}, r = {}", bloch(&s.q), bloch(&s.r)).unwrap();
    writeln!(out, "  s = {}, t = {}", bloch(&s.s), bloch(&s.t)).unwrap();
    writeln!(out, "  evaluations {}", r.evaluations).unwrap();
    if let Some(g) = &c.grid {
        writeln!(
            out,
            "  grid oracle at resolution {}: {} ({} evaluations)",
            g.resolution,
            num(g.value),
            g.evaluations
        )
        .unwrap();
    }
}

#[derive(Serialize)]
struct PptReport {
    input: InputInfo,
    #[serde(flatten)]
    ppt: PptSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<BTreeMap<&'static str, f64>>,
}

pub fn ppt(args: &PptArgs) -> Result<u8, Error> {
    let mut stages = Stages::new(args.output.timings);
    let (c, input) = stages.run("load", || read_state(&args.input))?;
    let ppt = stages.run("spectrum", || {
        ppt_section(&c, args.side.into(), args.ppt_tol, args.closed_form)
    })?;
    let positive = ppt.ppt_positive;
    let report = PptReport {
        input,
        ppt,
        timings_ms: stages.finish(),
    };
    emit(args.output.format, &report, |r| {
        let mut out = String::new();
        input_line(&mut out, &r.input);
        ppt_text(&mut out, &r.ppt);
        timings_text(&mut out, &r.timings_ms);
        out
    })?;
    Ok(if positive { 0 } else { 1 })
}

#[derive(Serialize)]
struct ChshReport {
    input: InputInfo,
    #[serde(flatten)]
    chsh: ChshSection,
    restarts: usize,
    passes: usize,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<BTreeMap<&'static str, f64>>,
}

pub fn chsh(args: &ChshArgs) -> Result<u8, Error> {
    let mut stages = Stages::new(args.output.timings);
    let (c, input) = stages.run("load", || read_state(&args.input))?;
    let chsh = stages.run("chsh", || {
        chsh_section(&c, args.selector, &args.search, args.grid)
    })?;
    let violation = chsh.violation;
    let report = ChshReport {
        input,
        chsh,
        restarts: args.search.budget,
        passes: args.search.passes,
        seed: args.search.seed,
        timings_ms: stages.finish(),
    };
    emit(args.output.format, &report, |r| {
        let mut out = String::new();
        input_line(&mut out, &r.input);
        writeln!(
            out,
            "search: {} restarts, {} passes, seed {}",
            r.restarts, r.passes, r.seed
        )
        .unwrap();
        chsh_text(&mut out, &r.chsh);
        timings_text(&mut out, &r.timings_ms);
        out
    })?;
    Ok(if violation { 1 } else { 0 })
}

#[derive(Serialize)]
struct MaxentReport {
    source: String,
    rows: usize,
    cols: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    e_total: f64,
    upper_bound: f64,
    bound_deviation: f64,
    residual: f64,
    tol: f64,
    certified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    written_to: Option<String>,
    /// The generated state when no output file was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<serde_json::Value>,
}

pub fn maxent(args: &MaxentArgs) -> Result<u8, Error> {
    let (c, source, seed) = match (&args.input, args.n, args.m) {
        (Some(path), _, _) => {
            let (c, info) = read_state(&InputArgs {
                input: path.clone(),
                normalize: false,
            })?;
            (c, info.source, None)
        }
        (None, Some(n), Some(m)) => (
            generate_maxent(n, m, args.seed)?,
            "generated".to_string(),
            Some(args.seed),
        ),
        _ => {
            return Err(Error::InvalidArgument(
                "give either --input or both --n and --m".into(),
            ))
        }
    };
    let check = maxent_check(&c, args.cert_tol)?;
    let e = e_total(&c).total;
    let upper_bound = e_upper_bound(c.rows(), c.cols());
    let bound_deviation = (e - upper_bound).abs();
    let certified = check.is_max && bound_deviation <= args.cert_tol;

    let mut written_to = None;
    let mut state = None;
    if seed.is_some() {
        match &args.output {
            Some(path) => {
                std::fs::write(path, c.to_json() + "\n")
                    .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
                written_to = Some(path.display().to_string());
            }
            None => {
                state = Some(
                    serde_json::from_str(&c.to_json())
                        .map_err(|e| Error::Numerical(e.to_string()))?,
                )
            }
        }
    }
    let report = MaxentReport {
        source,
        rows: c.rows(),
        cols: c.cols(),
        seed,
        e_total: e,
        upper_bound,
        bound_deviation,
        residual: check.residual,
        tol: args.cert_tol,
        certified,
        written_to,
        state,
    };
    emit(args.format, &report, |r| {
        let mut out = String::new();
        match r.seed {
            Some(seed) => writeln!(out, "generated {}x{} state, seed {seed}", r.rows, r.cols),
            None => writeln!(out, "input: {} ({}x{})", r.source, r.rows, r.cols),
        }
        .unwrap();
        writeln!(
            out,
            "E_total = {} (upper bound {}, deviation {})",
            num(r.e_total),
            num(r.upper_bound),
            num(r.bound_deviation)
        )
        .unwrap();
        writeln!(
            out,
            "Gram residual = {} (tol {})",
            num(r.residual),
            num(r.tol)
        )
        .unwrap();
        writeln!(out, "certified: {}", if r.certified { "yes" } else { "no" }).unwrap();
        if let Some(p) = &r.written_to {
            writeln!(out, "state written to {p}").unwrap();
        }
        if r.state.is_some() {
            writeln!(out, "state: {}", c.to_json()).unwrap();
        }
        out
    })?;
    Ok(if certified { 0 } else { 1 })
}
