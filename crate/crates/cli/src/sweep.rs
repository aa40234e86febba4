use std::fmt::Write;

use bipartite::chsh::{chsh_max_closed, chsh_optimize, Budget};
use bipartite::criteria::{chi, factorize, is_separable, q_sum, reduced_criterion, s_sum};
use bipartite::entanglement::{
    e_total, e_upper_bound, generate_maxent, maxent_check, verify_2xm_identity,
};
use bipartite::linalg::random_unitary;
use bipartite::oracle::{e_total_gram, grid_chsh, schmidt_rank};
use bipartite::ppt::{cubic_spectrum_3x3, ppt_spectrum, spectrum_deviation, trace_checks, Side};
use bipartite::state::{
    normalize, parse_state, random_product_state, random_state, reduce, zero_flag, StateFormat,
    StateMatrix,
};
use bipartite::Error;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::{closed_form_values, Stages};
use crate::render::num;
use crate::{emit, SweepArgs, VerifyArgs};

const RANK_TOL: f64 = 1e-8;
const SWEEP_GRID_RESOLUTION: usize = 6;

/// Per-state seed: distinct for every `(seed, k)` at desk scale.
fn state_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(k as u64)
}

/// Worst observed value of one property against its limit.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub worst: f64,
    pub limit: f64,
    pub samples: usize,
    pub failures: usize,
    pub pass: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn record(&mut self, name: &'static str, value: f64, limit: f64) {
        let idx = match self.0.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                self.0.push(Check {
                    name,
                    worst: f64::NEG_INFINITY,
                    limit,
                    samples: 0,
                    failures: 0,
                    pass: true,
                });
                self.0.len() - 1
            }
        };
        let c = &mut self.0[idx];
        c.samples += 1;
        c.worst = c.worst.max(value);
        if value.is_nan() || value > limit {
            c.failures += 1;
            c.pass = false;
        }
    }
}

/// Separability verdicts from the four independent routes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FourWay {
    pub q_criterion: bool,
    pub reduced_criterion: bool,
    pub ppt: bool,
    pub schmidt_rank_one: bool,
}

impl FourWay {
    pub fn compute(c: &StateMatrix, tol: f64, ppt_tol: f64) -> Result<Self, Error> {
        Ok(Self {
            q_criterion: is_separable(c, tol).separable,
            reduced_criterion: reduced_criterion(c, tol)?.separable,
            ppt: ppt_spectrum(c, Side::A, ppt_tol)?.ppt_positive,
            schmidt_rank_one: schmidt_rank(c, RANK_TOL).rank == 1,
        })
    }

    pub fn agree(&self) -> bool {
        self.q_criterion == self.reduced_criterion
            && self.reduced_criterion == self.ppt
            && self.ppt == self.schmidt_rank_one
    }
}

#[derive(Serialize)]
struct SweepReport {
    rows: usize,
    cols: usize,
    count: usize,
    seed: u64,
    separable_states: usize,
    checks: Vec<Check>,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<std::collections::BTreeMap<&'static str, f64>>,
}

fn relative(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn sweep(args: &SweepArgs) -> Result<u8, Error> {
    if args.n == 0 || args.m == 0 || args.count == 0 {
        return Err(Error::InvalidArgument(
            "--n, --m and --count must be positive".into(),
        ));
    }
    let (n, m) = (args.n, args.m);
    let mut stages = Stages::new(args.output.timings);
    let mut checks = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut separable_states = 0;
    let two_qubit = n == 2 && m == 2;

    stages.run("states", || -> Result<(), Error> {
        for k in 0..args.count {
            let seed = state_seed(args.seed, k);
            let c = if k % 2 == 0 {
                random_state(n, m, seed)?
            } else {
                random_product_state(n, m, seed)?
            };

            let four = FourWay::compute(&c, args.tol, args.ppt_tol)?;
            checks.record(
                "four_way_disagreement",
                f64::from(u8::from(!four.agree())),
                0.0,
            );
            let report = e_total(&c);
            let e = report.total;
            let separable = is_separable(&c, args.tol).separable;
            checks.record(
                "e_total_verdict_mismatch",
                f64::from(u8::from((e <= args.tol) != separable)),
                0.0,
            );
            separable_states += usize::from(separable);

            checks.record(
                "e_total_vs_gram_relative",
                relative(e, e_total_gram(&c), c.norm2().powi(2)),
                1e-10,
            );
            checks.record("upper_bound_excess", e - e_upper_bound(n, m), 1e-9);

            let u = random_unitary(n, &mut rng);
            let v = random_unitary(m, &mut rng);
            let moved = StateMatrix::from_cmatrix(&(&(&u * &c.to_cmatrix()) * &v.adjoint()))?;
            checks.record(
                "local_unitary_invariance",
                (e_total(&moved).total - e).abs(),
                1e-10,
            );

            let profile = schmidt_rank(&c, RANK_TOL);
            let s2: f64 = profile.values.iter().map(|s| s * s).sum();
            checks.record("singular_values_vs_norm", (s2 - c.norm2()).abs(), 1e-10);

            let q = q_sum(&c);
            checks.record(
                "s_plus_chi_exceeds_q",
                (s_sum(&c) + chi(&c) - q).max(0.0),
                1e-12 * q.max(1.0),
            );

            if separable {
                checks.record(
                    "factorization_residual",
                    factorize(&c, args.tol)?.residual,
                    1e-8,
                );
            }

            let spec_a = ppt_spectrum(&c, Side::A, args.ppt_tol)?;
            let spec_b = ppt_spectrum(&c, Side::B, args.ppt_tol)?;
            checks.record(
                "side_a_vs_b_spectrum",
                spectrum_deviation(&spec_a.eigenvalues, &spec_b.eigenvalues),
                1e-10,
            );
            let (t1, t2) = trace_checks(&spec_a.transpose.sigma);
            checks.record("trace_sigma", (t1 - 1.0).abs(), 1e-10);
            checks.record("trace_sigma_squared", (t2 - 1.0).abs(), 1e-10);

            if let Some(cf) = closed_form_values(&c, 1e-12) {
                checks.record(
                    "closed_form_spectrum",
                    spectrum_deviation(&spec_a.eigenvalues, &cf?.values),
                    1e-8,
                );
            }
            if n == 3 && m == 3 {
                let min_y = cubic_spectrum_3x3(&c)?
                    .squared_roots
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                checks.record("cubic_negative_squared_root", (-min_y).max(0.0), 1e-12);
            }
            if n == 2 || m == 2 {
                let scaled = c.scale(Complex64::new(rng.random_range(0.1..10.0), 0.0))?;
                let oriented = if n == 2 { scaled } else { scaled.transpose() };
                let id = verify_2xm_identity(&oriented)?;
                checks.record(
                    "two_row_identity_relative",
                    relative(id.lhs, id.rhs, f64::MIN_POSITIVE),
                    1e-10,
                );
            }
            if k % 10 == 0 {
                let g = generate_maxent(n, m, seed)?;
                checks.record(
                    "maxent_bound_deviation",
                    (e_total(&g).total - e_upper_bound(n, m)).abs(),
                    1e-10,
                );
                checks.record("maxent_residual", maxent_check(&g, 1e-10)?.residual, 1e-10);
            }
            if two_qubit && k < args.chsh_count {
                let budget = Budget {
                    restarts: args.budget,
                    ..Budget::default()
                };
                let opt = chsh_optimize(&c, budget, seed)?;
                checks.record("chsh_optimizer_gap", opt.gap.abs(), 1e-5);
                let grid = grid_chsh(&c, SWEEP_GRID_RESOLUTION)?;
                checks.record("grid_exceeds_optimizer", grid.value - opt.achieved, 1e-9);
                let alpha =
                    Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                let scaled = chsh_max_closed(&c.scale(alpha)?)?;
                checks.record(
                    "chsh_scaling_relative",
                    relative(scaled, alpha.norm_sqr() * chsh_max_closed(&c)?, 1e-300),
                    1e-10,
                );
            }
        }
        Ok(())
    })?;

    let checks = checks.0;
    let pass = checks.iter().all(|c| c.pass);
    let report = SweepReport {
        rows: n,
        cols: m,
        count: args.count,
        seed: args.seed,
        separable_states,
        checks,
        pass,
        timings_ms: stages.finish(),
    };
    emit(args.output.format, &report, |r| {
        let mut out = String::new();
        writeln!(
            out,
            "sweep: {} states of shape {}x{}, seed {}, {} separable",
            r.count, r.rows, r.cols, r.seed, r.separable_states
        )
        .unwrap();
        checks_text(&mut out, &r.checks);
        writeln!(out, "result: {}", if r.pass { "pass" } else { "FAIL" }).unwrap();
        if let Some(t) = &r.timings_ms {
            writeln!(
                out,
                "timings (ms): {}",
                t.iter()
                    .map(|(k, v)| format!("{k} {}", num(*v)))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
            .unwrap();
        }
        out
    })?;
    Ok(if pass { 0 } else { 1 })
}

fn checks_text(out: &mut String, checks: &[Check]) {
    for c in checks {
        let tag = if c.pass { "ok  " } else { "FAIL" };
        writeln!(
            out,
            "  {tag} {:<28} worst {} (limit {}, {} samples)",
            c.name,
            num(c.worst),
            num(c.limit),
            c.samples
        )
        .unwrap();
    }
}

/// States shipped with the tool and the facts each must reproduce.
const GOLDEN: [(&str, &str); 5] = [
    ("bell.json", include_str!("../../../corpus/bell.json")),
    (
        "product_2x2.json",
        include_str!("../../../corpus/product_2x2.json"),
    ),
    (
        "product_3x3.json",
        include_str!("../../../corpus/product_3x3.json"),
    ),
    (
        "maxent_3x3.json",
        include_str!("../../../corpus/maxent_3x3.json"),
    ),
    (
        "zero_column_3x3.json",
        include_str!("../../../corpus/zero_column_3x3.json"),
    ),
];

#[derive(Debug, Clone, Serialize)]
struct VerifyItem {
    name: String,
    pass: bool,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    items: Vec<VerifyItem>,
    random_states: usize,
    random_checks: Vec<Check>,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings_ms: Option<std::collections::BTreeMap<&'static str, f64>>,
}

fn item(items: &mut Vec<VerifyItem>, name: String, pass: bool, detail: String) {
    items.push(VerifyItem { name, pass, detail });
}

/// Four-way agreement and, where a closed form exists, the spectrum check.
fn standard_checks(
    items: &mut Vec<VerifyItem>,
    label: &str,
    c: &StateMatrix,
    tol: f64,
    ppt_tol: f64,
) -> Result<(), Error> {
    let four = FourWay::compute(c, tol, ppt_tol)?;
    item(
        items,
        format!("{label}: four-way agreement"),
        four.agree(),
        format!("{four:?}"),
    );
    if let Some(cf) = closed_form_values(c, 1e-12) {
        let cf = cf?;
        let dev = spectrum_deviation(&ppt_spectrum(c, Side::A, ppt_tol)?.eigenvalues, &cf.values);
        item(
            items,
            format!("{label}: closed-form spectrum ({})", cf.kind),
            dev <= 1e-8,
            format!("max deviation {}", num(dev)),
        );
    }
    Ok(())
}

fn golden_checks(
    items: &mut Vec<VerifyItem>,
    name: &str,
    c: &StateMatrix,
    tol: f64,
    ppt_tol: f64,
) -> Result<(), Error> {
    let verdict = is_separable(c, tol);
    let e = e_total(c).total;
    let spec = ppt_spectrum(c, Side::A, ppt_tol)?;
    let mut expect =
        |what: &str, ok: bool, detail: String| item(items, format!("{name}: {what}"), ok, detail);
    match name {
        "bell.json" => {
            expect(
                "entangled",
                !verdict.separable,
                format!("q_sum {}", num(verdict.q_sum)),
            );
            expect(
                "E_total = 1/4",
                (e - 0.25).abs() <= 1e-12,
                format!("E_total {}", num(e)),
            );
            let dev = spectrum_deviation(&spec.eigenvalues, &[0.5, 0.5, 0.5, -0.5]);
            expect(
                "sigma spectrum",
                dev <= 1e-10,
                format!("deviation {}", num(dev)),
            );
            let chsh = chsh_max_closed(c)?;
            expect(
                "CHSH maximum 2*sqrt(2)",
                (chsh - 2.0 * std::f64::consts::SQRT_2).abs() <= 1e-12,
                format!("closed form {}", num(chsh)),
            );
        }
        "product_2x2.json" | "product_3x3.json" => {
            expect(
                "separable",
                verdict.separable,
                format!("q_sum {}", num(verdict.q_sum)),
            );
            expect("E_total = 0", e <= tol, format!("E_total {}", num(e)));
            let f = factorize(c, tol)?;
            expect(
                "factorization",
                f.residual <= 1e-12,
                format!("residual {}", num(f.residual)),
            );
            let mut want = vec![0.0; spec.eigenvalues.len()];
            want[0] = 1.0;
            let dev = spectrum_deviation(&spec.eigenvalues, &want);
            expect(
                "sigma spectrum (1, 0, ...)",
                dev <= 1e-10,
                format!("deviation {}", num(dev)),
            );
        }
        "maxent_3x3.json" => {
            expect(
                "entangled",
                !verdict.separable,
                format!("q_sum {}", num(verdict.q_sum)),
            );
            let check = maxent_check(c, 1e-10)?;
            expect(
                "maximally entangled",
                check.is_max,
                format!("residual {}", num(check.residual)),
            );
            expect(
                "E_total = 1/3",
                (e - 1.0 / 3.0).abs() <= 1e-10,
                format!("E_total {}", num(e)),
            );
        }
        "zero_column_3x3.json" => {
            let r = reduce(c, tol)?;
            expect(
                "reduces to 3x2 without zeros",
                r.matrix.rows() == 3 && r.matrix.cols() == 2 && zero_flag(&r.matrix, tol) == 0,
                format!("reduced {}x{}", r.matrix.rows(), r.matrix.cols()),
            );
            expect(
                "entangled",
                !verdict.separable,
                format!("q_sum {}", num(verdict.q_sum)),
            );
        }
        _ => {}
    }
    Ok(())
}

pub fn verify(args: &VerifyArgs) -> Result<u8, Error> {
    let mut stages = Stages::new(args.output.timings);
    let mut items = Vec::new();

    stages.run("golden", || -> Result<(), Error> {
        for (name, text) in GOLDEN {
            let c = parse_state(text.as_bytes(), StateFormat::Json)?;
            golden_checks(&mut items, name, &c, args.tol, args.ppt_tol)?;
            standard_checks(&mut items, name, &c, args.tol, args.ppt_tol)?;
        }
        Ok(())
    })?;

    if let Some(dir) = &args.corpus {
        stages.run("corpus", || -> Result<(), Error> {
            let mut paths: Vec<_> = std::fs::read_dir(dir)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", dir.display())))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            for path in paths {
                let bytes = std::fs::read(&path)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                let c = normalize(&parse_state(&bytes, StateFormat::detect(&bytes))?)?;
                standard_checks(
                    &mut items,
                    &path.display().to_string(),
                    &c,
                    args.tol,
                    args.ppt_tol,
                )?;
            }
            Ok(())
        })?;
    }

    let mut checks = Checks::default();
    stages.run("random", || -> Result<(), Error> {
        for k in 0..args.count {
            let (n, m) = (2 + k % 4, 2 + (k / 4) % 4);
            let seed = state_seed(args.seed, k);
            let c = if k % 2 == 0 {
                random_state(n, m, seed)?
            } else {
                random_product_state(n, m, seed)?
            };
            let four = FourWay::compute(&c, args.tol, args.ppt_tol)?;
            checks.record(
                "four_way_disagreement",
                f64::from(u8::from(!four.agree())),
                0.0,
            );
            if let Some(cf) = closed_form_values(&c, 1e-12) {
                let dev = spectrum_deviation(
                    &ppt_spectrum(&c, Side::A, args.ppt_tol)?.eigenvalues,
                    &cf?.values,
                );
                checks.record("closed_form_spectrum", dev, 1e-8);
            }
            let e = e_total(&c).total;
            checks.record(
                "e_total_vs_gram_relative",
                relative(e, e_total_gram(&c), c.norm2().powi(2)),
                1e-10,
            );
        }
        Ok(())
    })?;

    let random_checks = checks.0;
    let pass = items.iter().all(|i| i.pass) && random_checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        items,
        random_states: args.count,
        random_checks,
        pass,
        timings_ms: stages.finish(),
    };
    emit(args.output.format, &report, |r| {
        let mut out = String::new();
        for i in &r.items {
            let tag = if i.pass { "ok  " } else { "FAIL" };
            writeln!(out, "{tag} {} ({})", i.name, i.detail).unwrap();
        }
        writeln!(out, "random batch: {} states", r.random_states).unwrap();
        checks_text(&mut out, &r.random_checks);
        writeln!(out, "result: {}", if r.pass { "pass" } else { "FAIL" }).unwrap();
        if let Some(t) = &r.timings_ms {
            writeln!(
                out,
                "timings (ms): {}",
                t.iter()
                    .map(|(k, v)| format!("{k} {}", num(*v)))
                    .collect::<Vec<_>>()
                    .join(", ")
            )
            .unwrap();
        }
        out
    })?;
    Ok(if pass { 0 } else { 1 })
}
