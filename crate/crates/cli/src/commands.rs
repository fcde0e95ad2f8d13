use dioph_core::arcs::{
    build_arc_map, decay_alpha, decay_constant, estimate_minor_measure, inclusion_audit, ArcLabel,
};
use dioph_core::counting::{count_split, Membership};
use dioph_core::flow::{
    assemble_zu, check_conjugations, max_rel_err, zu_dual_closed_form, ConjugationReport, FlowParams,
};
use dioph_core::lattice::{dual_element, mahler_gap, mahler_upper, random_unimodular_basis};
use dioph_core::theory::{
    classify_series, classify_series_heuristic, condensation_equivalence, exponent_window,
    lambda_exponent_estimate, Convergence, Heuristic, PowerLogPsi, SeriesDims, SeriesKind, SpectrumConstants,
};
use dioph_core::ManifoldChart;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{parse_real, EpsSchedule, ExperimentConfig};
use crate::report::{emit, join, Table, SCHEMA_VERSION};
use crate::Failure;

#[derive(Serialize)]
struct Header<'a> {
    schema_version: u32,
    command: &'a str,
}

fn header(command: &str) -> Header<'_> {
    Header {
        schema_version: SCHEMA_VERSION,
        command,
    }
}

fn spacing(cfg: &ExperimentConfig, p: &FlowParams) -> Result<f64, Failure> {
    let div = cfg.spacing_div.unwrap_or(1.0);
    if !(div >= 1.0) {
        return Err(Failure::config("spacing_div must be at least 1"));
    }
    Ok(p.enlargement_radius() / div)
}

#[derive(Serialize)]
struct CountRun {
    t: f64,
    eps: f64,
    n_lo: usize,
    n_hi: usize,
    n_major_lo: usize,
    n_major_hi: usize,
    main_term: f64,
    ratio: f64,
    uncertain_fraction: f64,
}

#[derive(Serialize)]
struct CountSummary<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    chart: String,
    #[serde(rename = "box")]
    bbox: Vec<[f64; 2]>,
    eps: EpsSchedule,
    runs: Vec<CountRun>,
}

pub fn count(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let chart = cfg.chart()?;
    let bbox = cfg.bbox(&chart)?;
    let eps = cfg.eps()?;
    let mut runs = Vec::new();
    let mut table = Table::new(
        "count",
        "one row per in-or-uncertain witness; p is ';'-joined",
        vec!["t", "eps", "q", "p", "status", "dist_lo", "dist_hi", "attribution"],
    );
    for t in cfg.times()? {
        let p = FlowParams::for_chart(&chart, eps.at(t), t)?;
        let map = build_arc_map(&chart, &p, &bbox, spacing(cfg, &p)?)?;
        let r = count_split(&chart, &p, &bbox, &map)?;
        if r.n_lo > r.n_hi || r.n_major_lo > r.n_major_hi || r.n_major_hi > r.n_hi {
            return Err(Failure::violation(format!("inconsistent counts at t = {t}")));
        }
        for (w, a) in r.witnesses.iter().zip(&r.attribution) {
            table.rows.push(vec![
                t.to_string(),
                p.eps.to_string(),
                w.q.to_string(),
                join(&w.p),
                match w.status {
                    Membership::In => "in",
                    Membership::Uncertain => "uncertain",
                }
                .into(),
                w.dist_lo.to_string(),
                w.dist_hi.to_string(),
                a.as_str().into(),
            ]);
        }
        runs.push(CountRun {
            t,
            eps: p.eps,
            n_lo: r.n_lo,
            n_hi: r.n_hi,
            n_major_lo: r.n_major_lo,
            n_major_hi: r.n_major_hi,
            main_term: r.main_term,
            ratio: r.ratio,
            uncertain_fraction: r.uncertain_fraction,
        });
    }
    let summary = CountSummary {
        header: header("count"),
        chart: chart.label().to_string(),
        bbox: bbox.bounds().to_vec(),
        eps,
        runs,
    };
    emit("count", &summary, &[table], cfg.out_dir.as_deref())
}

#[derive(Serialize)]
struct AuditSummary {
    raw_points: usize,
    enlarged_points: usize,
    violations: usize,
    max_mahler_ratio: f64,
    system_searches: usize,
    bkm_searches: usize,
    t0: f64,
    regime_ok: bool,
}

#[derive(Serialize)]
struct ArcsRun {
    t: f64,
    eps: f64,
    spacing: f64,
    cells: usize,
    raw_minor: usize,
    enlarged_minor: usize,
    major: usize,
    multiplicity: usize,
    multiplicity_bound: usize,
    measure_lo: f64,
    measure_hi: f64,
    decay_constant: Option<f64>,
    audit: Option<AuditSummary>,
}

#[derive(Serialize)]
struct ArcsSummary<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    chart: String,
    #[serde(rename = "box")]
    bbox: Vec<[f64; 2]>,
    eps: EpsSchedule,
    alpha: Option<f64>,
    /// Largest `decay_constant` over the runs.
    fitted_constant: Option<f64>,
    runs: Vec<ArcsRun>,
}

pub fn arcs(cfg: &ExperimentConfig, audit: bool) -> Result<(), Failure> {
    let chart = cfg.chart()?;
    let bbox = cfg.bbox(&chart)?;
    let eps = cfg.eps()?;
    let alpha = chart.nondeg_order().map(|l| decay_alpha(chart.d(), l, chart.n()));
    let mut table = Table::new(
        "arcs",
        "one row per grid cell; center is ';'-joined",
        vec!["t", "eps", "cell", "center", "label", "lambda_top", "threshold"],
    );
    let mut runs = Vec::new();
    let mut violations = Vec::new();
    for t in cfg.times()? {
        let p = FlowParams::for_chart(&chart, eps.at(t), t)?;
        let sp = spacing(cfg, &p)?;
        let map = build_arc_map(&chart, &p, &bbox, sp)?;
        for (i, c) in map.cells.iter().enumerate() {
            table.rows.push(vec![
                t.to_string(),
                p.eps.to_string(),
                i.to_string(),
                join(&c.center),
                c.label.as_str().into(),
                c.lambda_top.to_string(),
                c.threshold.to_string(),
            ]);
        }
        let m = estimate_minor_measure(&map);
        let audit = if audit {
            let r = inclusion_audit(&chart, &p, &map)?;
            for v in &r.violations {
                violations.push(format!("t = {t}, x = {:?}: {} ({})", v.x, v.step, v.detail));
            }
            Some(AuditSummary {
                raw_points: r.raw_points,
                enlarged_points: r.enlarged_points,
                violations: r.violations.len(),
                max_mahler_ratio: r.max_mahler_ratio,
                system_searches: r.system_searches,
                bkm_searches: r.bkm_searches,
                t0: r.t0,
                regime_ok: r.regime_ok,
            })
        } else {
            None
        };
        runs.push(ArcsRun {
            t,
            eps: p.eps,
            spacing: sp,
            cells: map.cells.len(),
            raw_minor: map.count(ArcLabel::RawMinor),
            enlarged_minor: map.count(ArcLabel::EnlargedMinor),
            major: map.count(ArcLabel::Major),
            multiplicity: map.multiplicity,
            multiplicity_bound: map.multiplicity_bound(),
            measure_lo: m.lo,
            measure_hi: m.hi,
            decay_constant: alpha.map(|a| decay_constant(m.hi, &p, a)),
            audit,
        });
    }
    let fitted_constant = runs
        .iter()
        .filter_map(|r| r.decay_constant)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let summary = ArcsSummary {
        header: header("arcs"),
        chart: chart.label().to_string(),
        bbox: bbox.bounds().to_vec(),
        eps,
        alpha,
        fitted_constant,
        runs,
    };
    emit("arcs", &summary, &[table], cfg.out_dir.as_deref())?;
    if !violations.is_empty() {
        return Err(Failure::violation(format!(
            "{} audit violation(s); first: {}",
            violations.len(),
            violations[0]
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct IdentitySummary<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    n: usize,
    d: usize,
    eps: f64,
    t: f64,
    samples: usize,
    seed: u64,
    conjugations: ConjugationReport,
    /// Smallest and largest `λ_i λ*_{k+1−i}` over the random bases.
    mahler_range: [f64; 2],
    mahler_upper: f64,
    /// `max |(gh)* − g* h*|` over random pairs.
    dual_multiplicative: f64,
    /// `max rel err` of the closed-form `zu*` against `(zu)*`.
    dual_closed_form: f64,
    pass: bool,
}

pub fn identities(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let n = cfg.n.unwrap_or(3);
    let d = cfg.d.unwrap_or(1);
    let t = cfg.t.as_ref().and_then(|v| v.first().copied()).unwrap_or(3.0);
    let eps = cfg.eps.unwrap_or(EpsSchedule::Fixed(0.5)).at(t);
    let samples = cfg.samples.unwrap_or(100);
    let seed = cfg.seed.unwrap_or(0);
    let p = FlowParams::new(eps, t, n, d)?;
    let chart = if d == 1 {
        ManifoldChart::veronese(n)?
    } else {
        ManifoldChart::mixed(d, n)?
    };
    let conj = check_conjugations(&p, samples, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = n + 1;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut mult: f64 = 0.0;
    let mut closed: f64 = 0.0;
    for _ in 0..samples {
        let b = random_unimodular_basis(k, &mut rng, 50.0);
        for v in mahler_gap(&b)? {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let c = random_unimodular_basis(k, &mut rng, 50.0);
        let lhs = dual_element(&(b.cols() * c.cols()))?;
        let rhs = dual_element(b.cols())? * dual_element(c.cols())?;
        mult = mult.max((lhs - rhs).abs().max());
        let dom = chart.domain();
        let x: Vec<f64> = (0..d).map(|j| rng.random_range(dom.lo(j)..dom.hi(j))).collect();
        let zu = assemble_zu(&chart, &x)?.zu;
        closed = closed.max(max_rel_err(&zu_dual_closed_form(&chart, &x)?, &dual_element(&zu)?));
    }
    let upper = mahler_upper(k);
    let pass = conj.pass
        && (samples == 0 || (lo >= 1.0 - 1e-9 && hi <= upper))
        && mult <= 1e-8
        && closed <= conj.tolerance;
    let summary = IdentitySummary {
        header: header("identities"),
        n,
        d,
        eps,
        t,
        samples,
        seed,
        conjugations: conj,
        mahler_range: if samples == 0 { [1.0, 1.0] } else { [lo, hi] },
        mahler_upper: upper,
        dual_multiplicative: mult,
        dual_closed_form: closed,
        pass,
    };
    emit("identities", &summary, &[], cfg.out_dir.as_deref())?;
    if !pass {
        return Err(Failure::violation("identity check failed"));
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumSummary<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    n: usize,
    d: usize,
    l: usize,
    alpha: f64,
    tau_max: f64,
    tau_bisect: f64,
    delta_n: Option<f64>,
    spectrum_interval: Option<[f64; 2]>,
    constants: Option<SpectrumConstants>,
}

fn smallest_order(d: usize, n: usize) -> usize {
    // C(d+l, d) − 1 ≥ n
    let mut l = 1;
    loop {
        let mut c: u128 = 1;
        for i in 0..d {
            c = c * (l + d - i) as u128 / (i + 1) as u128;
        }
        if c > n as u128 {
            return l;
        }
        l += 1;
    }
}

pub fn spectrum(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let n = cfg.n.unwrap_or(3);
    let d = cfg.d.unwrap_or(1);
    let l = cfg.l.unwrap_or_else(|| smallest_order(d, n));
    let w = exponent_window(n, d, l)?;
    let summary = SpectrumSummary {
        header: header("spectrum"),
        n,
        d,
        l,
        alpha: w.alpha,
        tau_max: w.tau_max,
        tau_bisect: w.tau_bisect,
        delta_n: w.spectrum.map(|s| s.delta),
        spectrum_interval: w.spectrum.map(|s| s.spectrum_interval),
        constants: w.spectrum,
    };
    emit("spectrum", &summary, &[], cfg.out_dir.as_deref())?;
    if !w.in_range {
        return Err(Failure::violation(format!("τ_max = {} left [1/n, 1/(n−1))", w.tau_max)));
    }
    Ok(())
}

#[derive(Serialize)]
struct SeriesSummary<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    psi: PowerLogPsi,
    n: usize,
    d: usize,
    kind: SeriesKind,
    classification: Convergence,
    /// Partial-sum reading; not rigorous.
    heuristic: Heuristic,
    condensation_equivalence: bool,
}

pub fn series(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let tau = cfg.tau.ok_or_else(|| Failure::config("series needs --tau"))?;
    let psi = PowerLogPsi::new(tau, cfg.c.unwrap_or(0.5), cfg.beta.unwrap_or(0.0))?;
    let n = cfg.n.unwrap_or(2);
    let d = cfg.d.unwrap_or(1);
    let dims = SeriesDims::new(n, d)?;
    let need_s = || cfg.s.ok_or_else(|| Failure::config("this series needs --s"));
    let kind = match cfg.kind.as_deref().unwrap_or("khintchine") {
        "khintchine" => SeriesKind::Khintchine,
        "hausdorff" => SeriesKind::Hausdorff { s: need_s()? },
        "minor" => SeriesKind::Minor {
            s: need_s()?,
            alpha: cfg.alpha.ok_or_else(|| Failure::config("minor series needs --alpha"))?,
        },
        other => return Err(Failure::config(format!("unknown series kind {other:?}"))),
    };
    let summary = SeriesSummary {
        header: header("series"),
        psi,
        n,
        d,
        kind,
        classification: classify_series(&psi, kind, dims),
        heuristic: classify_series_heuristic(|q| psi.eval(q.max(psi.q0)), kind, dims),
        condensation_equivalence: condensation_equivalence(&psi, n)?,
    };
    emit("series", &summary, &[], cfg.out_dir.as_deref())?;
    if !summary.condensation_equivalence {
        return Err(Failure::violation("condensed series classified differently"));
    }
    Ok(())
}

#[derive(Serialize)]
struct ExponentSummary<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    x: f64,
    n: usize,
    q_max: u64,
    estimate: f64,
    last_ratio: f64,
    records: usize,
}

pub fn exponent(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let x = parse_real(cfg.x.as_deref().ok_or_else(|| Failure::config("exponent needs --x"))?)?;
    let n = cfg.n.unwrap_or(1);
    let q_max = cfg.q_max.unwrap_or(10_000);
    let r = lambda_exponent_estimate(x, n, q_max)?;
    let mut table = Table::new(
        "exponent",
        "record lows of max_i ‖q x^i‖ for q ≤ Q",
        vec!["q", "norm"],
    );
    for (q, v) in &r.records {
        table.rows.push(vec![q.to_string(), v.to_string()]);
    }
    let summary = ExponentSummary {
        header: header("exponent"),
        x,
        n,
        q_max,
        estimate: r.estimate,
        last_ratio: r.last_ratio,
        records: r.records.len(),
    };
    emit("exponent", &summary, &[table], cfg.out_dir.as_deref())
}
