//! One PASS/FAIL line per acceptance criterion. Failing criteria are reported,
//! not hidden; set `ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

mod common;

use std::time::{Duration, Instant};

use common::{brute_minima, near_hits, tube_oracle, CurveInstance};
use dioph_core::arcs::*;
use dioph_core::counting::*;
use dioph_core::flow::*;
use dioph_core::lattice::*;
use dioph_core::theory::*;
use dioph_core::{AxisBox, ManifoldChart};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn identities() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (i, &(eps, t, n, d)) in [(0.5, 3.0, 3, 1), (0.1, 8.0, 2, 1), (0.7, 2.0, 4, 2)].iter().enumerate() {
        let r = check_conjugations(&FlowParams::new(eps, t, n, d).unwrap(), 1000, i as u64);
        worst = [worst, r.g_on_u, r.g_on_z, r.b_on_u, r.b_on_z, r.det_g, r.det_b]
            .into_iter()
            .fold(0.0, f64::max);
    }
    let charts = [
        ManifoldChart::veronese(3).unwrap(),
        ManifoldChart::mixed(2, 4).unwrap(),
        ManifoldChart::circle(1.0, 0.1).unwrap(),
    ];
    for chart in &charts {
        let dom = chart.domain().clone();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..chart.d()).map(|j| rng.random_range(dom.lo(j)..dom.hi(j))).collect();
            let product = assemble_zu(chart, &x).unwrap().zu;
            worst = worst.max(max_rel_err(&zu_closed_form(chart, &x).unwrap(), &product));
            let dual = dual_element(&product).unwrap();
            worst = worst.max(max_rel_err(&zu_dual_closed_form(chart, &x).unwrap(), &dual));
        }
    }
    let el = start.elapsed();
    outcome(
        worst <= 1e-10 && el < Duration::from_secs(10),
        format!("max relative error {worst:.2e}, {:.2}s", el.as_secs_f64()),
    )
}

fn geometry() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut minima_bad = 0;
    for i in 0..200 {
        let b = random_unimodular_basis(3 + i % 2, &mut rng, 20.0);
        let got = successive_minima(&b).unwrap().values;
        let want = brute_minima(&b);
        if got.len() != want.len() || got.iter().zip(&want).any(|(g, w)| (g - w).abs() > 1e-9 * w) {
            minima_bad += 1;
        }
    }
    let mut mahler_bad = 0;
    let mut polar_bad = 0;
    for i in 0..500 {
        let k = 2 + i % 4;
        let b = random_unimodular_basis(k, &mut rng, 50.0);
        if mahler_gap(&b).unwrap().iter().any(|&v| v < 1.0 - 1e-9 || v > mahler_upper(k)) {
            mahler_bad += 1;
        }
        if !b.same_lattice(&polar_basis(&polar_basis(&b).unwrap()).unwrap(), 1e-8) {
            polar_bad += 1;
        }
    }
    let el = start.elapsed();
    outcome(
        minima_bad + mahler_bad + polar_bad == 0 && el < Duration::from_secs(120),
        format!(
            "minima mismatches {minima_bad}/200, Mahler out of range {mahler_bad}/500, polar failures {polar_bad}/500, {:.1}s",
            el.as_secs_f64()
        ),
    )
}

fn chain() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for n in [2, 3] {
        let chart = ManifoldChart::veronese(n).unwrap();
        for (p, q, x, eps, t) in near_hits(&chart, &mut rng, 50) {
            let fp = FlowParams::for_chart(&chart, eps, t).unwrap();
            let ratio = embedded_norm(&chart, &fp, &x, &p, q).unwrap() / (c1(&chart) * fp.phi);
            worst = worst.max(ratio);
            if ratio > 1.0 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("100 near-hits, {violations} violations, max ‖·‖/(c₁φ) = {worst:.3}"),
    )
}

fn counting() -> Outcome {
    let v2 = ManifoldChart::veronese(2).unwrap();
    let fixture = enumerate_tube(&v2, &AxisBox::interval(0.0, 1.0).unwrap(), 0.9, 0.1).unwrap();
    let pairs: Vec<(Vec<i64>, i64)> = fixture.witnesses.iter().map(|w| (w.p.clone(), w.q)).collect();
    let hand = vec![(vec![0, 0], 1), (vec![0, 1], 1), (vec![1, 0], 1), (vec![1, 1], 1)];
    let fixture_ok = pairs == hand && fixture.n_lo == 4 && fixture.n_hi == 4;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    let mut total = 0;
    for _ in 0..20 {
        let inst = CurveInstance::random(&mut rng);
        let got = enumerate_tube(&inst.chart(), &inst.delta(), inst.eps, inst.t).unwrap();
        let want = tube_oracle(&inst.polys, inst.a, inst.b, inst.eps, inst.t).len();
        total += want;
        if !(got.n_lo == want && want == got.n_hi) {
            bad += 1;
        }
    }
    outcome(
        fixture_ok && bad == 0,
        format!("fixture {pairs:?}; oracle mismatches {bad}/20 ({total} pairs in all)"),
    )
}

fn audit() -> Outcome {
    let start = Instant::now();
    let chart = ManifoldChart::veronese(3).unwrap();
    let b = AxisBox::interval(0.0, 1.0).unwrap();
    let mut violations = 0;
    let mut raw = 0;
    let mut mahler: f64 = 0.0;
    let mut regime = true;
    for eps in [0.1, 0.2, 0.4] {
        for t in [5.0, 6.0, 7.0] {
            let p = FlowParams::for_chart(&chart, eps, t).unwrap();
            let map = build_arc_map(&chart, &p, &b, p.enlargement_radius()).unwrap();
            let r = inclusion_audit(&chart, &p, &map).unwrap();
            violations += r.violations.len();
            raw += r.raw_points;
            mahler = mahler.max(r.max_mahler_ratio);
            regime &= r.regime_ok;
        }
    }
    let el = start.elapsed();
    outcome(
        violations == 0 && el < Duration::from_secs(600),
        format!(
            "9 configurations, {raw} raw-minor points, {violations} violations, max Mahler ratio {mahler:.3}, t ≥ ln c₃: {regime}, {:.2}s",
            el.as_secs_f64()
        ),
    )
}

fn major_bound() -> Outcome {
    let chart = ManifoldChart::veronese(2).unwrap();
    let b = AxisBox::interval(0.0, 1.0).unwrap();
    let mut ratios = Vec::new();
    for t in [2.0, 3.0, 4.0, 5.0] {
        let p = FlowParams::for_chart(&chart, 0.3, t).unwrap();
        let map = build_arc_map(&chart, &p, &b, p.enlargement_radius()).unwrap();
        ratios.push(count_split(&chart, &p, &b, &map).unwrap().ratio);
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[1] + sorted[2]);
    let within = ratios.iter().all(|&r| r >= median / 3.0 && r <= median * 3.0);
    outcome(
        within,
        format!("ratios at t = 2,3,4,5: {ratios:.4?}, median {median:.4}"),
    )
}

fn minor_decay() -> Outcome {
    let chart = ManifoldChart::veronese(3).unwrap();
    let b = AxisBox::interval(0.0, 1.0).unwrap();
    let alpha = decay_alpha(1, 3, 3);
    let mut his = Vec::new();
    let mut k: f64 = 0.0;
    for t in [4.0, 6.0, 8.0, 10.0] {
        let p = FlowParams::for_chart(&chart, (-t / 4.0f64).exp(), t).unwrap();
        let map = build_arc_map(&chart, &p, &b, p.enlargement_radius()).unwrap();
        let hi = estimate_minor_measure(&map).hi;
        k = k.max(decay_constant(hi, &p, alpha));
        his.push(hi);
    }
    let monotone = his[1..].windows(2).all(|w| w[1] <= w[0]);
    outcome(
        monotone && k.is_finite(),
        format!("hi-measure at t = 4,6,8,10: {his:.4?}, sup K = {k:.4}"),
    )
}

fn theory() -> Outcome {
    let s3 = spectrum_constants(3).unwrap();
    let d3 = (12121f64.sqrt() - 107.0) / 84.0;
    let mut ok = (s3.a, s3.b, s3.d) == (42.0, 107.0, 12121.0) && (s3.delta - d3).abs() < 1e-9;
    let mut lower = true;
    for n in 3..=12 {
        let s = spectrum_constants(n).unwrap();
        ok &= s.d == s.b * s.b + 4.0 * s.a * (n as f64 + 1.0);
        lower &= s.lower_bound_holds;
    }
    let w = exponent_window(3, 1, 3).unwrap();
    ok &= (w.tau_max - (1.0 + d3) / 3.0).abs() < 1e-9;
    let mut flips = true;
    for &tau in &[0.5, 1.0, 2.0] {
        for (n, d) in [(2, 1), (3, 1), (4, 2)] {
            let psi = PowerLogPsi::power(tau).unwrap();
            let dims = SeriesDims::new(n, d).unwrap();
            let s0 = (n as f64 + 1.0) / (tau + 1.0) - (n - d) as f64;
            flips &= classify_series(&psi, SeriesKind::Hausdorff { s: s0 }, dims) == Convergence::Diverges;
            flips &= classify_series(&psi, SeriesKind::Hausdorff { s: s0 + 1e-9 }, dims) == Convergence::Converges;
        }
    }
    let mut condensation = true;
    for &tau in &[0.0, 0.2, 1.0 / 3.0, 0.5, 1.0] {
        for &beta in &[0.0, 0.5, 1.0, 2.0] {
            if let Ok(psi) = PowerLogPsi::new(tau, 0.5, beta) {
                condensation &= condensation_equivalence(&psi, 3).unwrap();
            }
        }
    }
    outcome(
        ok && flips && condensation && lower,
        format!(
            "δ₃ = {:.9}, τ_max = {:.9}, Jarník flip {flips}, condensation {condensation}, lower bound {lower}, upper bound δ₃ < 1/33: {} (reported only), (n+1)/B₃ = {:.6}",
            s3.delta, w.tau_max, s3.upper_bound_holds, s3.valid_upper
        ),
    )
}

fn exponents() -> Outcome {
    let sqrt2 = lambda_exponent_estimate(2f64.sqrt(), 1, 10_000).unwrap().estimate;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let random: Vec<f64> = (0..20)
        .map(|_| lambda_exponent_estimate(rng.random_range(0.0..1.0), 2, 10_000).unwrap().estimate)
        .collect();
    let inside = random.iter().filter(|v| (0.4..=0.6).contains(*v)).count();
    let lv = lambda_exponent_estimate(liouville_constant(), 1, MAX_Q).unwrap();
    let ok = (0.95..=1.05).contains(&sqrt2) && inside == 20 && lv.estimate > 3.0;
    let lo = random.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = random.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    outcome(
        ok,
        format!(
            "√2: {sqrt2:.4}; random n=2: {inside}/20 in [0.4, 0.6] (range {lo:.3}..{hi:.3}); Liouville at Q = {MAX_Q}: {:.3}",
            lv.estimate
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("identity suite", identities),
        ("geometry of numbers", geometry),
        ("near-hit chain", chain),
        ("counting fixture and oracle", counting),
        ("inclusion audit", audit),
        ("major-arc ratio", major_bound),
        ("minor-measure decay", minor_decay),
        ("theory suite", theory),
        ("exponent estimator", exponents),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of 9 criteria pass", 9 - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
