use dioph_core::arcs::*;
use dioph_core::flow::FlowParams;
use dioph_core::{AxisBox, ManifoldChart};

#[test]
fn audit_is_clean_on_veronese_cubic() {
    let c = ManifoldChart::veronese(3).unwrap();
    let b = AxisBox::interval(0.0, 1.0).unwrap();
    for &(eps, t) in &[(0.1, 5.0), (0.4, 7.0)] {
        let p = FlowParams::for_chart(&c, eps, t).unwrap();
        let map = build_arc_map(&c, &p, &b, p.enlargement_radius()).unwrap();
        let r = inclusion_audit(&c, &p, &map).unwrap();
        assert!(r.clean(), "{:?}", r.violations);
        assert_eq!(r.raw_points, map.count(ArcLabel::RawMinor));
        assert!(r.max_mahler_ratio <= 1.0);
    }
}

#[test]
fn labels_partition_the_grid() {
    let c = ManifoldChart::veronese(2).unwrap();
    let b = AxisBox::interval(-1.0, 1.0).unwrap();
    let p = FlowParams::for_chart(&c, 0.3, 4.0).unwrap();
    let map = build_arc_map(&c, &p, &b, p.enlargement_radius() / 2.0).unwrap();
    let total = map.count(ArcLabel::RawMinor) + map.count(ArcLabel::EnlargedMinor) + map.count(ArcLabel::Major);
    assert_eq!(total, map.cells.len());
    assert!(map.multiplicity <= map.multiplicity_bound());
    for cell in &map.cells {
        match cell.label {
            ArcLabel::RawMinor => assert!(cell.lambda_top > cell.threshold * (1.0 - 1e-9)),
            ArcLabel::EnlargedMinor => assert!(cell.nearest_raw.unwrap() < map.radius),
            ArcLabel::Major => assert!(cell.nearest_raw.is_none_or(|r| r >= map.radius)),
        }
    }
    let m = estimate_minor_measure(&map);
    assert!(0.0 <= m.lo && m.lo <= m.hi && m.hi <= b.volume() + 1e-12);
}

#[test]
fn minor_measure_decays_along_the_coupled_schedule() {
    let c = ManifoldChart::veronese(3).unwrap();
    let b = AxisBox::interval(0.0, 1.0).unwrap();
    let alpha = decay_alpha(1, 3, 3);
    let mut his = Vec::new();
    let mut k: f64 = 0.0;
    for t in [6.0, 8.0, 10.0] {
        let p = FlowParams::for_chart(&c, (-t / 4.0f64).exp(), t).unwrap();
        let map = build_arc_map(&c, &p, &b, p.enlargement_radius()).unwrap();
        let m = estimate_minor_measure(&map);
        k = k.max(decay_constant(m.hi, &p, alpha));
        his.push(m.hi);
    }
    assert!(his.windows(2).all(|w| w[1] <= w[0]), "{his:?}");
    assert!(k.is_finite() && k < 1.0);
}

#[test]
fn classification_is_monotone_in_eps_at_origin() {
    let c = ManifoldChart::veronese(3).unwrap();
    let mut was_major = false;
    for k in 1..20 {
        let eps = k as f64 / 20.0;
        let p = FlowParams::for_chart(&c, eps, 3.0).unwrap();
        let major = classify_point(&c, &p, &[0.0]).unwrap().label == ArcLabel::Major;
        assert!(!was_major || major, "ε = {eps}");
        was_major |= major;
    }
}
