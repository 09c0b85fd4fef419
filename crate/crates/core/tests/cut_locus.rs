use finsler_cut::analysis::{level_sets, structure_report};
use finsler_cut::cutlocus::{classify, cut_locus, intrinsic_distance, GraphJson, NodeKind};
use finsler_cut::distance::{distance, ClosedSet, DistanceField, FieldOptions, Primitive};
use finsler_cut::{ChartPoint, Domain, Manifold, MetricSpec};
use proptest::prelude::*;

fn field(domain: Domain, ps: &[(f64, f64)], h: f64) -> DistanceField {
    let m = Manifold::new(MetricSpec::euclidean(), domain).unwrap();
    let set =
        ClosedSet::new(ps.iter().map(|&(x, y)| Primitive::Point { at: ChartPoint::new(x, y) }).collect(), h / 2.0)
            .unwrap();
    DistanceField::compute(&m, &set, h, FieldOptions::default()).unwrap()
}

#[test]
fn torus_cross() {
    let f = field(Domain::torus((0.0, 0.0), (1.0, 1.0)), &[(0.0, 0.0)], 1.0 / 64.0);
    let g = cut_locus(&f).unwrap();
    let branch: Vec<_> = g.nodes.iter().filter(|n| n.point.kind == NodeKind::Branch).collect();
    assert_eq!(branch.len(), 1);
    assert_eq!(branch[0].point.multiplicity, 4);
    assert_eq!(branch[0].degree, 4);
    assert_eq!(g.edges.len(), 2);
    for s in &branch[0].point.sectors {
        assert!(s.mu.abs() < 1e-6);
    }
    let d = intrinsic_distance(&g, ChartPoint::new(0.5, 0.0), ChartPoint::new(0.0, 0.5)).unwrap();
    assert!((d - 1.0).abs() < 0.02, "{d}");
    let c = classify(&g);
    assert_eq!(c.branches.len(), 1);
    assert_eq!(c.branches[0].n, 1);
}

#[test]
fn circle_centre_is_isolated_continuum_node() {
    let m = Manifold::new(MetricSpec::euclidean(), Domain::plane((-1.5, -1.5), (1.5, 1.5))).unwrap();
    let set =
        ClosedSet::new(vec![Primitive::Circle { center: ChartPoint::new(0.0, 0.0), radius: 1.0 }], 1.0 / 64.0).unwrap();
    let f = DistanceField::compute(&m, &set, 1.0 / 32.0, FieldOptions::default()).unwrap();
    let g = cut_locus(&f).unwrap();
    assert_eq!(g.nodes.len(), 1);
    assert!(g.nodes[0].point.continuum);
    assert!(g.nodes[0].point.pos.x.hypot(g.nodes[0].point.pos.y) < 1.0 / 16.0);
    assert!(level_sets(&f, 0.999).is_ok());
}

#[test]
fn graph_json_round_trip() {
    let f = field(Domain::plane((-2.0, -2.0), (2.0, 2.0)), &[(-1.0, 0.0), (1.0, 0.0), (0.2, 1.1)], 1.0 / 16.0);
    let g = cut_locus(&f).unwrap();
    let json = GraphJson::from(&g).to_json();
    let back: GraphJson = serde_json::from_str(&json).unwrap();
    assert_eq!(back, GraphJson::from(&g));
    assert_eq!(back.nodes.iter().filter(|n| n.kind == NodeKind::Branch).count(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn random_point_sets_give_local_trees(ps in proptest::collection::vec((-1.2f64..1.2, -1.2f64..1.2), 2..5), seed in 0u64..1000) {
        for (k, a) in ps.iter().enumerate() {
            for b in &ps[k + 1..] {
                prop_assume!((a.0 - b.0).hypot(a.1 - b.1) > 0.4);
            }
        }
        let f = field(Domain::plane((-2.0, -2.0), (2.0, 2.0)), &ps, 1.0 / 16.0);
        let g = cut_locus(&f).unwrap();
        let r = structure_report(&g, &f, seed, 8.0).unwrap();
        prop_assert!(r.check("local_tree_balls").unwrap().passed(), "{}", r.to_text());
        prop_assert!(r.check("delta_at_least_d").unwrap().passed(), "{}", r.to_text());
        prop_assert!(r.check("cut_points_avoid_n").unwrap().passed(), "{}", r.to_text());
    }

    #[test]
    fn delta_dominates_distance_on_bisector(y0 in -1.8f64..1.8, y1 in -1.8f64..1.8) {
        let f = field(Domain::plane((-2.0, -2.0), (2.0, 2.0)), &[(-1.0, 0.0), (1.0, 0.0)], 1.0 / 16.0);
        let g = cut_locus(&f).unwrap();
        let (a, b) = (ChartPoint::new(0.0, y0), ChartPoint::new(0.0, y1));
        let delta = intrinsic_distance(&g, a, b).unwrap();
        let d = distance(f.manifold(), a, b).unwrap();
        prop_assert!((delta - d).abs() < 1e-9);
    }
}
