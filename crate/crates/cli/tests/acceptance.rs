//! Acceptance run over the bundled scenarios: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use fcl::{bundled, bundled_scenarios, compute, Command, Products, Scenario};
use finsler_cut::analysis::{verify_jacobi, zermelo_check, Check};
use finsler_cut::cutlocus::intrinsic_distance;
use finsler_cut::distance::{reversibility, DistanceField};
use finsler_cut::{ChartPoint, Vec2};

struct Line {
    ok: bool,
    text: String,
}

fn line(ok: bool, text: impl Into<String>) -> Line {
    Line { ok, text: text.into() }
}

type Criterion = fn(&BTreeMap<&str, Run>) -> Line;

struct Run {
    scenario: Scenario,
    products: Products,
}

impl Run {
    fn check(&self, name: &str) -> Option<&Check> {
        self.products.report.check(name)
    }

    /// Residual of a named check against an explicit tolerance.
    fn within(&self, name: &str, tol: f64) -> (bool, String) {
        match self.check(name) {
            Some(c) => (c.residual <= tol, format!("{}: {:.3e} ({})", c.name, c.residual, c.detail)),
            None => (false, format!("{name}: missing")),
        }
    }

    fn h(&self) -> f64 {
        self.products.field.spacing()
    }
}

fn all_within(runs: &BTreeMap<&str, Run>, name: &str, tol: f64) -> (bool, Vec<String>) {
    let mut ok = true;
    let mut notes = Vec::new();
    for (s, r) in runs {
        let (pass, note) = r.within(name, tol);
        ok &= pass;
        if !pass {
            notes.push(format!("{s} {note}"));
        }
    }
    (ok, notes)
}

fn zermelo(runs: &BTreeMap<&str, Run>) -> Line {
    let s = &runs["randers-wind05-point"].scenario;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let start = Instant::now();
    let field = pool.install(|| -> Result<DistanceField, String> {
        let m = s.manifold().map_err(|e| e.to_string())?;
        let set = s.closed_set().map_err(|e| e.to_string())?;
        DistanceField::compute(&m, &set, s.grid.h, s.field_options()).map_err(|e| e.to_string())
    });
    let secs = start.elapsed().as_secs_f64();
    match field {
        Ok(f) => {
            let cells = (f.grid.nx - 1, f.grid.ny - 1);
            let c = zermelo_check(&f, &[ChartPoint::new(0.0, 0.0)], Vec2::new(0.5, 0.0), 1e-2);
            line(
                c.passed() && secs < 30.0 && cells == (256, 256),
                format!(
                    "zermelo distance: max rel err {:.3e} < 1e-2 on {}x{} cells, {secs:.2} s single-threaded",
                    c.residual, cells.0, cells.1
                ),
            )
        }
        Err(e) => line(false, format!("zermelo distance: {e}")),
    }
}

fn theorem_a(runs: &BTreeMap<&str, Run>) -> Line {
    let r = &runs["euclid-two-points"];
    let (a, na) = r.within("gradient_functional_match", 0.01);
    let (b, nb) = r.within("nondifferentiability_witness", 0.0);
    line(a && b, format!("differentiability: {na}; {nb}"))
}

fn geometry(runs: &BTreeMap<&str, Run>) -> Line {
    let two = &runs["euclid-two-points"];
    let (a, na) = two.within("hausdorff_to_line", 2.0 * two.h());
    let circle = &runs["euclid-circle"];
    let g = circle.products.graph.as_ref().expect("graph");
    let interior: Vec<_> = g.nodes.iter().filter(|n| !n.synthetic).collect();
    let b = interior.len() == 1
        && interior[0].point.continuum
        && interior[0].point.pos.x.hypot(interior[0].point.pos.y) < 2.0 * circle.h();
    let nb = format!(
        "circle: {} interior nodes, continuum {}, at distance {:.3e}",
        interior.len(),
        interior.first().is_some_and(|n| n.point.continuum),
        interior.first().map_or(f64::INFINITY, |n| n.point.pos.x.hypot(n.point.pos.y))
    );
    line(a && b, format!("cut locus geometry: {na}; {nb}"))
}

fn local_tree(runs: &BTreeMap<&str, Run>) -> Line {
    let (ok, notes) = all_within(runs, "local_tree_balls", 0.0);
    line(ok, format!("local tree: zero violations over 50 balls in {} scenarios {}", runs.len(), notes.join("; ")))
}

fn intrinsic(runs: &BTreeMap<&str, Run>) -> Line {
    let torus = &runs["torus-point"];
    let g = torus.products.graph.as_ref().expect("graph");
    let delta = intrinsic_distance(g, ChartPoint::new(0.5, 0.0), ChartPoint::new(0.0, 0.5)).unwrap_or(f64::NAN);
    let a = (delta - 1.0).abs() <= 0.02;
    let (b, notes) = all_within(runs, "delta_at_least_d", 0.0);
    let e26 = runs["example26"].products.graph.as_ref().expect("graph");
    let mut cross = 0;
    let mut finite = 0;
    for u in &e26.nodes {
        for v in &e26.nodes {
            if u.component != v.component {
                cross += 1;
                if intrinsic_distance(e26, u.point.pos, v.point.pos).map_or(true, f64::is_finite) {
                    finite += 1;
                }
            }
        }
    }
    let c = cross > 0 && finite == 0;
    line(
        a && b && c,
        format!(
            "intrinsic metric: torus delta = {delta:.5}; delta >= d - 2 field_tol on 500 pairs per scenario {}; {cross} cross-component pairs, {finite} finite",
            notes.join("; ")
        ),
    )
}

fn lengths(runs: &BTreeMap<&str, Run>) -> Line {
    let (a, na) = all_within(runs, "geodesic_count", 0.0);
    let (b, nb) = all_within(runs, "length_l_equals_L", 1e-3);
    let worst = runs.values().filter_map(|r| r.check("length_l_equals_L")).map(|c| c.residual).fold(0.0, f64::max);
    line(
        a && b,
        format!("l = L: 20 geodesics per scenario, max |l-L|/L {worst:.3e} < 1e-3 {} {}", na.join("; "), nb.join("; ")),
    )
}

fn levels(runs: &BTreeMap<&str, Run>) -> Line {
    let r = &runs["euclid-two-points"];
    let names = ["level_0.5_components", "level_1.5_components", "level_1_critical", "level_multiplicity_at_most_two"];
    let mut ok = true;
    let mut notes = Vec::new();
    for n in names {
        let (pass, note) = r.within(n, 0.0);
        ok &= pass;
        notes.push(note);
    }
    line(ok, format!("level sets: {}", notes.join("; ")))
}

fn example26(runs: &BTreeMap<&str, Run>) -> Line {
    let r = &runs["example26"];
    let (a, na) = r.within("notch_center_matches", 0.05);
    let (b, nb) = r.within("multiplicity_at_2_0", 0.0);
    line(a && b, format!("notched disc: {na}; {nb}"))
}

fn reversible(runs: &BTreeMap<&str, Run>) -> Line {
    let m = &runs["randers-wind05-point"].products.manifold;
    match reversibility(m, (ChartPoint::new(-2.0, -2.0), ChartPoint::new(2.0, 2.0)), 1000, 9) {
        Ok(l) => {
            line((2.9..=3.01).contains(&l), format!("reversibility: lambda = {l:.5} in [2.9, 3.01] over 1000 pairs"))
        }
        Err(e) => line(false, format!("reversibility: {e}")),
    }
}

fn jacobi(runs: &BTreeMap<&str, Run>) -> Line {
    let mut ok = true;
    let mut notes = Vec::new();
    for s in ["euclid-two-points", "randers-wind05-point"] {
        let m = &runs[s].products.manifold;
        match verify_jacobi(m, ChartPoint::new(0.0, 0.0), &[0.3, 1.2, 2.5, 4.0], 1.0, 0.2, (3.5, 4.5)) {
            Ok(c) => {
                ok &= c.passed();
                notes.push(format!("{s} {}", c.detail));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("{s} {e}"));
            }
        }
    }
    line(ok, format!("jacobi richardson ratios in [3.5, 4.5]: {}", notes.join("; ")))
}

fn main() -> ExitCode {
    let mut runs = BTreeMap::new();
    for name in bundled_scenarios() {
        let scenario = bundled(name).expect("bundled");
        match compute(&scenario, Command::Verify) {
            Ok(products) => {
                runs.insert(name, Run { scenario, products });
            }
            Err(e) => {
                println!("scenario {name} failed: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    let criteria: [Criterion; 10] =
        [zermelo, theorem_a, geometry, local_tree, intrinsic, lengths, levels, example26, reversible, jacobi];
    let mut failed = 0;
    for (k, c) in criteria.iter().enumerate() {
        let l = c(&runs);
        println!("criterion {:>2} {} {}", k + 1, if l.ok { "PASS" } else { "FAIL" }, l.text);
        failed += usize::from(!l.ok);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
