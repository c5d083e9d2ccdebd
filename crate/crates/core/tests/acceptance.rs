//! Acceptance suite: one pass/fail line per criterion.
//!
//! Run with `cargo test -p orderk --test acceptance`. Pass criterion numbers
//! as arguments to run a subset, e.g. `-- 4 6`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::time::Instant;

use orderk::angles::{
    brillouin_vertex_angles, degenerate_delaunay_min_angle, depth_tables, monotonicity_report, structure_angles, Structure,
};
use orderk::counterexample::{build_counterexample, verify_counterexample, CounterexampleParams};
use orderk::distributions::{
    empirical_density, h_second_derivative, integral, miles_density, self_consistency_l1, structure_histogram, fit_report,
    vertex_density_report, DensityKind, DEFAULT_BINS, THRESHOLD_FACTOR,
};
use orderk::events::enumerate_events;
use orderk::exactgeom::rat;
use orderk::pointsets::{
    finite_example_triangle_barycenter, integer_lattice, non_cocircular_lattice, poisson_torus,
    random_periodic, uniform_finite, WindowedSet,
};
use orderk::tilings::{
    all_aurenhammer_sites, all_iglesias_sites, brillouin_tessellation, check_orthogonal_dual, delaunay_mosaic,
    iglesias_mosaic, lifted_hull_oracle, voronoi_tessellation, Age,
};
use orderk::{EventSet, ExactPoint};

const SLACK: f64 = 1e-12;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ok_if(cond: bool, detail: String) -> Outcome {
    if cond { Ok(detail) } else { Err(detail) }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c01_monotonicity_generic() -> Outcome {
    let mut notes = Vec::new();
    let mut all = true;
    let sets: Vec<WindowedSet> = vec![non_cocircular_lattice(41, 1).map_err(err)?, random_periodic(50, 3, 1).map_err(err)?];
    for set in sets {
        let es = enumerate_events(&set, 29).map_err(err)?;
        let r = monotonicity_report(&es, 2..=30).map_err(err)?;
        let bad: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        all &= r.generic && r.passed() && r.checks.len() == 6;
        notes.push(format!("{}: generic={} {}/6 families hold{}", set.tag, r.generic, 6 - bad.len(), if bad.is_empty() { String::new() } else { format!(" (failing: {})", bad.join(", ")) }));
    }
    ok_if(all, notes.join("; "))
}

fn c02_monotonicity_lattice() -> Outcome {
    let es = enumerate_events(&integer_lattice(41).map_err(err)?, 29).map_err(err)?;
    let r = monotonicity_report(&es, 2..=30).map_err(err)?;
    let families = r.checks.iter().map(|c| format!("{}={}", c.name, c.passed)).collect::<Vec<_>>().join(", ");
    let d5 = degenerate_delaunay_min_angle(&es, 5).map_err(err)?;
    let d6 = degenerate_delaunay_min_angle(&es, 6).map_err(err)?;
    ok_if(
        r.passed() && r.checks.len() == 2 && d5 < d6,
        format!("{families}; min Del_5 angle {d5:.6} < min Del_6 angle {d6:.6}: {}", d5 < d6),
    )
}

fn c03_lattice_degrees() -> Outcome {
    let es = enumerate_events(&integer_lattice(41).map_err(err)?, 11).map_err(err)?;
    let c = ExactPoint::new(rat(1, 2), rat(1, 2));
    let find = |t: &orderk::tilings::Tiling| {
        t.vertex_info.iter().find(|v| {
            let e = &es.events[v.event.unwrap()];
            e.circle.center == c && e.circle.r2 == rat(5, 2)
        }).map(|v| v.degree)
    };
    let mut degs = Vec::new();
    let mut ok = true;
    for k in 1..=12 {
        let d = find(&voronoi_tessellation(&es, k).map_err(err)?);
        ok &= if (5..=11).contains(&k) { d == Some(8) } else { d.is_none() };
        degs.push(format!("{k}:{}", d.map_or("-".into(), |d| d.to_string())));
    }
    let b6 = find(&brillouin_tessellation(&es, 6).map_err(err)?);
    ok &= b6 == Some(16);
    ok_if(ok, format!("Vor_k degrees {}; Bri_6 degree {:?}", degs.join(" "), b6))
}

fn c04_finite_failure() -> Outcome {
    let es = enumerate_events(&finite_example_triangle_barycenter(), 1).map_err(err)?;
    let t = depth_tables(&es, 1).map_err(err)?;
    let (a0, a1) = (t.alpha(0).map_err(err)?, t.alpha(1).map_err(err)?);
    ok_if(
        a0 < a1 && (a0 - PI / 6.0).abs() < 1e-6 && (a1 - PI / 3.0).abs() < 1e-6,
        format!("alpha_0 = {a0:.9}, alpha_1 = {a1:.9}"),
    )
}

/// Periodic generators only: the tables of one fundamental cell then equal
/// the infima over the whole set.
fn c05_depth_tables() -> Outcome {
    let mut sets = Vec::new();
    for seed in 0..5 {
        sets.push(non_cocircular_lattice(21, seed).map_err(err)?);
        sets.push(random_periodic(12, 5, seed + 100).map_err(err)?);
        sets.push(random_periodic(40, 3, seed).map_err(err)?);
        sets.push(poisson_torus(100.0, 3, seed).map_err(err)?);
    }
    let mut checked = 0;
    let mut bad = Vec::new();
    for set in &sets {
        let es = enumerate_events(set, 12).map_err(err)?;
        let t = depth_tables(&es, 12).map_err(err)?;
        for l in 0..=12 {
            if let (Some(a), Some(b)) = (t.alpha[l], t.beta[l]) {
                checked += 1;
                if b < a - SLACK {
                    bad.push(format!("{} l={l}: beta {b} < alpha {a}", set.tag));
                }
            }
            if let (Some(a), Some(a1)) = (t.alpha[l], t.alpha.get(l + 1).copied().flatten()) {
                checked += 1;
                if a1 > a + SLACK {
                    bad.push(format!("{} l={l}: alpha rises {a} -> {a1}", set.tag));
                }
            }
        }
    }
    ok_if(bad.is_empty(), format!("{} sets, {checked} inequalities, {} violations {}", sets.len(), bad.len(), bad.join("; ")))
}

fn c06_duality() -> Outcome {
    let mut matched = 0;
    let mut viol = Vec::new();
    for seed in 0..5 {
        let es = enumerate_events(&random_periodic(15, 5, seed).map_err(err)?, 3).map_err(err)?;
        for k in 1..=3 {
            let pairs = [
                (delaunay_mosaic(&es, k).map_err(err)?, voronoi_tessellation(&es, k).map_err(err)?),
                (iglesias_mosaic(&es, k).map_err(err)?, brillouin_tessellation(&es, k).map_err(err)?),
            ];
            for (t, d) in &pairs {
                let r = check_orthogonal_dual(t, d);
                matched += r.matched;
                if !r.passed() || r.matched == 0 {
                    viol.push(format!("seed {seed} {}_{k}: {} violations", t.structure, r.violations.len()));
                }
            }
        }
    }
    ok_if(viol.is_empty(), format!("{matched} interior edges matched; {}", if viol.is_empty() { "no violations".into() } else { viol.join("; ") }))
}

fn c07_oracle() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for seed in [1, 2] {
        let set = uniform_finite(30, seed);
        let es = enumerate_events(&set, 2).map_err(err)?;
        for k in 1..=3 {
            let del = delaunay_mosaic(&es, k).map_err(err)?.canonical_tiles();
            let del_o = lifted_hull_oracle(&all_aurenhammer_sites(&set.points, k), Structure::Del, k).canonical_tiles();
            let igl = iglesias_mosaic(&es, k).map_err(err)?.canonical_tiles();
            let igl_o = lifted_hull_oracle(&all_iglesias_sites(&set.points, k), Structure::Igl, k).canonical_tiles();
            ok &= del == del_o && igl == igl_o;
            notes.push(format!("seed {seed} k={k}: del {}/{} igl {}/{}", del.intersection(&del_o).count(), del_o.len(), igl.intersection(&igl_o).count(), igl_o.len()));
        }
    }
    ok_if(ok, format!("tiles matching oracle: {}", notes.join(", ")))
}

fn c08_hexagons() -> Outcome {
    let mut hexes = 0;
    for seed in 0..3 {
        let es = enumerate_events(&random_periodic(15, 5, seed).map_err(err)?, 4).map_err(err)?;
        for k in 2..=5 {
            let igl = iglesias_mosaic(&es, k).map_err(err)?;
            for t in igl.tiles.iter().filter(|t| t.age == Some(Age::Mid)) {
                let v: Vec<&ExactPoint> = t.cycle.iter().map(|&i| &igl.vertices[i]).collect();
                if v.len() != 6 || v[0] + v[3] != v[1] + v[4] || v[1] + v[4] != v[2] + v[5] {
                    return Err(format!("mid tile not centrally symmetric at seed {seed} k={k}"));
                }
                hexes += 1;
            }
        }
    }
    // Three sites with nothing inside their circle.
    let abc = [ExactPoint::from_ints(0, 0), ExactPoint::from_ints(7, 1), ExactPoint::from_ints(2, 5)];
    let set = WindowedSet {
        points: abc.to_vec(),
        inner_window: orderk::Rect::from_ints(-10, -10, 10, 10),
        outer_window: orderk::Rect::from_ints(-10, -10, 10, 10),
        tag: "triangle".into(),
        seed: None,
        finite: true,
    };
    let es = enumerate_events(&set, 2).map_err(err)?;
    let corners = |k: usize| -> Result<HashSet<ExactPoint>, String> {
        let t = iglesias_mosaic(&es, k).map_err(err)?;
        Ok(t.vertices.into_iter().collect())
    };
    let third = rat(1, 3);
    let two = rat(2, 1);
    let s = &(&abc[0] + &abc[1]) + &abc[2];
    let tri: HashSet<ExactPoint> = abc.iter().cloned().collect();
    let hex: HashSet<ExactPoint> = [(0, 1), (1, 0), (1, 2), (2, 1), (2, 0), (0, 2)]
        .iter()
        .map(|&(x, y)| (&abc[x].scale(&two) + &abc[y]).scale(&third))
        .collect();
    let shrunk: HashSet<ExactPoint> = abc.iter().map(|z| (&s.scale(&two) - z).scale(&rat(1, 5))).collect();
    let fig = corners(1)? == tri && corners(2)? == hex && corners(3)? == shrunk;
    ok_if(fig, format!("{hexes} mid hexagons symmetric; l=0 triangle, trisection hexagon and -1/5 triangle: {fig}"))
}

fn vertex_sum_errors(es: &EventSet, ks: std::ops::RangeInclusive<usize>) -> Result<(usize, f64), String> {
    let mut n = 0;
    let mut worst: f64 = 0.0;
    for k in ks {
        for e in es.events.iter().filter(|e| e.depth_p < k && k <= e.depth_p + e.n() + 1) {
            let s: f64 = brillouin_vertex_angles(es, e, k).map_err(err)?.iter().map(|a| a.0).sum();
            worst = worst.max((s - 2.0 * PI).abs());
            n += 1;
        }
    }
    Ok((n, worst))
}

fn c09_vertex_sums() -> Outcome {
    let z2 = enumerate_events(&integer_lattice(21).map_err(err)?, 10).map_err(err)?;
    let (n1, w1) = vertex_sum_errors(&z2, 1..=10)?;
    let gen = enumerate_events(&random_periodic(20, 5, 4).map_err(err)?, 10).map_err(err)?;
    let (n2, w2) = vertex_sum_errors(&gen, 1..=10)?;
    ok_if(w1 < 1e-9 && w2 < 1e-9 && n1 > 0 && n2 > 0, format!("Z2: {n1} vertices, max error {w1:.2e}; generic: {n2} vertices, max error {w2:.2e}"))
}

fn c10_miles() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for kind in DensityKind::ALL {
        let i = integral(kind, 0.0, PI).map_err(err)?;
        ok &= (i - 1.0).abs() < 1e-9;
    }
    let grid: Vec<f64> = (1..1000).map(|i| PI * i as f64 / 1000.0).collect();
    let concave = grid.iter().all(|&t| h_second_derivative(t).unwrap() <= 1e-12);
    let h = |t| miles_density(DensityKind::MilesH, t).unwrap();
    let fd = grid.iter().map(|&t| ((h(t + 1e-4) - 2.0 * h(t) + h(t - 1e-4)) / 1e-8 - h_second_derivative(t).unwrap()).abs()).fold(0.0, f64::max);
    ok &= concave && fd < 1e-5;
    notes.push(format!("integrals=1, concave={concave}, fd error {fd:.1e}"));

    let es = enumerate_events(&poisson_torus(400.0, 3, 1).map_err(err)?, 29).map_err(err)?;
    for k in [2, 6, 15, 30] {
        for m in [Structure::Del, Structure::Vor, Structure::Bri] {
            let kind = DensityKind::for_structure(m);
            let hist = structure_histogram(&es, m, k, DEFAULT_BINS).map_err(err)?;
            let fit = fit_report(&hist, kind);
            let thr = THRESHOLD_FACTOR * self_consistency_l1(kind, fit.n as usize, DEFAULT_BINS, 20, 99).map_err(err)?;
            ok &= fit.l1 < thr;
            notes.push(format!("{m}_{k} L1 {:.4} < {:.4}: {}", fit.l1, thr, fit.l1 < thr));
        }
        // Diagnostic only: one angle per Delaunay triangle removes the
        // dependence among the three angles of a triangle.
        let mut seen = std::collections::HashMap::new();
        let thinned: Vec<f64> = structure_angles(&es, Structure::Del, k)
            .map_err(err)?
            .into_iter()
            .filter(|s| {
                let i = seen.entry((s.event, s.kind)).or_insert(0usize);
                *i += 1;
                *i - 1 == s.event.wrapping_mul(2654435761) % 3
            })
            .map(|s| s.value)
            .collect();
        let hist = empirical_density(&thinned, DEFAULT_BINS).map_err(err)?;
        let fit = fit_report(&hist, DensityKind::MilesF);
        let thr = THRESHOLD_FACTOR * self_consistency_l1(DensityKind::MilesF, thinned.len(), DEFAULT_BINS, 20, 99).map_err(err)?;
        notes.push(format!("[info] del_{k} one angle per triangle L1 {:.4} vs {:.4}", fit.l1, thr));
    }
    ok_if(ok, notes.join("; "))
}

fn c11_vertex_densities() -> Outcome {
    let (rho, k, seeds) = (400.0, 3, 50);
    let mut new = Vec::new();
    let mut old = Vec::new();
    let mut ratios_equal = true;
    for seed in 0..seeds {
        let es = enumerate_events(&poisson_torus(rho, 3, seed).map_err(err)?, 2).map_err(err)?;
        let r = vertex_density_report(&es, k, rho);
        new.push(r.new_observed);
        old.push(r.old_observed.unwrap());
        ratios_equal &= r.bri_deg3_angles == r.bri_deg6_angles;
    }
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (var / n).sqrt())
    };
    let (mn, sn) = stats(&new);
    let (mo, so) = stats(&old);
    let (en, eo) = (2.0 * k as f64 * rho, (2.0 * k as f64 - 1.0) * rho);
    let new_ok = (mn - en).abs() <= 3.0 * sn;
    let old_ok = (mo - eo).abs() <= 3.0 * so;
    // Depth k - 2 events number 2(k - 1) per site on a torus.
    let recount = 2.0 * (k as f64 - 1.0) * rho;
    ok_if(
        new_ok && old_ok && ratios_equal,
        format!(
            "new {mn:.1} +- {sn:.1} vs {en}: {new_ok}; old {mo:.1} +- {so:.1} vs {eo}: {old_ok} (vs 2(k-1)rho = {recount}: {}); Bri degree-3 and degree-6 angle counts equal: {ratios_equal}",
            (mo - recount).abs() <= 3.0 * so
        ),
    )
}

fn c12_counterexample() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for k in [6, 10, 20] {
        let start = Instant::now();
        let mut passes = 0;
        for seed in 0..10 {
            let cx = build_counterexample(&CounterexampleParams::new(k, seed)).map_err(err)?;
            let r = verify_counterexample(&cx).map_err(err)?;
            let good = r.pass && r.omega_del_k > r.omega_del_k1 && r.bound_14 > r.bound_15 && r.bound_15 > r.bound_13;
            passes += good as usize;
        }
        ok &= passes == 10;
        notes.push(format!("k={k}: {passes}/10 in {:.0}s", start.elapsed().as_secs_f64()));
    }
    ok_if(ok, notes.join(", "))
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "monotonicity on generic sets", c01_monotonicity_generic),
        (2, "monotonicity on Z2", c02_monotonicity_lattice),
        (3, "degree facts on Z2", c03_lattice_degrees),
        (4, "finite-set failure", c04_finite_failure),
        (5, "depth-table inequalities", c05_depth_tables),
        (6, "orthogonal duality", c06_duality),
        (7, "lifted-hull oracle", c07_oracle),
        (8, "hexagon geometry", c08_hexagons),
        (9, "Brillouin vertex sums", c09_vertex_sums),
        (10, "angle distributions", c10_miles),
        (11, "vertex densities", c11_vertex_densities),
        (12, "counterexample", c12_counterexample),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, name, run) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n:>2} PASS {name} ({secs:.1}s): {d}"),
            Err(d) => {
                println!("criterion {n:>2} FAIL {name} ({secs:.1}s): {d}");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass");
}
