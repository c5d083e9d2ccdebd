//! Explicit order-k tilings.
//!
//! Del and Igl tiles are built per circle event from closed-form vertex
//! formulas (subset barycenters with fixed coefficients). Vor and Bri are
//! their orthogonal duals: vertices are event centers, edges join events
//! whose primal tiles share an edge, and tiles come from closed fans of
//! primal tiles around a primal vertex.
//!
//! The lifted-hull oracle recomputes a weighted Delaunay mosaic from scratch
//! as the lower convex hull of lifted sites, for cross-checking.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use ethnum::I256;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::angles::Structure;
use crate::events::{CircleEvent, EventSet};
use crate::exactgeom::{orient, point_sum, rat, rat_to_f64, ExactPoint};
use crate::kernel::{common_denominator, max_bits, scale_to_int, Ring};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TilingError {
    #[error("{structure} tiles at order {k} need a generic set")]
    NonGenericUnsupported { structure: Structure, k: usize },
    #[error("order {k} outside the usable range 1..={max}")]
    OrderOutOfRange { k: usize, max: usize },
}

/// Age of a tile or vertex relative to neighboring orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Age {
    Old,
    Mid,
    New,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VertexInfo {
    /// The event whose center this vertex is (Vor and Bri only).
    pub event: Option<usize>,
    pub degree: usize,
    pub age: Option<Age>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Tile {
    /// Vertex indices, counterclockwise.
    pub cycle: Vec<usize>,
    pub age: Option<Age>,
    /// The event this tile is dual to (Del and Igl only).
    pub event: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tiling {
    pub structure: Structure,
    pub order: usize,
    pub vertices: Vec<ExactPoint>,
    pub vertex_info: Vec<VertexInfo>,
    pub edges: Vec<(usize, usize)>,
    pub tiles: Vec<Tile>,
}

/// A weighted site: the lift of `position` has height `height`, and
/// `weight = ‖position‖² − height`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AurenhammerSite {
    pub position: ExactPoint,
    pub height: BigRational,
    pub weight: BigRational,
    pub generator: Vec<ExactPoint>,
    /// Distinguished member for Iglesias sites.
    pub distinguished: Option<ExactPoint>,
}

impl AurenhammerSite {
    fn from_parts(position: ExactPoint, height: BigRational, generator: Vec<ExactPoint>, distinguished: Option<ExactPoint>) -> Self {
        let weight = position.norm2() - &height;
        AurenhammerSite { position, height, weight, generator, distinguished }
    }
}

/// Barycenter of `b` with the mean squared norm as height.
pub fn aurenhammer_site(b: &[ExactPoint]) -> AurenhammerSite {
    assert!(!b.is_empty(), "subset must be nonempty");
    let inv = rat(1, b.len() as i64);
    let position = point_sum(b).scale(&inv);
    let height = b.iter().map(ExactPoint::norm2).fold(BigRational::zero(), |a, v| a + v) * inv;
    AurenhammerSite::from_parts(position, height, b.to_vec(), None)
}

/// Site `(b_d + 2·Σ others) / (2k − 1)` for the subset `b` with
/// distinguished member `b[d]`; the height uses the same coefficients on
/// squared norms.
pub fn iglesias_site(b: &[ExactPoint], d: usize) -> AurenhammerSite {
    assert!(d < b.len(), "distinguished index out of range");
    let inv = rat(1, 2 * b.len() as i64 - 1);
    let two = rat(2, 1);
    let mut pos = b[d].clone();
    let mut h = b[d].norm2();
    for (i, p) in b.iter().enumerate() {
        if i != d {
            pos = &pos + &p.scale(&two);
            h += p.norm2() * &two;
        }
    }
    AurenhammerSite::from_parts(pos.scale(&inv), h * inv, b.to_vec(), Some(b[d].clone()))
}

impl Tiling {
    fn empty(structure: Structure, order: usize) -> Self {
        Tiling { structure, order, vertices: vec![], vertex_info: vec![], edges: vec![], tiles: vec![] }
    }

    /// Builds a tiling from tiles given by exact corner lists, merging equal
    /// corners.
    fn from_polygons(structure: Structure, order: usize, polys: Vec<(Vec<ExactPoint>, Option<Age>, Option<usize>)>) -> Self {
        let mut t = Tiling::empty(structure, order);
        let mut index: HashMap<ExactPoint, usize> = HashMap::new();
        for (corners, age, event) in polys {
            let cycle = corners
                .into_iter()
                .map(|p| {
                    *index.entry(p.clone()).or_insert_with(|| {
                        t.vertices.push(p);
                        t.vertices.len() - 1
                    })
                })
                .collect();
            t.tiles.push(Tile { cycle, age, event });
        }
        t.edges = edges_of_tiles(&t.tiles);
        let mut deg = vec![0usize; t.vertices.len()];
        for &(a, b) in &t.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        t.vertex_info = deg.into_iter().map(|degree| VertexInfo { event: None, degree, age: None }).collect();
        t
    }

    /// Undirected edge → tiles having it on their boundary.
    pub fn edge_tiles(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut m: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (ti, t) in self.tiles.iter().enumerate() {
            for (a, b) in cycle_edges(&t.cycle) {
                m.entry(key(a, b)).or_default().push(ti);
            }
        }
        m
    }

    /// Tiles as corner lists rotated to start at the smallest corner; for
    /// comparing tilings with different vertex numbering.
    pub fn canonical_tiles(&self) -> BTreeSet<Vec<ExactPoint>> {
        self.tiles
            .iter()
            .map(|t| {
                let pts: Vec<ExactPoint> = t.cycle.iter().map(|&v| self.vertices[v].clone()).collect();
                let start = (0..pts.len()).min_by(|&a, &b| pts[a].cmp(&pts[b])).unwrap_or(0);
                pts[start..].iter().chain(&pts[..start]).cloned().collect()
            })
            .collect()
    }

    /// Corner angles of every tile.
    pub fn tile_angles(&self) -> Vec<Vec<f64>> {
        self.tiles
            .iter()
            .map(|t| {
                let n = t.cycle.len();
                (0..n)
                    .map(|i| {
                        let prev = &self.vertices[t.cycle[(i + n - 1) % n]];
                        let next = &self.vertices[t.cycle[(i + 1) % n]];
                        crate::exactgeom::angle_at(prev, &self.vertices[t.cycle[i]], next).unwrap_or(f64::NAN)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct TileOut<'a> {
            cycle: &'a [usize],
            age: Option<Age>,
        }
        #[derive(Serialize)]
        struct Out<'a> {
            structure: String,
            k: usize,
            vertices: Vec<[String; 2]>,
            degrees: Vec<usize>,
            edges: &'a [(usize, usize)],
            tiles: Vec<TileOut<'a>>,
        }
        let out = Out {
            structure: self.structure.to_string(),
            k: self.order,
            vertices: self.vertices.iter().map(|p| [p.x.to_string(), p.y.to_string()]).collect(),
            degrees: self.vertex_info.iter().map(|v| v.degree).collect(),
            edges: &self.edges,
            tiles: self.tiles.iter().map(|t| TileOut { cycle: &t.cycle, age: t.age }).collect(),
        };
        serde_json::to_string(&out).expect("tiling serializes")
    }

    /// Minimal SVG drawing over the viewport `[x0, x1] × [y0, y1]`.
    pub fn to_svg(&self, viewport: [f64; 4]) -> String {
        let [x0, y0, x1, y1] = viewport;
        let size = 800.0;
        let scale = size / (x1 - x0).max(y1 - y0);
        let map = |p: &ExactPoint| {
            let [x, y] = p.to_f64();
            ((x - x0) * scale, (y1 - y) * scale)
        };
        let stroke = match self.structure {
            Structure::Del => "#1f4e9c",
            Structure::Vor => "#b03a2e",
            Structure::Bri => "#7d3c98",
            Structure::Igl => "#1e8449",
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
            w = (x1 - x0) * scale,
            h = (y1 - y0) * scale
        );
        for t in &self.tiles {
            let fill = match t.age {
                Some(Age::New) => "#f5e6a8",
                Some(Age::Mid) => "#cfe8d5",
                Some(Age::Old) => "#d6dbf0",
                None => "none",
            };
            let pts: Vec<String> = t.cycle.iter().map(|&v| {
                let (x, y) = map(&self.vertices[v]);
                format!("{x:.3},{y:.3}")
            }).collect();
            let _ = writeln!(s, r#"<polygon points="{}" fill="{fill}" stroke="none"/>"#, pts.join(" "));
        }
        for &(a, b) in &self.edges {
            let (ax, ay) = map(&self.vertices[a]);
            let (bx, by) = map(&self.vertices[b]);
            let _ = writeln!(s, r#"<line x1="{ax:.3}" y1="{ay:.3}" x2="{bx:.3}" y2="{by:.3}" stroke="{stroke}" stroke-width="1"/>"#);
        }
        s.push_str("</svg>\n");
        s
    }
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b { (a, b) } else { (b, a) }
}

fn cycle_edges(c: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..c.len()).map(move |i| (c[i], c[(i + 1) % c.len()]))
}

fn edges_of_tiles(tiles: &[Tile]) -> Vec<(usize, usize)> {
    let set: BTreeSet<(usize, usize)> = tiles.iter().flat_map(|t| cycle_edges(&t.cycle).map(|(a, b)| key(a, b)).collect::<Vec<_>>()).collect();
    set.into_iter().collect()
}

fn check_k(es: &EventSet, k: usize) -> Result<(), TilingError> {
    if k == 0 || k > es.k_max_usable {
        return Err(TilingError::OrderOutOfRange { k, max: es.k_max_usable });
    }
    Ok(())
}

/// Events of depth `k - 1 - back` for `back` in `backs`, failing on
/// degenerate ones.
fn generic_events<'a>(es: &'a EventSet, m: Structure, k: usize, depths: &[usize]) -> Result<Vec<(usize, &'a CircleEvent)>, TilingError> {
    let sel: Vec<(usize, &CircleEvent)> = es.events.iter().enumerate().filter(|(_, e)| depths.contains(&e.depth_p)).collect();
    if sel.iter().any(|(_, e)| !e.is_generic()) {
        return Err(TilingError::NonGenericUnsupported { structure: m, k });
    }
    Ok(sel)
}

fn inside_sum(es: &EventSet, e: &CircleEvent) -> ExactPoint {
    point_sum(e.inside.iter().map(|&i| es.site(i)))
}

/// Order-`k` Delaunay mosaic: new triangles `(u + x)/k` from events of depth
/// `k − 1` and old triangles `(u + S − z)/k` from events of depth `k − 2`,
/// where `u` sums the sites inside and `S` those on the circle.
pub fn delaunay_mosaic(es: &EventSet, k: usize) -> Result<Tiling, TilingError> {
    check_k(es, k)?;
    let depths: Vec<usize> = [k.checked_sub(1), k.checked_sub(2)].into_iter().flatten().collect();
    let sel = generic_events(es, Structure::Del, k, &depths)?;
    let inv = rat(1, k as i64);
    let polys = sel
        .par_iter()
        .map(|&(idx, e)| {
            let u = inside_sum(es, e);
            let on: Vec<&ExactPoint> = e.on.iter().map(|&i| es.site(i)).collect();
            if e.depth_p + 1 == k {
                let c = on.iter().map(|x| (&u + x).scale(&inv)).collect();
                (c, Some(Age::New), Some(idx))
            } else {
                let s = &u + &point_sum(on.iter().copied());
                let c = on.iter().map(|z| (&s - z).scale(&inv)).collect();
                (c, Some(Age::Old), Some(idx))
            }
        })
        .collect();
    Ok(Tiling::from_polygons(Structure::Del, k, polys))
}

/// Order-`k` Iglesias mosaic: new triangles `(2u + x)/(2k − 1)`, mid
/// hexagons `(2u + 2x + y)/(2k − 1)` and old triangles `(2u + 2S − z)/(2k − 1)`
/// from events of depth `k − 1`, `k − 2` and `k − 3`.
pub fn iglesias_mosaic(es: &EventSet, k: usize) -> Result<Tiling, TilingError> {
    check_k(es, k)?;
    let depths: Vec<usize> = [k.checked_sub(1), k.checked_sub(2), k.checked_sub(3)].into_iter().flatten().collect();
    let sel = generic_events(es, Structure::Igl, k, &depths)?;
    let inv = rat(1, 2 * k as i64 - 1);
    let two = rat(2, 1);
    let polys = sel
        .par_iter()
        .map(|&(idx, e)| {
            let u2 = inside_sum(es, e).scale(&two);
            let on: Vec<&ExactPoint> = e.on.iter().map(|&i| es.site(i)).collect();
            let back = k - 1 - e.depth_p;
            match back {
                0 => (on.iter().map(|x| (&u2 + x).scale(&inv)).collect(), Some(Age::New), Some(idx)),
                1 => {
                    let v = |x: usize, y: usize| (&(&u2 + &on[x].scale(&two)) + on[y]).scale(&inv);
                    let c = vec![v(0, 1), v(1, 0), v(1, 2), v(2, 1), v(2, 0), v(0, 2)];
                    (c, Some(Age::Mid), Some(idx))
                }
                _ => {
                    let s2 = &u2 + &point_sum(on.iter().copied()).scale(&two);
                    (on.iter().map(|z| (&s2 - z).scale(&inv)).collect(), Some(Age::Old), Some(idx))
                }
            }
        })
        .collect();
    Ok(Tiling::from_polygons(Structure::Igl, k, polys))
}

/// Vertices of the order-`k` Voronoi tessellation with degree and age.
fn voronoi_vertices(es: &EventSet, k: usize) -> Vec<(usize, usize, Age)> {
    es.events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.depth_p < k && k <= e.depth_p + e.n())
        .map(|(i, e)| {
            let age = if k == e.depth_p + 1 {
                Age::New
            } else if k == e.depth_p + e.n() {
                Age::Old
            } else {
                Age::Mid
            };
            (i, e.on.len(), age)
        })
        .collect()
}

/// Vertices of the order-`k` Brillouin tessellation with degree and age.
fn brillouin_vertices(es: &EventSet, k: usize) -> Vec<(usize, usize, Age)> {
    es.events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.depth_p < k && k <= e.depth_p + e.n() + 1)
        .map(|(i, e)| {
            let (age, degree) = if k == e.depth_p + 1 {
                (Age::New, e.on.len())
            } else if k == e.depth_p + e.n() + 1 {
                (Age::Old, e.on.len())
            } else {
                (Age::Mid, 2 * e.on.len())
            };
            (i, degree, age)
        })
        .collect()
}

/// Dual tiling whose vertices are event centers. Edges join the events of
/// primal tiles sharing an edge; tiles are closed fans around primal
/// vertices.
fn dual_tiling(es: &EventSet, structure: Structure, k: usize, verts: Vec<(usize, usize, Age)>, primal: &[Tiling], fan_source: Option<&Tiling>) -> Tiling {
    let mut t = Tiling::empty(structure, k);
    let mut by_event: HashMap<usize, usize> = HashMap::new();
    for (ev, degree, age) in verts {
        by_event.insert(ev, t.vertices.len());
        t.vertices.push(es.events[ev].circle.center.clone());
        t.vertex_info.push(VertexInfo { event: Some(ev), degree, age: Some(age) });
    }
    let mut edges = BTreeSet::new();
    for p in primal {
        for (_, tiles) in p.edge_tiles() {
            if let [a, b] = tiles[..] {
                let (ea, eb) = (p.tiles[a].event.expect("primal tiles carry events"), p.tiles[b].event.expect("primal tiles carry events"));
                if let (Some(&va), Some(&vb)) = (by_event.get(&ea), by_event.get(&eb)) {
                    edges.insert(key(va, vb));
                }
            }
        }
    }
    t.edges = edges.into_iter().collect();
    if let Some(src) = fan_source {
        let et = src.edge_tiles();
        let mut incident: Vec<Vec<usize>> = vec![vec![]; src.vertices.len()];
        let mut closed = vec![true; src.vertices.len()];
        for (&(a, b), tiles) in &et {
            if tiles.len() != 2 {
                closed[a] = false;
                closed[b] = false;
            }
        }
        for (ti, tile) in src.tiles.iter().enumerate() {
            for &v in &tile.cycle {
                incident[v].push(ti);
            }
        }
        let fans: Vec<Vec<usize>> = incident
            .par_iter()
            .enumerate()
            .filter(|(v, inc)| closed[*v] && inc.len() >= 3)
            .map(|(_, inc)| {
                let mut cyc: Vec<usize> = inc
                    .iter()
                    .map(|&ti| by_event[&src.tiles[ti].event.expect("primal tiles carry events")])
                    .collect();
                sort_ccw(&t.vertices, &mut cyc);
                cyc
            })
            .collect();
        t.tiles = fans.into_iter().map(|cycle| Tile { cycle, age: None, event: None }).collect();
    }
    t
}

/// Sorts vertex indices counterclockwise around their centroid (exact).
fn sort_ccw(pts: &[ExactPoint], idx: &mut [usize]) {
    let c = point_sum(idx.iter().map(|&i| &pts[i])).scale(&rat(1, idx.len() as i64));
    let zero = BigRational::zero();
    let upper = |w: &ExactPoint| w.y > zero || (w.y == zero && w.x > zero);
    idx.sort_by(|&a, &b| {
        let (u, v) = (&pts[a] - &c, &pts[b] - &c);
        match (upper(&u), upper(&v)) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => zero.cmp(&u.cross(&v)),
        }
    });
}

/// Order-`k` Voronoi tessellation. On generic input edges and interior tiles
/// are the orthogonal dual of the Delaunay mosaic; otherwise only vertices
/// with their degrees are produced.
pub fn voronoi_tessellation(es: &EventSet, k: usize) -> Result<Tiling, TilingError> {
    check_k(es, k)?;
    let verts = voronoi_vertices(es, k);
    match delaunay_mosaic(es, k) {
        Ok(del) => Ok(dual_tiling(es, Structure::Vor, k, verts, std::slice::from_ref(&del), Some(&del))),
        Err(TilingError::NonGenericUnsupported { .. }) => Ok(dual_tiling(es, Structure::Vor, k, verts, &[], None)),
        Err(e) => Err(e),
    }
}

/// Order-`k` Brillouin tessellation: the overlay of the Voronoi
/// tessellations of orders `k − 1` and `k`. Tiles are the closed fans dual
/// to Iglesias vertices; degenerate input yields vertices only.
pub fn brillouin_tessellation(es: &EventSet, k: usize) -> Result<Tiling, TilingError> {
    check_k(es, k)?;
    let verts = brillouin_vertices(es, k);
    let mut primal = Vec::new();
    for kk in [k - 1, k] {
        if kk == 0 {
            continue;
        }
        match delaunay_mosaic(es, kk) {
            Ok(d) => primal.push(d),
            Err(TilingError::NonGenericUnsupported { .. }) => return Ok(dual_tiling(es, Structure::Bri, k, verts, &[], None)),
            Err(e) => return Err(e),
        }
    }
    let igl = match iglesias_mosaic(es, k) {
        Ok(t) => t,
        Err(TilingError::NonGenericUnsupported { .. }) => return Ok(dual_tiling(es, Structure::Bri, k, verts, &[], None)),
        Err(e) => return Err(e),
    };
    Ok(dual_tiling(es, Structure::Bri, k, verts, &primal, Some(&igl)))
}

/// Result of an orthogonal-duality check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualReport {
    /// Interior primal edges matched with a dual edge.
    pub matched: usize,
    /// Primal edges with a single tile, excluded from the check.
    pub boundary_edges: usize,
    pub violations: Vec<String>,
}

impl DualReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every interior edge of `t` has a dual edge in `d` that is
/// perpendicular to it and runs from the dual of its left tile to the dual
/// of its right tile.
pub fn check_orthogonal_dual(t: &Tiling, d: &Tiling) -> DualReport {
    let by_event: HashMap<usize, usize> = d
        .vertex_info
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.event.map(|e| (e, i)))
        .collect();
    let d_edges: HashSet<(usize, usize)> = d.edges.iter().copied().collect();
    let mut report = DualReport { matched: 0, boundary_edges: 0, violations: vec![] };
    let zero = BigRational::zero();
    let et = t.edge_tiles();
    for (ti, tile) in t.tiles.iter().enumerate() {
        for (p, q) in cycle_edges(&tile.cycle) {
            let owners = &et[&key(p, q)];
            if owners.len() != 2 {
                report.boundary_edges += 1;
                continue;
            }
            let other = if owners[0] == ti { owners[1] } else { owners[0] };
            let (Some(e1), Some(e2)) = (tile.event, t.tiles[other].event) else {
                report.violations.push(format!("tile without event at edge {p}-{q}"));
                continue;
            };
            let (Some(&c1), Some(&c2)) = (by_event.get(&e1), by_event.get(&e2)) else {
                report.violations.push(format!("no dual vertex for events {e1}/{e2}"));
                continue;
            };
            if !d_edges.contains(&key(c1, c2)) {
                report.violations.push(format!("missing dual edge for primal edge {p}-{q}"));
                continue;
            }
            let dir = &t.vertices[q] - &t.vertices[p];
            let dual = &d.vertices[c2] - &d.vertices[c1];
            if dir.dot(&dual) != zero {
                report.violations.push(format!("edge {p}-{q} not orthogonal to its dual"));
            } else if dir.cross(&dual) >= zero {
                report.violations.push(format!("edge {p}-{q}: dual runs the wrong way"));
            } else {
                report.matched += 1;
            }
        }
    }
    // Interior edges were seen from both sides, boundary edges once.
    report.matched /= 2;
    report
}

// ---------------------------------------------------------------------------
// Lifted-hull oracle.

type Vec3<R> = [R; 3];

fn orient3d<R: Ring>(a: &Vec3<R>, b: &Vec3<R>, c: &Vec3<R>, d: &Vec3<R>) -> Ordering {
    let u = [b[0].sub(&a[0]), b[1].sub(&a[1]), b[2].sub(&a[2])];
    let v = [c[0].sub(&a[0]), c[1].sub(&a[1]), c[2].sub(&a[2])];
    let w = [d[0].sub(&a[0]), d[1].sub(&a[1]), d[2].sub(&a[2])];
    let x = u[0].mul(&v[1].mul(&w[2]).sub(&v[2].mul(&w[1])));
    let y = u[1].mul(&v[0].mul(&w[2]).sub(&v[2].mul(&w[0])));
    let z = u[2].mul(&v[0].mul(&w[1]).sub(&v[1].mul(&w[0])));
    x.sub(&y).add(&z).sign()
}

fn orient2d<R: Ring>(a: &Vec3<R>, b: &Vec3<R>, c: &Vec3<R>) -> Ordering {
    let u = [b[0].sub(&a[0]), b[1].sub(&a[1])];
    let v = [c[0].sub(&a[0]), c[1].sub(&a[1])];
    u[0].mul(&v[1]).sub(&u[1].mul(&v[0])).sign()
}

struct Lift<R> {
    pts: Vec<Vec3<R>>,
}

impl<R: Ring> Lift<R> {
    /// `d` lies strictly below the plane through `a, b, c` (any orientation).
    fn below(&self, a: usize, b: usize, c: usize, d: usize) -> bool {
        let p = &self.pts;
        let o2 = orient2d(&p[a], &p[b], &p[c]);
        let o3 = orient3d(&p[a], &p[b], &p[c], &p[d]);
        o2 != Ordering::Equal && o3 != Ordering::Equal && o3 != o2
    }

    fn coplanar(&self, a: usize, b: usize, c: usize, d: usize) -> bool {
        orient3d(&self.pts[a], &self.pts[b], &self.pts[c], &self.pts[d]) == Ordering::Equal
    }

    /// Counterclockwise strict convex hull of the projections of `idx`.
    fn hull2d(&self, mut idx: Vec<usize>) -> Vec<usize> {
        let p = &self.pts;
        idx.sort_by(|&a, &b| (&p[a][0], &p[a][1]).cmp(&(&p[b][0], &p[b][1])));
        idx.dedup();
        if idx.len() < 3 {
            return idx;
        }
        let mut lower: Vec<usize> = Vec::new();
        for &i in &idx {
            while lower.len() >= 2 && orient2d(&p[lower[lower.len() - 2]], &p[lower[lower.len() - 1]], &p[i]) != Ordering::Greater {
                lower.pop();
            }
            lower.push(i);
        }
        let mut upper: Vec<usize> = Vec::new();
        for &i in idx.iter().rev() {
            while upper.len() >= 2 && orient2d(&p[upper[upper.len() - 2]], &p[upper[upper.len() - 1]], &p[i]) != Ordering::Greater {
                upper.pop();
            }
            upper.push(i);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        lower
    }

    /// Lower face on the left of the directed edge `p → q`, if any.
    fn wrap(&self, p: usize, q: usize) -> Option<Vec<usize>> {
        let n = self.pts.len();
        let mut best: Option<usize> = None;
        for r in 0..n {
            if r == p || r == q || orient2d(&self.pts[p], &self.pts[q], &self.pts[r]) != Ordering::Greater {
                continue;
            }
            match best {
                None => best = Some(r),
                Some(b) if self.below(p, q, b, r) => best = Some(r),
                _ => {}
            }
        }
        let b = best?;
        let face: Vec<usize> = (0..n).filter(|&r| r == p || r == q || r == b || self.coplanar(p, q, b, r)).collect();
        Some(self.hull2d(face))
    }

    fn lower_hull(&self) -> Vec<Vec<usize>> {
        let n = self.pts.len();
        if n < 3 {
            return vec![];
        }
        let p = &self.pts;
        let start = (0..n).min_by(|&a, &b| (&p[a][0], &p[a][1]).cmp(&(&p[b][0], &p[b][1]))).unwrap();
        // Next vertex of the projected hull, so every site lies on the left.
        let mut q = if start == 0 { 1 } else { 0 };
        for r in 0..n {
            if r == start || r == q {
                continue;
            }
            match orient2d(&p[start], &p[q], &p[r]) {
                Ordering::Less => q = r,
                Ordering::Equal => {
                    let far = |x: usize| {
                        let dx = p[x][0].sub(&p[start][0]);
                        let dy = p[x][1].sub(&p[start][1]);
                        dx.mul(&dx).add(&dy.mul(&dy))
                    };
                    if far(r) < far(q) {
                        q = r;
                    }
                }
                Ordering::Greater => {}
            }
        }
        let mut faces = Vec::new();
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut queue = VecDeque::new();
        if let Some(f) = self.wrap(start, q) {
            queue.push_back(f);
        }
        while let Some(f) = queue.pop_front() {
            let mut k = f.clone();
            k.sort_unstable();
            if !seen.insert(k) {
                continue;
            }
            for (a, b) in cycle_edges(&f) {
                if let Some(g) = self.wrap(b, a) {
                    queue.push_back(g);
                }
            }
            faces.push(f);
        }
        faces
    }

    fn lower_hull_brute(&self) -> Vec<Vec<usize>> {
        let n = self.pts.len();
        let mut seen = HashSet::new();
        let mut faces = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    if orient2d(&self.pts[a], &self.pts[b], &self.pts[c]) == Ordering::Equal {
                        continue;
                    }
                    if (0..n).any(|d| self.below(a, b, c, d)) {
                        continue;
                    }
                    let face = self.hull2d((0..n).filter(|&d| self.coplanar(a, b, c, d)).collect());
                    let mut k = face.clone();
                    k.sort_unstable();
                    if seen.insert(k) {
                        faces.push(face);
                    }
                }
            }
        }
        faces
    }
}

fn lift_faces(sites: &[AurenhammerSite], brute: bool) -> Vec<Vec<usize>> {
    let den = common_denominator(sites.iter().flat_map(|s| [&s.position.x, &s.position.y, &s.height]));
    let ints: Vec<[BigInt; 3]> = sites
        .iter()
        .map(|s| [scale_to_int(&s.position.x, &den), scale_to_int(&s.position.y, &den), scale_to_int(&s.height, &den)])
        .collect();
    let bxy = max_bits(ints.iter().flat_map(|v| [&v[0], &v[1]]));
    let bz = max_bits(ints.iter().map(|v| &v[2]));
    let run = |faces: fn(&Lift<I256>) -> Vec<Vec<usize>>, faces_big: fn(&Lift<BigInt>) -> Vec<Vec<usize>>| {
        if 2 * (bxy + 2) + bz + 2 + 4 <= 250 {
            let l = Lift { pts: ints.iter().map(|v| [0, 1, 2].map(|i| <I256 as Ring>::from_big(&v[i]))).collect() };
            faces(&l)
        } else {
            let l = Lift { pts: ints.clone() };
            faces_big(&l)
        }
    };
    if brute {
        run(Lift::lower_hull_brute, Lift::lower_hull_brute)
    } else {
        run(Lift::lower_hull, Lift::lower_hull)
    }
}

fn faces_to_tiling(sites: &[AurenhammerSite], faces: Vec<Vec<usize>>, structure: Structure, k: usize) -> Tiling {
    let polys = faces
        .into_iter()
        .map(|f| (f.into_iter().map(|i| sites[i].position.clone()).collect(), None, None))
        .collect();
    Tiling::from_polygons(structure, k, polys)
}

/// Weighted Delaunay mosaic of `sites`: the projected lower convex hull of
/// the lifted points `(position, height)`, by gift wrapping with exact
/// 3D orientation tests. Coplanar lower facets merge into one polygon.
pub fn lifted_hull_oracle(sites: &[AurenhammerSite], structure: Structure, k: usize) -> Tiling {
    faces_to_tiling(sites, lift_faces(sites, false), structure, k)
}

/// The same mosaic by testing every triple of lifted sites; cubic, for
/// small inputs only.
pub fn lifted_hull_brute_force(sites: &[AurenhammerSite], structure: Structure, k: usize) -> Tiling {
    faces_to_tiling(sites, lift_faces(sites, true), structure, k)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Aurenhammer sites of all `k`-subsets of `points`.
pub fn all_aurenhammer_sites(points: &[ExactPoint], k: usize) -> Vec<AurenhammerSite> {
    subsets(points.len(), k)
        .par_iter()
        .map(|s| aurenhammer_site(&s.iter().map(|&i| points[i].clone()).collect::<Vec<_>>()))
        .collect()
}

/// Iglesias sites of all `k`-subsets of `points` and all choices of the
/// distinguished member.
pub fn all_iglesias_sites(points: &[ExactPoint], k: usize) -> Vec<AurenhammerSite> {
    subsets(points.len(), k)
        .par_iter()
        .flat_map_iter(|s| {
            let b: Vec<ExactPoint> = s.iter().map(|&i| points[i].clone()).collect();
            (0..k).map(move |d| iglesias_site(&b, d))
        })
        .collect()
}

/// Whether `p` is strictly left of the directed line `a → b`.
pub fn left_of(a: &ExactPoint, b: &ExactPoint, p: &ExactPoint) -> bool {
    orient(a, b, p) == Ordering::Greater
}

/// Viewport of a tiling for SVG output: the given window, or the vertex
/// bounding box.
pub fn viewport(t: &Tiling, window: Option<&crate::pointsets::Rect>) -> [f64; 4] {
    if let Some(w) = window {
        return w.to_f64();
    }
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in &t.vertices {
        let [x, y] = [rat_to_f64(&p.x), rat_to_f64(&p.y)];
        b = [b[0].min(x), b[1].min(y), b[2].max(x), b[3].max(y)];
    }
    if !b[0].is_finite() {
        return [0.0, 0.0, 1.0, 1.0];
    }
    let pad = 0.05 * (b[2] - b[0]).max(b[3] - b[1]).max(1e-9);
    [b[0] - pad, b[1] - pad, b[2] + pad, b[3] + pad]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::enumerate_events;
    use crate::pointsets::{integer_lattice, random_periodic, uniform_finite, Rect, WindowedSet};

    fn p(x: i64, y: i64) -> ExactPoint {
        ExactPoint::from_ints(x, y)
    }

    fn finite(points: Vec<ExactPoint>) -> WindowedSet {
        WindowedSet {
            points,
            inner_window: Rect::from_ints(-10, -10, 10, 10),
            outer_window: Rect::from_ints(-10, -10, 10, 10),
            tag: "test".into(),
            seed: None,
            finite: true,
        }
    }

    #[test]
    fn aurenhammer_examples() {
        let s = aurenhammer_site(&[p(0, 0)]);
        assert_eq!((s.position, s.height, s.weight), (p(0, 0), rat(0, 1), rat(0, 1)));
        let s = aurenhammer_site(&[p(0, 0), p(1, 0)]);
        assert_eq!((s.position, s.height, s.weight), (ExactPoint::new(rat(1, 2), rat(0, 1)), rat(1, 2), rat(-1, 4)));
        let s = aurenhammer_site(&[p(0, 0), p(2, 0), p(0, 2)]);
        assert_eq!(s.position, ExactPoint::new(rat(2, 3), rat(2, 3)));
        assert_eq!((s.height, s.weight), (rat(8, 3), rat(-16, 9)));
    }

    #[test]
    fn iglesias_examples() {
        let b = p(3, 5);
        let s = iglesias_site(std::slice::from_ref(&b), 0);
        assert_eq!((s.position.clone(), s.height.clone(), s.weight), (b.clone(), b.norm2(), rat(0, 1)));
        let a = p(1, -2);
        let s = iglesias_site(&[a.clone(), b.clone()], 1);
        assert_eq!(s.position, (&b + &a.scale(&rat(2, 1))).scale(&rat(1, 3)));
    }

    fn triangle() -> EventSet {
        enumerate_events(&finite(vec![p(0, 0), p(1, 0), p(0, 1)]), 2).unwrap()
    }

    #[test]
    fn delaunay_single_event() {
        let es = triangle();
        let d1 = delaunay_mosaic(&es, 1).unwrap();
        assert_eq!(d1.canonical_tiles(), BTreeSet::from([vec![p(0, 0), p(1, 0), p(0, 1)]]));
        let d2 = delaunay_mosaic(&es, 2).unwrap();
        let h = rat(1, 2);
        let z = rat(0, 1);
        let want: BTreeSet<ExactPoint> = [
            ExactPoint::new(h.clone(), z.clone()),
            ExactPoint::new(z, h.clone()),
            ExactPoint::new(h.clone(), h),
        ]
        .into();
        assert_eq!(d2.vertices.iter().cloned().collect::<BTreeSet<_>>(), want);
        let a1 = d1.tile_angles();
        let a2 = d2.tile_angles();
        let sorted = |v: &Vec<f64>| {
            let mut v = v.clone();
            v.sort_by(f64::total_cmp);
            v
        };
        assert_eq!(sorted(&a1[0]), sorted(&a2[0]));
        for t in d2.tiles.iter() {
            let c: Vec<&ExactPoint> = t.cycle.iter().map(|&v| &d2.vertices[v]).collect();
            assert!(left_of(c[0], c[1], c[2]), "old triangle must be counterclockwise");
        }
    }

    #[test]
    fn iglesias_hexagon_and_old_triangle() {
        let pts = vec![p(0, 0), p(7, 1), p(2, 5)];
        let es = enumerate_events(&finite(pts.clone()), 2).unwrap();
        let i2 = iglesias_mosaic(&es, 2).unwrap();
        let hex = &i2.tiles[0];
        assert_eq!(hex.cycle.len(), 6);
        let center = point_sum(&pts).scale(&rat(1, 3));
        let v: Vec<&ExactPoint> = hex.cycle.iter().map(|&i| &i2.vertices[i]).collect();
        for i in 0..3 {
            assert_eq!((v[i] + v[i + 3]).scale(&rat(1, 2)), center);
        }
        for i in 0..6 {
            assert!(left_of(v[i], v[(i + 1) % 6], v[(i + 2) % 6]));
        }
        let third = rat(1, 3);
        let want: BTreeSet<ExactPoint> = [(0, 1), (1, 0), (1, 2), (2, 1), (2, 0), (0, 2)]
            .iter()
            .map(|&(x, y)| (&pts[x].scale(&rat(2, 1)) + &pts[y]).scale(&third))
            .collect();
        assert_eq!(v.iter().map(|q| (*q).clone()).collect::<BTreeSet<_>>(), want);
        let i3 = iglesias_mosaic(&es, 3).unwrap();
        let tri: Vec<&ExactPoint> = i3.tiles[0].cycle.iter().map(|&i| &i3.vertices[i]).collect();
        // (2a + 2b + c)/5 is the image of c under x ↦ (2S − x)/5.
        let s2 = point_sum(&pts).scale(&rat(2, 1));
        let want: BTreeSet<ExactPoint> = pts.iter().map(|z| (&s2 - z).scale(&rat(1, 5))).collect();
        assert_eq!(tri.iter().map(|q| (*q).clone()).collect::<BTreeSet<_>>(), want);
    }

    #[test]
    fn lattice_vertex_degrees() {
        let es = enumerate_events(&integer_lattice(15).unwrap(), 11).unwrap_or_else(|_| enumerate_events(&integer_lattice(27).unwrap(), 11).unwrap());
        let c = ExactPoint::new(rat(1, 2), rat(1, 2));
        for k in 1..=12 {
            let vor = voronoi_tessellation(&es, k).unwrap();
            let hit = vor
                .vertices
                .iter()
                .zip(&vor.vertex_info)
                .find(|(v, i)| **v == c && es.events[i.event.unwrap()].circle.r2 == rat(5, 2));
            if (5..=11).contains(&k) {
                assert_eq!(hit.unwrap().1.degree, 8, "k={k}");
            } else {
                assert!(hit.is_none(), "k={k}");
            }
        }
        let bri = brillouin_tessellation(&es, 6).unwrap();
        let deg = bri
            .vertex_info
            .iter()
            .find(|i| es.events[i.event.unwrap()].circle.r2 == rat(5, 2) && es.events[i.event.unwrap()].circle.center == c)
            .unwrap()
            .degree;
        assert_eq!(deg, 16);
    }

    #[test]
    fn generic_degrees_and_duality() {
        let s = random_periodic(15, 5, 3).unwrap();
        let es = enumerate_events(&s, 4).unwrap();
        for k in 1..=3 {
            let del = delaunay_mosaic(&es, k).unwrap();
            let vor = voronoi_tessellation(&es, k).unwrap();
            assert!(vor.vertex_info.iter().all(|v| v.degree == 3));
            let r = check_orthogonal_dual(&del, &vor);
            assert!(r.passed() && r.matched > 0, "{r:?}");
            let igl = iglesias_mosaic(&es, k).unwrap();
            let bri = brillouin_tessellation(&es, k).unwrap();
            for v in &bri.vertex_info {
                let want = if v.age == Some(Age::Mid) { 6 } else { 3 };
                assert_eq!(v.degree, want);
            }
            let r = check_orthogonal_dual(&igl, &bri);
            assert!(r.passed() && r.matched > 0, "{r:?}");
            for t in igl.tiles.iter().filter(|t| t.age == Some(Age::Mid)) {
                let v: Vec<&ExactPoint> = t.cycle.iter().map(|&i| &igl.vertices[i]).collect();
                assert_eq!(v[0] + v[3], v[1] + v[4]);
                assert_eq!(v[1] + v[4], v[2] + v[5]);
            }
        }
        let k1 = brillouin_tessellation(&es, 1).unwrap();
        let v1 = voronoi_tessellation(&es, 1).unwrap();
        assert_eq!(k1.vertices, v1.vertices);
        assert_eq!(k1.edges, v1.edges);
    }

    #[test]
    fn duality_negative_control() {
        let s = random_periodic(15, 5, 3).unwrap();
        let es = enumerate_events(&s, 2).unwrap();
        let del = delaunay_mosaic(&es, 2).unwrap();
        let mut vor = voronoi_tessellation(&es, 2).unwrap();
        let v = vor.edges[vor.edges.len() / 2].0;
        vor.vertices[v] = &vor.vertices[v] + &ExactPoint::new(rat(1, 1000), rat(0, 1));
        assert!(!check_orthogonal_dual(&del, &vor).passed());
    }

    #[test]
    fn oracle_on_four_points() {
        let pts = vec![p(0, 0), p(4, 0), p(5, 3), p(1, 4)];
        let sites: Vec<_> = pts.iter().map(|q| aurenhammer_site(std::slice::from_ref(q))).collect();
        let hull = lifted_hull_oracle(&sites, Structure::Del, 1);
        let es = enumerate_events(&finite(pts), 0).unwrap();
        assert_eq!(hull.canonical_tiles(), delaunay_mosaic(&es, 1).unwrap().canonical_tiles());
        assert_eq!(hull.tiles.len(), 2);
    }

    #[test]
    fn oracle_gift_wrap_matches_brute_force() {
        let pts = uniform_finite(9, 4).points;
        for k in [1, 2] {
            let sites = all_iglesias_sites(&pts, k);
            assert_eq!(
                lifted_hull_oracle(&sites, Structure::Igl, k).canonical_tiles(),
                lifted_hull_brute_force(&sites, Structure::Igl, k).canonical_tiles()
            );
        }
    }

    #[test]
    fn mosaics_match_oracle_small() {
        let set = uniform_finite(12, 6);
        let es = enumerate_events(&set, 2).unwrap();
        for k in 1..=3 {
            let del = delaunay_mosaic(&es, k).unwrap();
            let o = lifted_hull_oracle(&all_aurenhammer_sites(&set.points, k), Structure::Del, k);
            assert_eq!(del.canonical_tiles(), o.canonical_tiles(), "del k={k}");
            let igl = iglesias_mosaic(&es, k).unwrap();
            let o = lifted_hull_oracle(&all_iglesias_sites(&set.points, k), Structure::Igl, k);
            assert_eq!(igl.canonical_tiles(), o.canonical_tiles(), "igl k={k}");
        }
    }

    #[test]
    fn json_and_svg_are_deterministic() {
        let es = triangle();
        let t = iglesias_mosaic(&es, 2).unwrap();
        assert_eq!(t.to_json(), iglesias_mosaic(&es, 2).unwrap().to_json());
        let svg = t.to_svg(viewport(&t, None));
        assert!(svg.starts_with("<svg") && svg.contains("polygon"));
    }
}
