//! Circle events: circles through three or more sites, with exact depth.
//!
//! Enumeration runs over site triples. Floating point is used only to prune
//! (spatial buckets and conservative radius bounds); every accepted event is
//! decided by exact integer predicates in a common-denominator frame.
//!
//! For windowed sets the center of an event must lie in the half-open center
//! region `[x0, x1) × [y0, y1)` (the inner window by default) and its closed
//! disk must fit in the outer window. Finite sets take every circle.

use std::cmp::Ordering;

use ethnum::I256;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exactgeom::{rat_to_f64, side_of, ExactCircle, ExactPoint, Side};
use crate::kernel::{
    self, common_denominator, cross2, incircle_rel, max_bits, norm2, scale_to_int, sub2, Frame,
    Ring, Vec2,
};
use crate::pointsets::{Rect, WindowedSet};

/// Frames whose coordinates stay below this bit length use 256-bit arithmetic.
const FAST_BITS: u64 = 38;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EventsError {
    #[error("point set is empty")]
    EmptySet,
    #[error("window too small: depth cap {depth_cap} needs order {} but only k <= {k_max_usable} is usable", depth_cap + 1)]
    WindowTooSmall { depth_cap: usize, k_max_usable: usize },
    #[error("disk is not contained in the outer window")]
    DiskOutsideWindow,
    #[error("site index {0} out of range")]
    BadSite(usize),
    #[error("center region around site {site} is too small: radius bound {radius_bound:.4} exceeds {half_width:.4}")]
    ZoneRegionTooSmall { site: usize, radius_bound: f64, half_width: f64 },
}

/// A circle through at least three sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircleEvent {
    pub circle: ExactCircle,
    /// Sites on the circle, counterclockwise from the smallest polar angle.
    pub on: Vec<usize>,
    /// Number of sites strictly inside.
    pub depth_p: usize,
    /// Sites strictly inside, ascending.
    pub inside: Vec<usize>,
}

impl CircleEvent {
    /// `n` such that `n + 1` sites lie on the circle.
    pub fn n(&self) -> usize {
        self.on.len() - 1
    }

    pub fn is_generic(&self) -> bool {
        self.on.len() == 3
    }
}

/// Knobs for [`enumerate_with`].
#[derive(Clone, Debug, Default)]
pub struct EnumerateOptions {
    pub depth_min: usize,
    pub depth_cap: usize,
    /// Only events with this site on the circle.
    pub through_site: Option<usize>,
    /// Replaces the inner window as the admissible center region.
    pub center_region: Option<Rect>,
}

#[derive(Clone, Debug)]
pub(crate) enum AnyFrame {
    Fast(Frame<I256>),
    Big(Frame<BigInt>),
}

/// All events of a set up to a depth cap.
#[derive(Clone, Debug)]
pub struct EventSet {
    pub events: Vec<CircleEvent>,
    /// Orders `k <= k_max_usable` see every event of depth `k - 1` or less.
    pub k_max_usable: usize,
    pub depth_min: usize,
    pub depth_cap: usize,
    pub center_region: Rect,
    pub source: WindowedSet,
    frame: AnyFrame,
}

impl EventSet {
    pub fn site(&self, i: usize) -> &ExactPoint {
        &self.source.points[i]
    }

    pub fn at_depth(&self, p: usize) -> impl Iterator<Item = &CircleEvent> {
        self.events.iter().filter(move |e| e.depth_p == p)
    }

    pub fn is_generic(&self) -> bool {
        self.events.iter().all(CircleEvent::is_generic)
    }

    /// Angle at site `apex` between sites `a` and `b`; `None` if collinear.
    pub fn site_angle(&self, a: usize, apex: usize, b: usize) -> Option<f64> {
        match &self.frame {
            AnyFrame::Fast(f) => kernel::angle(&f.pts[a], &f.pts[apex], &f.pts[b]),
            AnyFrame::Big(f) => kernel::angle(&f.pts[a], &f.pts[apex], &f.pts[b]),
        }
    }

    /// Event dump as JSON (rationals as `"p/q"` strings).
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            center: [String; 2],
            r2: String,
            on: &'a [usize],
            depth_p: usize,
        }
        let rows: Vec<Dump> = self
            .events
            .iter()
            .map(|e| Dump {
                center: [e.circle.center.x.to_string(), e.circle.center.y.to_string()],
                r2: e.circle.r2.to_string(),
                on: &e.on,
                depth_p: e.depth_p,
            })
            .collect();
        serde_json::to_string(&rows).expect("event dump serializes")
    }
}

/// Events of `set` with depth at most `depth_cap`, centered in the inner window.
pub fn enumerate_events(set: &WindowedSet, depth_cap: usize) -> Result<EventSet, EventsError> {
    enumerate_with(set, &EnumerateOptions { depth_cap, ..Default::default() })
}

/// Exact depth and on-circle sites of an arbitrary circle.
pub fn depth(set: &WindowedSet, circle: &ExactCircle) -> Result<(usize, Vec<usize>), EventsError> {
    if !set.finite && !disk_fits(&set.outer_window, circle) {
        return Err(EventsError::DiskOutsideWindow);
    }
    let mut p = 0;
    let mut on = Vec::new();
    for (i, s) in set.points.iter().enumerate() {
        match side_of(circle, s) {
            Side::Inside => p += 1,
            Side::On => on.push(i),
            Side::Outside => {}
        }
    }
    Ok((p, on))
}

fn disk_fits(w: &Rect, c: &ExactCircle) -> bool {
    let zero = BigRational::zero();
    let gaps = [
        &c.center.x - &w.x0,
        &w.x1 - &c.center.x,
        &c.center.y - &w.y0,
        &w.y1 - &c.center.y,
    ];
    gaps.iter().all(|g| *g >= zero && (g * g) >= c.r2)
}

/// The largest usable order for the window, capped at `limit`.
pub fn k_max_usable(set: &WindowedSet, limit: usize) -> Result<usize, EventsError> {
    if set.is_empty() {
        return Err(EventsError::EmptySet);
    }
    if set.finite {
        return Ok(limit);
    }
    let pts = float_points(set);
    let grid = SiteGrid::new(&pts, bbox(&pts, &[&set.outer_window, &set.inner_window]));
    Ok(RadiusGrid::build(&pts, &grid, &set.inner_window, &set.outer_window, limit).usable)
}

/// Enumerates events under the given options.
pub fn enumerate_with(set: &WindowedSet, opts: &EnumerateOptions) -> Result<EventSet, EventsError> {
    if set.is_empty() {
        return Err(EventsError::EmptySet);
    }
    if let Some(s) = opts.through_site {
        if s >= set.len() {
            return Err(EventsError::BadSite(s));
        }
    }
    let region = opts.center_region.clone().unwrap_or_else(|| set.inner_window.clone());
    let pts = float_points(set);
    let grid = SiteGrid::new(&pts, bbox(&pts, &[&set.outer_window, &region]));

    let (radii, k_usable) = if set.finite {
        (None, opts.depth_cap + 1)
    } else {
        let rg = RadiusGrid::build(&pts, &grid, &region, &set.outer_window, opts.depth_cap + 1);
        if rg.usable < opts.depth_cap + 1 {
            return Err(EventsError::WindowTooSmall { depth_cap: opts.depth_cap, k_max_usable: rg.usable });
        }
        let k = rg.usable;
        (Some(rg), k)
    };

    if let (Some(s), Some(rg)) = (opts.through_site, &radii) {
        let [sx, sy] = pts[s];
        let [x0, y0, x1, y1] = region.to_f64();
        let half_width = (sx - x0).min(x1 - sx).min(sy - y0).min(y1 - sy);
        if rg.r_max.is_nan() || rg.r_max * (1.0 + 1e-9) >= half_width {
            return Err(EventsError::ZoneRegionTooSmall { site: s, radius_bound: rg.r_max, half_width });
        }
    }

    // Common-denominator frame over sites and window bounds.
    let mut rats: Vec<&BigRational> = set.points.iter().flat_map(|p| [&p.x, &p.y]).collect();
    rats.extend(set.outer_window.corners());
    rats.extend(region.corners());
    let den = common_denominator(rats.iter().copied());
    let scaled: Vec<[BigInt; 2]> = set
        .points
        .iter()
        .map(|p| [scale_to_int(&p.x, &den), scale_to_int(&p.y, &den)])
        .collect();
    let outer_s = set.outer_window.corners().map(|c| scale_to_int(c, &den));
    let region_s = region.corners().map(|c| scale_to_int(c, &den));
    let bits = max_bits(scaled.iter().flatten().chain(outer_s.iter()).chain(region_s.iter()));

    let ctx = Ctx {
        pts: &pts,
        grid: &grid,
        radii: radii.as_ref(),
        region_f: region.to_f64(),
        opts,
        finite: set.finite,
    };
    let (events, frame) = if bits <= FAST_BITS {
        let f = Frame::<I256>::from_scaled(den, &scaled);
        let ev = Engine::new(&f, &outer_s, &region_s, &ctx).run();
        (ev, AnyFrame::Fast(f))
    } else {
        let f = Frame::<BigInt>::from_scaled(den, &scaled);
        let ev = Engine::new(&f, &outer_s, &region_s, &ctx).run();
        (ev, AnyFrame::Big(f))
    };

    Ok(EventSet {
        events,
        k_max_usable: k_usable,
        depth_min: opts.depth_min,
        depth_cap: opts.depth_cap,
        center_region: region,
        source: set.clone(),
        frame,
    })
}

fn float_points(set: &WindowedSet) -> Vec<[f64; 2]> {
    set.points.iter().map(ExactPoint::to_f64).collect()
}

fn bbox(pts: &[[f64; 2]], rects: &[&Rect]) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    let mut grow = |x: f64, y: f64| {
        b[0] = b[0].min(x);
        b[1] = b[1].min(y);
        b[2] = b[2].max(x);
        b[3] = b[3].max(y);
    };
    for p in pts {
        grow(p[0], p[1]);
    }
    for r in rects {
        let [x0, y0, x1, y1] = r.to_f64();
        grow(x0, y0);
        grow(x1, y1);
    }
    b
}

/// Uniform bucket grid over the sites (float positions, pruning only).
struct SiteGrid {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl SiteGrid {
    fn new(pts: &[[f64; 2]], b: [f64; 4]) -> Self {
        let w = (b[2] - b[0]).max(1e-9);
        let h = (b[3] - b[1]).max(1e-9);
        let mut cell = (w * h / pts.len().max(1) as f64).sqrt() * 1.5;
        cell = cell.max(w / 2048.0).max(h / 2048.0);
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        let mut g = SiteGrid { x0: b[0], y0: b[1], cell, nx, ny, cells: vec![] };
        for (i, p) in pts.iter().enumerate() {
            let (cx, cy) = g.cell_of(p[0], p[1]);
            cells[cy * nx + cx].push(i as u32);
        }
        g.cells = cells;
        g
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let cx = ((x - self.x0) / self.cell).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = ((y - self.y0) / self.cell).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        (cx, cy)
    }

    fn for_each_in_box(&self, x0: f64, y0: f64, x1: f64, y1: f64, mut f: impl FnMut(usize)) {
        let (ax, ay) = self.cell_of(x0, y0);
        let (bx, by) = self.cell_of(x1, y1);
        for cy in ay..=by {
            for cx in ax..=bx {
                for &i in &self.cells[cy * self.nx + cx] {
                    f(i as usize);
                }
            }
        }
    }

    /// Sorted distances from `g` to its `limit` nearest sites (fewer if the
    /// set is smaller). `g` must lie inside the grid's bounding box.
    fn knn_dists(&self, pts: &[[f64; 2]], g: [f64; 2], limit: usize) -> Vec<f64> {
        let (cx, cy) = self.cell_of(g[0], g[1]);
        let max_ring = self.nx.max(self.ny);
        let mut d: Vec<f64> = Vec::new();
        for r in 0..=max_ring {
            let (rx0, rx1) = (cx as isize - r as isize, cx as isize + r as isize);
            let (ry0, ry1) = (cy as isize - r as isize, cy as isize + r as isize);
            for yy in ry0..=ry1 {
                if yy < 0 || yy >= self.ny as isize {
                    continue;
                }
                let on_edge_row = yy == ry0 || yy == ry1;
                let mut xx = rx0;
                while xx <= rx1 {
                    if xx >= 0 && xx < self.nx as isize {
                        for &i in &self.cells[yy as usize * self.nx + xx as usize] {
                            let p = pts[i as usize];
                            d.push((p[0] - g[0]).hypot(p[1] - g[1]));
                        }
                    }
                    xx += if on_edge_row || r == 0 { 1 } else { (rx1 - rx0).max(1) };
                }
            }
            if d.len() >= limit {
                // Every unvisited site is farther than r cells away.
                let reach = r as f64 * self.cell;
                d.select_nth_unstable_by(limit - 1, |a, b| a.total_cmp(b));
                if d[limit - 1] <= reach {
                    break;
                }
            }
        }
        d.sort_by(|a, b| a.total_cmp(b));
        d.truncate(limit);
        d
    }
}

/// Conservative per-cell bounds over a center region.
struct RadiusGrid {
    x0: f64,
    y0: f64,
    cw: f64,
    ch: f64,
    nx: usize,
    ny: usize,
    /// Upper bound on the radius of any event of depth below `limit`
    /// centered in the cell whose disk fits the outer window.
    r: Vec<f64>,
    r_max: f64,
    /// Minimum over cells of the number of sites guaranteed in every
    /// fitting disk, capped at `limit`.
    usable: usize,
}

impl RadiusGrid {
    fn build(pts: &[[f64; 2]], grid: &SiteGrid, region: &Rect, outer: &Rect, limit: usize) -> Self {
        let [x0, y0, x1, y1] = region.to_f64();
        let [ox0, oy0, ox1, oy1] = outer.to_f64();
        let (w, h) = (x1 - x0, y1 - y0);
        let spacing = ((ox1 - ox0) * (oy1 - oy0) / pts.len().max(1) as f64).sqrt();
        let step = 0.5 * spacing;
        let nx = ((w / step).ceil() as usize).clamp(1, 256);
        let ny = ((h / step).ceil() as usize).clamp(1, 256);
        let (cw, ch) = (w / nx as f64, h / ny as f64);
        let delta = 0.5 * cw.hypot(ch) * (1.0 + 1e-9);
        let cells: Vec<(f64, usize)> = (0..nx * ny)
            .into_par_iter()
            .map(|c| {
                let g = [x0 + (c % nx) as f64 * cw + 0.5 * cw, y0 + (c / nx) as f64 * ch + 0.5 * ch];
                let wall = (g[0] - ox0).min(ox1 - g[0]).min(g[1] - oy0).min(oy1 - g[1]);
                let d = grid.knn_dists(pts, g, limit);
                let safe = (wall - 2.0 * delta) * (1.0 - 1e-9) - 1e-12;
                let usable = d.iter().filter(|&&v| v <= safe).count();
                let knn = if d.len() >= limit { d[limit - 1] } else { f64::INFINITY };
                let bound = knn.min(wall.max(0.0)) * (1.0 + 1e-9) + delta + 1e-12;
                (bound, usable)
            })
            .collect();
        let r: Vec<f64> = cells.iter().map(|c| c.0).collect();
        RadiusGrid {
            x0,
            y0,
            cw,
            ch,
            nx,
            ny,
            r_max: r.iter().copied().fold(0.0, f64::max),
            usable: cells.iter().map(|c| c.1).min().unwrap_or(0),
            r,
        }
    }

    fn bound_at(&self, x: f64, y: f64) -> f64 {
        let cx = ((x - self.x0) / self.cw).floor().clamp(0.0, (self.nx - 1) as f64) as usize;
        let cy = ((y - self.y0) / self.ch).floor().clamp(0.0, (self.ny - 1) as f64) as usize;
        self.r[cy * self.nx + cx]
    }
}

struct Ctx<'a> {
    pts: &'a [[f64; 2]],
    grid: &'a SiteGrid,
    radii: Option<&'a RadiusGrid>,
    region_f: [f64; 4],
    opts: &'a EnumerateOptions,
    finite: bool,
}

struct Engine<'a, R: Ring> {
    frame: &'a Frame<R>,
    outer: [R; 4],
    region: [R; 4],
    ctx: &'a Ctx<'a>,
    den_f: f64,
    scale_f: f64,
}

/// Exact circle data relative to the first site of a triple: the center is
/// `a + (ox, oy) / d` with `d > 0`.
struct RelCircle<R> {
    a: usize,
    d: R,
    o: Vec2<R>,
    /// Sign that turns `incircle_rel` into "positive = inside".
    flip: bool,
}

impl<'a, R: Ring> Engine<'a, R> {
    fn new(frame: &'a Frame<R>, outer: &[BigInt; 4], region: &[BigInt; 4], ctx: &'a Ctx<'a>) -> Self {
        let scale_f = ctx
            .pts
            .iter()
            .map(|p| p[0].abs().max(p[1].abs()))
            .fold(1.0, f64::max);
        Engine {
            frame,
            outer: [0, 1, 2, 3].map(|i| R::from_big(&outer[i])),
            region: [0, 1, 2, 3].map(|i| R::from_big(&region[i])),
            ctx,
            den_f: kernel::Ring::to_f64(&frame.den),
            scale_f,
        }
    }

    fn run(&self) -> Vec<CircleEvent> {
        let n = self.ctx.pts.len();
        let r_max = self.ctx.radii.map_or(f64::INFINITY, |r| r.r_max);
        let pair_reach = 2.0 * r_max * (1.0 + 1e-9) + 1e-9 * self.scale_f;

        // Sites that can lie on a circle centered in the region.
        let candidates: Vec<usize> = if self.ctx.finite || !r_max.is_finite() {
            (0..n).collect()
        } else {
            let [x0, y0, x1, y1] = self.ctx.region_f;
            let reach = r_max * (1.0 + 1e-9) + 1e-9 * self.scale_f;
            (0..n)
                .filter(|&i| {
                    let [x, y] = self.ctx.pts[i];
                    let dx = (x0 - x).max(x - x1).max(0.0);
                    let dy = (y0 - y).max(y - y1).max(0.0);
                    dx.hypot(dy) <= reach
                })
                .collect()
        };
        let is_candidate = {
            let mut v = vec![false; n];
            for &i in &candidates {
                v[i] = true;
            }
            v
        };
        let neighbors = |i: usize| -> Vec<usize> {
            let [x, y] = self.ctx.pts[i];
            let mut out = Vec::new();
            if pair_reach.is_finite() {
                self.ctx.grid.for_each_in_box(x - pair_reach, y - pair_reach, x + pair_reach, y + pair_reach, |j| {
                    if j != i && is_candidate[j] {
                        let q = self.ctx.pts[j];
                        if (q[0] - x).hypot(q[1] - y) <= pair_reach {
                            out.push(j);
                        }
                    }
                });
            } else {
                out.extend(candidates.iter().copied().filter(|&j| j != i));
            }
            out.sort_unstable();
            out
        };

        let pair_ok = |j: usize, m: usize| {
            let (p, q) = (self.ctx.pts[j], self.ctx.pts[m]);
            (p[0] - q[0]).hypot(p[1] - q[1]) <= pair_reach
        };

        match self.ctx.opts.through_site {
            Some(s) => {
                let nb = neighbors(s);
                let mut out = Vec::new();
                for (jj, &j) in nb.iter().enumerate() {
                    for &m in &nb[jj + 1..] {
                        if pair_ok(j, m) {
                            if let Some(e) = self.try_triple(s, j, m, true) {
                                out.push(e);
                            }
                        }
                    }
                }
                out
            }
            None => candidates
                .par_iter()
                .map(|&i| {
                    let nb: Vec<usize> = neighbors(i).into_iter().filter(|&j| j > i).collect();
                    let mut out = Vec::new();
                    for (jj, &j) in nb.iter().enumerate() {
                        for &m in &nb[jj + 1..] {
                            if pair_ok(j, m) {
                                if let Some(e) = self.try_triple(i, j, m, false) {
                                    out.push(e);
                                }
                            }
                        }
                    }
                    out
                })
                .flatten()
                .collect(),
        }
    }

    /// Float screen: `false` only when the triple certainly fails the
    /// center-region or radius constraints.
    fn float_screen(&self, i: usize, j: usize, m: usize) -> bool {
        let Some(radii) = self.ctx.radii else { return true };
        let a = self.ctx.pts[i];
        let b = [self.ctx.pts[j][0] - a[0], self.ctx.pts[j][1] - a[1]];
        let c = [self.ctx.pts[m][0] - a[0], self.ctx.pts[m][1] - a[1]];
        let nb = b[0] * b[0] + b[1] * b[1];
        let nc = c[0] * c[0] + c[1] * c[1];
        let d = 2.0 * (b[0] * c[1] - b[1] * c[0]);
        if d.abs() < 1e-6 * (nb * nc).sqrt() {
            return true;
        }
        let ox = (c[1] * nb - b[1] * nc) / d;
        let oy = (b[0] * nc - c[0] * nb) / d;
        let r = ox.hypot(oy);
        let (cx, cy) = (a[0] + ox, a[1] + oy);
        let tol = 1e-7 * (self.scale_f + r);
        let [x0, y0, x1, y1] = self.ctx.region_f;
        if cx < x0 - tol || cx > x1 + tol || cy < y0 - tol || cy > y1 + tol {
            return false;
        }
        r <= radii.bound_at(cx, cy) + tol
    }

    fn try_triple(&self, i: usize, j: usize, m: usize, through: bool) -> Option<CircleEvent> {
        if !self.float_screen(i, j, m) {
            return None;
        }
        let pts = &self.frame.pts;
        let a = &pts[i];
        let b = sub2(&pts[j], a);
        let c = sub2(&pts[m], a);
        let cr = cross2(&b, &c);
        let orient = cr.sign();
        if orient == Ordering::Equal {
            return None;
        }
        let nb = norm2(&b);
        let nc = norm2(&c);
        let two = R::from_i64(2);
        let mut d = two.mul(&cr);
        let mut o = [
            c[1].mul(&nb).sub(&b[1].mul(&nc)),
            b[0].mul(&nc).sub(&c[0].mul(&nb)),
        ];
        if orient == Ordering::Less {
            d = d.neg();
            o = [o[0].neg(), o[1].neg()];
        }
        let rc = RelCircle { a: i, d, o, flip: orient == Ordering::Less };

        if !self.ctx.finite
            && (!self.center_in_region(&rc) || !self.disk_fits(&rc)) {
                return None;
            }
        self.scan(rc, [i, j, m], through)
    }

    fn center_in_region(&self, rc: &RelCircle<R>) -> bool {
        let a = &self.frame.pts[rc.a];
        let [x0, y0, x1, y1] = &self.region;
        // x0 <= ax + ox/d < x1, and likewise for y.
        let lo_x = x0.sub(&a[0]).mul(&rc.d);
        let hi_x = x1.sub(&a[0]).mul(&rc.d);
        let lo_y = y0.sub(&a[1]).mul(&rc.d);
        let hi_y = y1.sub(&a[1]).mul(&rc.d);
        lo_x <= rc.o[0] && rc.o[0] < hi_x && lo_y <= rc.o[1] && rc.o[1] < hi_y
    }

    fn disk_fits(&self, rc: &RelCircle<R>) -> bool {
        let a = &self.frame.pts[rc.a];
        let r2 = norm2(&rc.o);
        let [x0, y0, x1, y1] = &self.outer;
        // Scaled gaps from the center to each wall, times d.
        let gaps = [
            rc.o[0].sub(&x0.sub(&a[0]).mul(&rc.d)),
            x1.sub(&a[0]).mul(&rc.d).sub(&rc.o[0]),
            rc.o[1].sub(&y0.sub(&a[1]).mul(&rc.d)),
            y1.sub(&a[1]).mul(&rc.d).sub(&rc.o[1]),
        ];
        gaps.iter().all(|g| g.sign() != Ordering::Less && g.mul(g) >= r2)
    }

    fn scan(&self, rc: RelCircle<R>, key: [usize; 3], through: bool) -> Option<CircleEvent> {
        let pts = &self.frame.pts;
        let a = &pts[rc.a];
        let b = sub2(&pts[key[1]], a);
        let c = sub2(&pts[key[2]], a);
        let cap = self.ctx.opts.depth_cap;
        let m_max = key[2];

        let d_f = rc.d.to_f64();
        let (ox, oy) = (rc.o[0].to_f64() / d_f / self.den_f, rc.o[1].to_f64() / d_f / self.den_f);
        let af = self.ctx.pts[rc.a];
        let (cx, cy) = (af[0] + ox, af[1] + oy);
        let r = ox.hypot(oy);
        let pad = r * 1e-7 + 1e-9 * self.scale_f;

        let mut inside = Vec::new();
        let mut on = vec![key[0], key[1], key[2]];
        let mut reject = false;
        self.ctx.grid.for_each_in_box(cx - r - pad, cy - r - pad, cx + r + pad, cy + r + pad, |s| {
            if reject || s == key[0] || s == key[1] || s == key[2] {
                return;
            }
            let p = sub2(&pts[s], a);
            let mut v = incircle_rel(&b, &c, &p).sign();
            if rc.flip {
                v = v.reverse();
            }
            match v {
                Ordering::Greater => {
                    inside.push(s);
                    if inside.len() > cap {
                        reject = true;
                    }
                }
                Ordering::Equal => {
                    // Each circle is reported once, from its canonical triple.
                    let blocks = if through { s < m_max && s != key[1] } else { s < m_max };
                    if blocks {
                        reject = true;
                    }
                    on.push(s);
                }
                Ordering::Less => {}
            }
        });
        if reject || inside.len() < self.ctx.opts.depth_min {
            return None;
        }
        if through {
            // Only the two smallest non-anchor sites may form the key.
            let anchor = key[0];
            let mut others: Vec<usize> = on.iter().copied().filter(|&s| s != anchor).collect();
            others.sort_unstable();
            if others[0] != key[1] || others[1] != key[2] {
                return None;
            }
        }
        inside.sort_unstable();
        self.sort_ccw(&rc, &mut on);
        let center = ExactPoint::new(
            BigRational::from_integer(a[0].to_big()) / BigRational::from_integer(self.frame.den.clone())
                + self.frame.to_rational(&rc.o[0], &rc.d),
            BigRational::from_integer(a[1].to_big()) / BigRational::from_integer(self.frame.den.clone())
                + self.frame.to_rational(&rc.o[1], &rc.d),
        );
        let d2 = rc.d.mul(&rc.d);
        let r2 = self.frame.to_rational(&norm2(&rc.o), &d2) / BigRational::from_integer(self.frame.den.clone());
        Some(CircleEvent {
            circle: ExactCircle::new(center, r2),
            on,
            depth_p: inside.len(),
            inside,
        })
    }

    /// Counterclockwise order around the center starting at polar angle 0.
    fn sort_ccw(&self, rc: &RelCircle<R>, on: &mut [usize]) {
        let a = &self.frame.pts[rc.a];
        let rel = |s: usize| -> Vec2<R> {
            let p = sub2(&self.frame.pts[s], a);
            [p[0].mul(&rc.d).sub(&rc.o[0]), p[1].mul(&rc.d).sub(&rc.o[1])]
        };
        let upper = |w: &Vec2<R>| {
            w[1].sign() == Ordering::Greater || (w[1].sign() == Ordering::Equal && w[0].sign() == Ordering::Greater)
        };
        let mut keyed: Vec<(usize, Vec2<R>)> = on.iter().map(|&s| (s, rel(s))).collect();
        keyed.sort_by(|(_, u), (_, v)| {
            let (hu, hv) = (upper(u), upper(v));
            if hu != hv {
                return if hu { Ordering::Less } else { Ordering::Greater };
            }
            R::zero().cmp(&cross2(u, v))
        });
        for (slot, (s, _)) in on.iter_mut().zip(keyed) {
            *slot = s;
        }
    }
}

/// Float approximation of an event's radius.
pub fn radius_f64(e: &CircleEvent) -> f64 {
    rat_to_f64(&e.circle.r2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactgeom::{circumcircle, rat};
    use crate::pointsets::{integer_lattice, random_periodic, uniform_finite};

    fn find(es: &EventSet, cx: BigRational, cy: BigRational, r2: BigRational) -> Option<&CircleEvent> {
        es.events
            .iter()
            .find(|e| e.circle.center.x == cx && e.circle.center.y == cy && e.circle.r2 == r2)
    }

    #[test]
    fn lattice_unit_circle() {
        let z = integer_lattice(9).unwrap();
        let es = enumerate_events(&z, 2).unwrap();
        let e = find(&es, rat(1, 2), rat(1, 2), rat(1, 2)).expect("unit-square circle");
        assert_eq!(e.on.len(), 4);
        assert_eq!(e.depth_p, 0);
    }

    #[test]
    fn lattice_eight_point_circle() {
        let z = integer_lattice(15).unwrap();
        let es = enumerate_events(&z, 4).unwrap();
        let e = find(&es, rat(1, 2), rat(1, 2), rat(5, 2)).expect("r2=5/2 circle");
        assert_eq!(e.on.len(), 8);
        assert_eq!(e.depth_p, 4);
        let inside: Vec<&ExactPoint> = e.inside.iter().map(|&i| es.site(i)).collect();
        for (x, y) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            assert!(inside.contains(&&ExactPoint::from_ints(x, y)));
        }
    }

    #[test]
    fn depth_operation() {
        let z = integer_lattice(9).unwrap();
        let c = ExactCircle::new(ExactPoint::new(rat(1, 2), rat(1, 2)), rat(1, 2));
        let (p, on) = depth(&z, &c).unwrap();
        assert_eq!((p, on.len()), (0, 4));
        let c = ExactCircle::new(ExactPoint::new(rat(1, 2), rat(1, 2)), rat(5, 2));
        assert_eq!(depth(&z, &c).unwrap().0, 4);
        let tiny = ExactCircle::new(ExactPoint::new(rat(1, 2), rat(1, 3)), rat(1, 100));
        assert_eq!(depth(&z, &tiny).unwrap(), (0, vec![]));
        let huge = ExactCircle::new(ExactPoint::origin(), rat(400, 1));
        assert_eq!(depth(&z, &huge), Err(EventsError::DiskOutsideWindow));
    }

    #[test]
    fn window_too_small_is_reported() {
        let z = integer_lattice(3).unwrap();
        match enumerate_events(&z, 40) {
            Err(EventsError::WindowTooSmall { k_max_usable, .. }) => assert!(k_max_usable < 41),
            other => panic!("expected WindowTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn generic_events_have_three_sites_and_recheck() {
        let s = random_periodic(30, 3, 5).unwrap();
        let es = enumerate_events(&s, 4).unwrap();
        assert!(!es.events.is_empty());
        for e in &es.events {
            assert_eq!(e.on.len(), 3);
            let (p, on) = depth(&s, &e.circle).unwrap();
            assert_eq!(p, e.depth_p);
            let mut sorted = e.on.clone();
            sorted.sort_unstable();
            assert_eq!(on, sorted);
            let c = circumcircle(es.site(e.on[0]), es.site(e.on[1]), es.site(e.on[2])).unwrap();
            assert_eq!(c, e.circle);
        }
        let mut keys: Vec<_> = es.events.iter().map(|e| (e.circle.center.clone(), e.circle.r2.clone())).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), es.events.len());
    }

    /// Brute force over all triples of a finite set.
    fn brute(set: &WindowedSet, cap: usize) -> Vec<(ExactCircle, usize, usize)> {
        let n = set.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for m in j + 1..n {
                    let Ok(c) = circumcircle(&set.points[i], &set.points[j], &set.points[m]) else { continue };
                    let (p, on) = depth(set, &c).unwrap();
                    if p <= cap && on[0] == i && on[1] == j && on[2] == m {
                        out.push((c, p, on.len()));
                    }
                }
            }
        }
        out.sort_by(|a, b| (&a.0.center, &a.0.r2).cmp(&(&b.0.center, &b.0.r2)));
        out
    }

    #[test]
    fn finite_set_matches_brute_force() {
        let s = uniform_finite(25, 3);
        let es = enumerate_events(&s, 6).unwrap();
        let mut got: Vec<_> = es.events.iter().map(|e| (e.circle.clone(), e.depth_p, e.on.len())).collect();
        got.sort_by(|a, b| (&a.0.center, &a.0.r2).cmp(&(&b.0.center, &b.0.r2)));
        assert_eq!(got, brute(&s, 6));
    }

    #[test]
    fn on_list_is_counterclockwise_from_polar_zero() {
        let z = integer_lattice(9).unwrap();
        let es = enumerate_events(&z, 1).unwrap();
        let e = find(&es, rat(1, 2), rat(1, 2), rat(1, 2)).unwrap();
        let order: Vec<&ExactPoint> = e.on.iter().map(|&i| es.site(i)).collect();
        let expect = [(1, 1), (0, 1), (0, 0), (1, 0)].map(|(x, y)| ExactPoint::from_ints(x, y));
        assert_eq!(order, expect.iter().collect::<Vec<_>>());
    }

    #[test]
    fn through_site_matches_filter() {
        let s = random_periodic(20, 5, 8).unwrap();
        let site = s.points.iter().position(|p| s.inner_window.contains_half_open(p)).unwrap();
        let region = Rect::new(rat(-1, 1), rat(-1, 1), rat(2, 1), rat(2, 1));
        let all = enumerate_with(
            &s,
            &EnumerateOptions { depth_cap: 3, center_region: Some(region.clone()), ..Default::default() },
        )
        .unwrap();
        let mut want: Vec<_> = all.events.iter().filter(|e| e.on.contains(&site)).cloned().collect();
        let zone = enumerate_with(
            &s,
            &EnumerateOptions { depth_cap: 3, center_region: Some(region), through_site: Some(site), ..Default::default() },
        )
        .unwrap();
        let mut got = zone.events.clone();
        let key = |e: &CircleEvent| (e.circle.center.clone(), e.circle.r2.clone());
        want.sort_by_key(key);
        got.sort_by_key(key);
        assert_eq!(got, want);
    }

    #[test]
    fn window_growth_keeps_events() {
        let small = enumerate_events(&integer_lattice(9).unwrap(), 3).unwrap();
        let big = enumerate_events(&integer_lattice(15).unwrap(), 3).unwrap();
        let key = |e: &CircleEvent| (e.circle.center.clone(), e.circle.r2.clone());
        let mut a: Vec<_> = small.events.iter().map(key).collect();
        let mut b: Vec<_> = big.events.iter().map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
