//! Planar point processes on a square window: homogeneous Poisson, the
//! Poisson hole process, the Matérn cluster process and its Cox users, plus
//! nearest-point queries under the (optionally toroidal) window metric.

use std::f64::consts::PI;
use std::fmt;
use std::io::{self, Write};

use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::rng::RandomStream;

/// Largest expected point count a single sampler call will accept.
pub const MAX_EXPECTED_POINTS: f64 = 5.0e7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PointProcessError {
    #[error("expected point count {expected:.3e} exceeds the sampler cap {cap:.3e}")]
    CapExceeded { expected: f64, cap: f64 },
    #[error("query against an empty point set")]
    EmptySet,
    #[error("invalid window half-extent {0}")]
    InvalidWindow(f64),
    #[error("window half-extent {half_extent} m is below the edge-effect guard {required} m")]
    WindowTooSmall { half_extent: f64, required: f64 },
    #[error("invalid intensity {0}")]
    InvalidIntensity(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Cr,
    Mbs,
    Sbs,
    Mu,
    Su,
    /// Cluster centre of the capacity-aided layout.
    Hotspot,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Cr => "CR",
            Role::Mbs => "MBS",
            Role::Sbs => "SBS",
            Role::Mu => "MU",
            Role::Su => "SU",
            Role::Hotspot => "HOTSPOT",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The square `[-L, L]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    half_extent: f64,
    toroidal: bool,
}

impl Window {
    pub fn new(half_extent: f64, toroidal: bool) -> Result<Self, PointProcessError> {
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(PointProcessError::InvalidWindow(half_extent));
        }
        Ok(Window {
            half_extent,
            toroidal,
        })
    }

    /// Window that also enforces `L >= 10 * max(R_c, (pi * lambda_min)^-1/2)`.
    pub fn guarded(
        half_extent: f64,
        toroidal: bool,
        r_c: f64,
        min_density: f64,
    ) -> Result<Self, PointProcessError> {
        let required = Self::guard_extent(r_c, min_density);
        if half_extent < required {
            return Err(PointProcessError::WindowTooSmall {
                half_extent,
                required,
            });
        }
        Self::new(half_extent, toroidal)
    }

    pub fn guard_extent(r_c: f64, min_density: f64) -> f64 {
        10.0 * r_c.max((PI * min_density).powf(-0.5))
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn is_toroidal(&self) -> bool {
        self.toroidal
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half_extent
    }

    pub fn area(&self) -> f64 {
        self.side() * self.side()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= -self.half_extent
            && p.x < self.half_extent
            && p.y >= -self.half_extent
            && p.y < self.half_extent
    }

    fn wrap_coord(&self, v: f64) -> f64 {
        let side = self.side();
        let w = (v + self.half_extent).rem_euclid(side) - self.half_extent;
        // rem_euclid can round up to `side` for tiny negative inputs.
        if w >= self.half_extent {
            -self.half_extent
        } else {
            w
        }
    }

    /// Maps a point back into the window (torus only); `None` if it falls
    /// outside a non-toroidal window.
    pub fn place(&self, p: Point) -> Option<Point> {
        if self.toroidal {
            Some(Point::new(self.wrap_coord(p.x), self.wrap_coord(p.y)))
        } else if self.contains(p) {
            Some(p)
        } else {
            None
        }
    }

    /// Displacement `to - from` under the window metric.
    pub fn delta(&self, from: Point, to: Point) -> (f64, f64) {
        let mut dx = to.x - from.x;
        let mut dy = to.y - from.y;
        if self.toroidal {
            let side = self.side();
            dx -= side * (dx / side).round();
            dy -= side * (dy / side).round();
        }
        (dx, dy)
    }

    pub fn distance_sq(&self, a: Point, b: Point) -> f64 {
        let (dx, dy) = self.delta(a, b);
        dx * dx + dy * dy
    }

    pub fn distance(&self, a: Point, b: Point) -> f64 {
        self.distance_sq(a, b).sqrt()
    }

    pub fn uniform_point(&self, rng: &mut RandomStream) -> Point {
        let l = self.half_extent;
        Point::new(rng.uniform_in(-l, l), rng.uniform_in(-l, l))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub role: Role,
    pub points: Vec<Point>,
    /// Cluster parent of each point, for cluster and Cox samples.
    pub parent_index: Option<Vec<usize>>,
}

impl PointSet {
    pub fn new(role: Role, points: Vec<Point>) -> Self {
        PointSet {
            role,
            points,
            parent_index: None,
        }
    }

    pub fn empty(role: Role) -> Self {
        Self::new(role, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn parent_of(&self, i: usize) -> Option<usize> {
        self.parent_index.as_ref().map(|p| p[i])
    }
}

pub(crate) fn poisson_count(mean: f64, rng: &mut RandomStream) -> Result<usize, PointProcessError> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(PointProcessError::InvalidIntensity(mean));
    }
    if mean > MAX_EXPECTED_POINTS {
        return Err(PointProcessError::CapExceeded {
            expected: mean,
            cap: MAX_EXPECTED_POINTS,
        });
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|_| PointProcessError::InvalidIntensity(mean))?;
    Ok(dist.sample(rng) as usize)
}

pub(crate) fn uniform_in_disk(centre: Point, radius: f64, rng: &mut RandomStream) -> Point {
    let r = radius * rng.uniform().sqrt();
    let theta = 2.0 * PI * rng.uniform();
    Point::new(centre.x + r * theta.cos(), centre.y + r * theta.sin())
}

/// Homogeneous PPP of the given intensity on the window.
pub fn sample_ppp(
    lambda: f64,
    window: &Window,
    role: Role,
    rng: &mut RandomStream,
) -> Result<PointSet, PointProcessError> {
    if !(lambda >= 0.0) {
        return Err(PointProcessError::InvalidIntensity(lambda));
    }
    let n = poisson_count(lambda * window.area(), rng)?;
    let points = (0..n).map(|_| window.uniform_point(rng)).collect();
    Ok(PointSet::new(role, points))
}

/// Poisson hole process: a PPP of intensity `lambda_sc_prime` with every
/// point strictly closer than `r_c` to an MBS removed. Points at exactly
/// `r_c` are kept.
pub fn sample_php(
    mbs: &PointSet,
    lambda_sc_prime: f64,
    r_c: f64,
    window: &Window,
    rng: &mut RandomStream,
) -> Result<PointSet, PointProcessError> {
    debug_assert_eq!(mbs.role, Role::Mbs);
    let candidates = sample_ppp(lambda_sc_prime, window, Role::Sbs, rng)?;
    if mbs.is_empty() {
        return Ok(candidates);
    }
    let index = GridIndex::new(mbs, *window, r_c);
    let r2 = r_c * r_c;
    let points = candidates
        .points
        .into_iter()
        .filter(|&p| !index.any_within_sq(p, r2))
        .collect();
    Ok(PointSet::new(Role::Sbs, points))
}

/// Matérn cluster process. Returns `(parents, daughters)`; each daughter
/// records its parent. On a torus, daughters wrap around the boundary; on a
/// plain window, daughters that fall outside are dropped.
pub fn sample_mcp(
    lambda_sc_prime: f64,
    c_bar: f64,
    r_c: f64,
    window: &Window,
    rng: &mut RandomStream,
) -> Result<(PointSet, PointSet), PointProcessError> {
    let parents = sample_ppp(lambda_sc_prime, window, Role::Hotspot, rng)?;
    let daughters = scatter_clusters(&parents, c_bar, r_c, window, Role::Sbs, rng)?;
    Ok((parents, daughters))
}

fn scatter_clusters(
    parents: &PointSet,
    c_bar: f64,
    r_c: f64,
    window: &Window,
    role: Role,
    rng: &mut RandomStream,
) -> Result<PointSet, PointProcessError> {
    if c_bar * parents.len() as f64 > MAX_EXPECTED_POINTS {
        return Err(PointProcessError::CapExceeded {
            expected: c_bar * parents.len() as f64,
            cap: MAX_EXPECTED_POINTS,
        });
    }
    let mut points = Vec::new();
    let mut parent_index = Vec::new();
    for (i, &centre) in parents.points.iter().enumerate() {
        let n = poisson_count(c_bar, rng)?;
        for _ in 0..n {
            if let Some(p) = window.place(uniform_in_disk(centre, r_c, rng)) {
                points.push(p);
                parent_index.push(i);
            }
        }
    }
    Ok(PointSet {
        role,
        points,
        parent_index: Some(parent_index),
    })
}

/// Cox users of the capacity-aided layout: `Poisson(c_bar)` SUs uniform in
/// every hot-spot ball, and a PPP of MUs over the window. Returns `(sus, mus)`.
pub fn sample_cox_users(
    parents: &PointSet,
    c_bar: f64,
    r_c: f64,
    lambda_ut_m: f64,
    window: &Window,
    rng: &mut RandomStream,
) -> Result<(PointSet, PointSet), PointProcessError> {
    let sus = scatter_clusters(parents, c_bar, r_c, window, Role::Su, rng)?;
    let mus = sample_ppp(lambda_ut_m, window, Role::Mu, rng)?;
    Ok((sus, mus))
}

/// Nearest point of `set` to `q`, ties broken by lowest index.
pub fn nearest(q: Point, set: &PointSet, window: &Window) -> Result<(usize, f64), PointProcessError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &p) in set.points.iter().enumerate() {
        let d2 = window.distance_sq(q, p);
        if best.is_none_or(|(_, b)| d2 < b) {
            best = Some((i, d2));
        }
    }
    best.map(|(i, d2)| (i, d2.sqrt()))
        .ok_or(PointProcessError::EmptySet)
}

/// Uniform bucket grid over the window for neighbourhood queries.
#[derive(Debug, Clone)]
pub struct GridIndex<'a> {
    points: &'a [Point],
    window: Window,
    cells_per_side: usize,
    cell: f64,
    buckets: Vec<Vec<u32>>,
}

impl<'a> GridIndex<'a> {
    /// `cell_hint` is the preferred cell side in meters.
    pub fn new(set: &'a PointSet, window: Window, cell_hint: f64) -> Self {
        let side = window.side();
        // Keep the bucket count proportional to the point count.
        let by_points = ((set.len() as f64).sqrt().ceil() as usize).max(1);
        let by_hint = ((side / cell_hint.max(1e-9)).floor() as usize).max(1);
        let cells_per_side = by_hint.min(by_points.max(1) * 2).clamp(1, 4096);
        let cell = side / cells_per_side as f64;
        let mut buckets = vec![Vec::new(); cells_per_side * cells_per_side];
        for (i, &p) in set.points.iter().enumerate() {
            let (cx, cy) = Self::cell_of_raw(p, window.half_extent(), cell, cells_per_side);
            buckets[cy * cells_per_side + cx].push(i as u32);
        }
        GridIndex {
            points: &set.points,
            window,
            cells_per_side,
            cell,
            buckets,
        }
    }

    fn cell_of_raw(p: Point, half: f64, cell: f64, n: usize) -> (usize, usize) {
        let fx = ((p.x + half) / cell).floor();
        let fy = ((p.y + half) / cell).floor();
        let clamp = |v: f64| (v.max(0.0) as usize).min(n - 1);
        (clamp(fx), clamp(fy))
    }

    fn for_each_in_ring(&self, cx: usize, cy: usize, k: usize, mut f: impl FnMut(u32)) {
        let n = self.cells_per_side as isize;
        let k = k as isize;
        let (cx, cy) = (cx as isize, cy as isize);
        let mut visit = |x: isize, y: isize| {
            let (x, y) = if self.window.is_toroidal() {
                (x.rem_euclid(n), y.rem_euclid(n))
            } else if x < 0 || y < 0 || x >= n || y >= n {
                return;
            } else {
                (x, y)
            };
            for &i in &self.buckets[(y * n + x) as usize] {
                f(i);
            }
        };
        if k == 0 {
            visit(cx, cy);
            return;
        }
        for x in (cx - k)..=(cx + k) {
            visit(x, cy - k);
            visit(x, cy + k);
        }
        for y in (cy - k + 1)..=(cy + k - 1) {
            visit(cx - k, y);
            visit(cx + k, y);
        }
    }

    /// Rings needed before every cell has been visited once.
    fn full_cover_ring(&self) -> usize {
        if self.window.is_toroidal() {
            self.cells_per_side / 2
        } else {
            self.cells_per_side
        }
    }

    /// Nearest indexed point, ties broken by lowest index.
    pub fn nearest(&self, q: Point) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let (cx, cy) = Self::cell_of_raw(q, self.window.half_extent(), self.cell, self.cells_per_side);
        // Rings that would overlap themselves on a torus: fall back to a scan.
        let wrap_limit = if self.window.is_toroidal() {
            (self.cells_per_side.saturating_sub(1)) / 2
        } else {
            usize::MAX
        };
        let mut best: Option<(u32, f64)> = None;
        let mut k = 0usize;
        loop {
            if k > wrap_limit {
                return self.scan_nearest(q);
            }
            self.for_each_in_ring(cx, cy, k, |i| {
                let d2 = self.window.distance_sq(q, self.points[i as usize]);
                match best {
                    Some((bi, bd)) if d2 > bd || (d2 == bd && i > bi) => {}
                    _ => best = Some((i, d2)),
                }
            });
            if let Some((i, d2)) = best {
                let reach = k as f64 * self.cell;
                if d2.sqrt() < reach {
                    return Some((i as usize, d2.sqrt()));
                }
            }
            k += 1;
            if k > self.full_cover_ring() + 1 && !self.window.is_toroidal() {
                return best.map(|(i, d2)| (i as usize, d2.sqrt()));
            }
        }
    }

    fn scan_nearest(&self, q: Point) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &p) in self.points.iter().enumerate() {
            let d2 = self.window.distance_sq(q, p);
            if best.is_none_or(|(_, b)| d2 < b) {
                best = Some((i, d2));
            }
        }
        best.map(|(i, d2)| (i, d2.sqrt()))
    }

    /// Whether any indexed point lies strictly within `sqrt(r2)` of `q`.
    pub fn any_within_sq(&self, q: Point, r2: f64) -> bool {
        let (cx, cy) = Self::cell_of_raw(q, self.window.half_extent(), self.cell, self.cells_per_side);
        let rings = (r2.sqrt() / self.cell).ceil() as usize + 1;
        if self.window.is_toroidal() && 2 * rings + 1 >= self.cells_per_side {
            return self
                .points
                .iter()
                .any(|&p| self.window.distance_sq(q, p) < r2);
        }
        let mut hit = false;
        for k in 0..=rings {
            self.for_each_in_ring(cx, cy, k, |i| {
                if !hit && self.window.distance_sq(q, self.points[i as usize]) < r2 {
                    hit = true;
                }
            });
            if hit {
                return true;
            }
        }
        false
    }
}

/// Writes point sets as `role,x,y,parent_index` rows.
pub fn write_points_csv<W: Write>(out: &mut W, sets: &[&PointSet]) -> io::Result<()> {
    writeln!(out, "role,x,y,parent_index")?;
    for set in sets {
        for (i, p) in set.points.iter().enumerate() {
            match set.parent_of(i) {
                Some(parent) => writeln!(out, "{},{},{},{}", set.role, p.x, p.y, parent)?,
                None => writeln!(out, "{},{},{},", set.role, p.x, p.y)?,
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window(l: f64, toroidal: bool) -> Window {
        Window::new(l, toroidal).unwrap()
    }

    #[test]
    fn toroidal_distance_wraps() {
        let w = window(100.0, true);
        let s = PointSet::new(Role::Mbs, vec![Point::new(-95.0, 0.0)]);
        let (i, d) = nearest(Point::new(95.0, 0.0), &s, &w).unwrap();
        assert_eq!(i, 0);
        assert!((d - 10.0).abs() < 1e-12);
        let flat = window(100.0, false);
        assert!((nearest(Point::new(95.0, 0.0), &s, &flat).unwrap().1 - 190.0).abs() < 1e-12);
    }

    #[test]
    fn nearest_coincident_and_singleton() {
        let w = window(500.0, true);
        let s = PointSet::new(
            Role::Sbs,
            vec![Point::new(1.0, 2.0), Point::new(-30.0, 4.0), Point::new(7.0, 7.0)],
        );
        assert_eq!(nearest(Point::new(-30.0, 4.0), &s, &w).unwrap(), (1, 0.0));
        let one = PointSet::new(Role::Sbs, vec![Point::new(300.0, -200.0)]);
        assert_eq!(nearest(Point::new(-499.0, 499.0), &one, &w).unwrap().0, 0);
        assert_eq!(
            nearest(Point::ORIGIN, &PointSet::empty(Role::Sbs), &w),
            Err(PointProcessError::EmptySet)
        );
    }

    #[test]
    fn nearest_tie_prefers_lowest_index() {
        let w = window(100.0, false);
        let s = PointSet::new(Role::Mbs, vec![Point::new(5.0, 0.0), Point::new(-5.0, 0.0)]);
        assert_eq!(nearest(Point::ORIGIN, &s, &w).unwrap().0, 0);
        let g = GridIndex::new(&s, w, 1.0);
        assert_eq!(g.nearest(Point::ORIGIN).unwrap().0, 0);
    }

    #[test]
    fn grid_matches_brute_force() {
        let mut rng = RandomStream::new(9);
        for toroidal in [true, false] {
            let w = window(1000.0, toroidal);
            for lambda in [2e-6, 5e-5, 1e-3] {
                let s = sample_ppp(lambda, &w, Role::Sbs, &mut rng).unwrap();
                if s.is_empty() {
                    continue;
                }
                let g = GridIndex::new(&s, w, 80.0);
                for _ in 0..300 {
                    let q = w.uniform_point(&mut rng);
                    let brute = nearest(q, &s, &w).unwrap();
                    let fast = g.nearest(q).unwrap();
                    assert_eq!(brute.0, fast.0);
                    assert_eq!(brute.1, fast.1);
                    for r in [10.0, 80.0, 400.0] {
                        let want = s.points.iter().any(|&p| w.distance(q, p) < r);
                        assert_eq!(g.any_within_sq(q, r * r), want);
                    }
                }
            }
        }
    }

    #[test]
    fn ppp_is_seed_deterministic() {
        let w = window(2000.0, true);
        let a = sample_ppp(1.5e-5, &w, Role::Mbs, &mut RandomStream::new(5)).unwrap();
        let b = sample_ppp(1.5e-5, &w, Role::Mbs, &mut RandomStream::new(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.points.iter().all(|&p| w.contains(p)));
    }

    #[test]
    fn ppp_may_be_empty() {
        let w = window(10.0, true);
        let mut rng = RandomStream::new(1);
        let empties = (0..200)
            .filter(|_| sample_ppp(1e-4, &w, Role::Cr, &mut rng).unwrap().is_empty())
            .count();
        // P(empty) = exp(-0.04)
        assert!(empties > 150);
    }

    #[test]
    fn cap_is_enforced() {
        let w = window(1e6, true);
        let err = sample_ppp(1.0, &w, Role::Mu, &mut RandomStream::new(0)).unwrap_err();
        assert!(matches!(err, PointProcessError::CapExceeded { .. }));
    }

    #[test]
    fn php_without_holes_is_plain_ppp() {
        let w = window(2000.0, true);
        let empty = PointSet::empty(Role::Mbs);
        let php = sample_php(&empty, 5.5e-5, 80.0, &w, &mut RandomStream::new(3)).unwrap();
        let ppp = sample_ppp(5.5e-5, &w, Role::Sbs, &mut RandomStream::new(3)).unwrap();
        assert_eq!(php.points, ppp.points);
    }

    #[test]
    fn php_holes_are_empty() {
        let w = window(2000.0, true);
        let mut rng = RandomStream::new(17);
        for _ in 0..5 {
            let mbs = sample_ppp(1.5e-5, &w, Role::Mbs, &mut rng).unwrap();
            let sbs = sample_php(&mbs, 5.5e-5, 80.0, &w, &mut rng).unwrap();
            for &p in &sbs.points {
                for &m in &mbs.points {
                    assert!(w.distance(p, m) >= 80.0);
                }
            }
        }
    }

    #[test]
    fn php_keeps_points_on_the_boundary() {
        let w = window(100.0, false);
        let mbs = PointSet::new(Role::Mbs, vec![Point::ORIGIN]);
        let g = GridIndex::new(&mbs, w, 10.0);
        assert!(!g.any_within_sq(Point::new(10.0, 0.0), 100.0));
        assert!(g.any_within_sq(Point::new(9.999, 0.0), 100.0));
    }

    #[test]
    fn mcp_daughters_stay_in_parent_ball() {
        for toroidal in [true, false] {
            let w = window(1500.0, toroidal);
            let (parents, daughters) =
                sample_mcp(1.5e-5, 3.0, 80.0, &w, &mut RandomStream::new(21)).unwrap();
            let idx = daughters.parent_index.as_ref().unwrap();
            assert_eq!(idx.len(), daughters.len());
            for (p, &i) in daughters.points.iter().zip(idx) {
                assert!(w.contains(*p));
                assert!(w.distance(*p, parents.points[i]) <= 80.0 + 1e-9);
            }
        }
    }

    #[test]
    fn mcp_vanishing_cluster_size() {
        let w = window(1500.0, true);
        let (_, daughters) = sample_mcp(1.5e-5, 1e-9, 80.0, &w, &mut RandomStream::new(2)).unwrap();
        assert!(daughters.is_empty());
    }

    #[test]
    fn cox_users_follow_parents() {
        let w = window(1500.0, true);
        let (sus, mus) =
            sample_cox_users(&PointSet::empty(Role::Hotspot), 3.0, 80.0, 3e-5, &w, &mut RandomStream::new(4))
                .unwrap();
        assert!(sus.is_empty());
        assert_eq!(mus.role, Role::Mu);

        // one parent: mean SU count is c_bar
        let one = PointSet::new(Role::Hotspot, vec![Point::ORIGIN]);
        let mut rng = RandomStream::new(8);
        let n = 40_000;
        let total: usize = (0..n)
            .map(|_| sample_cox_users(&one, 3.0, 80.0, 1e-12, &w, &mut rng).unwrap().0.len())
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 3.0).abs() < 0.03, "{mean}");
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let s = PointSet {
            role: Role::Sbs,
            points: vec![Point::new(1.5, -2.0)],
            parent_index: Some(vec![3]),
        };
        let m = PointSet::new(Role::Mbs, vec![Point::new(0.0, 0.0)]);
        let mut out = Vec::new();
        write_points_csv(&mut out, &[&s, &m]).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "role,x,y,parent_index\nSBS,1.5,-2,3\nMBS,0,0,\n"
        );
    }

    #[test]
    fn guard_rejects_small_windows() {
        assert!(Window::guarded(1000.0, true, 80.0, 1e-5).is_err());
        assert!(Window::guarded(2000.0, true, 80.0, 1e-5).is_ok());
    }
}
