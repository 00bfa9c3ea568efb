//! Cell-wise rasterised domains: a periodic or walled box with an optional
//! obstacle. A cell belongs to the domain iff its centre does. Each exposed
//! face records where the axis through it crosses the true boundary; box
//! walls sit exactly at excluded cell centres.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;

pub const OBSTACLE_MARGIN_CELLS: f64 = 8.0;
/// Floor on the cell-to-boundary distance, in cells. Keeps the ghost
/// extrapolation bounded when the boundary nearly touches a cell centre.
pub const MIN_BOUNDARY_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Obstacle {
    None,
    Disk { center: [f64; 2], radius: f64 },
    /// Star-shaped with respect to `center`.
    Polygon { center: [f64; 2], vertices: Vec<[f64; 2]> },
}

impl Obstacle {
    pub fn contains(&self, x: [f64; 2]) -> bool {
        match self {
            Obstacle::None => false,
            Obstacle::Disk { center, radius } => (x[0] - center[0]).hypot(x[1] - center[1]) <= *radius,
            Obstacle::Polygon { vertices, .. } => point_in_polygon(vertices, x),
        }
    }

    /// Euclidean distance to the obstacle, 0 inside it and `+inf` without one.
    pub fn distance(&self, x: [f64; 2]) -> f64 {
        match self {
            Obstacle::None => f64::INFINITY,
            Obstacle::Disk { center, radius } => ((x[0] - center[0]).hypot(x[1] - center[1]) - radius).max(0.0),
            Obstacle::Polygon { vertices, .. } => {
                if point_in_polygon(vertices, x) {
                    return 0.0;
                }
                let n = vertices.len();
                (0..n).map(|i| segment_distance(vertices[i], vertices[(i + 1) % n], x)).fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Outward unit normal of the obstacle boundary nearest to `x`. Polygon
    /// vertices take the normal of the nearest edge.
    pub fn outward_normal(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        match self {
            Obstacle::None => None,
            Obstacle::Disk { center, .. } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                let r = d[0].hypot(d[1]);
                (r > 0.0).then(|| [d[0] / r, d[1] / r])
            }
            Obstacle::Polygon { vertices, .. } => {
                let n = vertices.len();
                let orient = signed_area(vertices).signum();
                let (_, i) = (0..n)
                    .map(|i| (segment_distance(vertices[i], vertices[(i + 1) % n], x), i))
                    .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let e = [b[0] - a[0], b[1] - a[1]];
                let len = e[0].hypot(e[1]);
                Some([orient * e[1] / len, -orient * e[0] / len])
            }
        }
    }

    /// Distance from `x` (outside the obstacle) along `sign * e_axis` to the
    /// first boundary crossing, if one lies within `max`.
    pub fn axis_crossing(&self, x: [f64; 2], axis: usize, sign: f64, max: f64) -> Option<f64> {
        let mut e = [0.0; 2];
        e[axis] = sign;
        match self {
            Obstacle::None => None,
            Obstacle::Disk { center, radius } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                let b = d[0] * e[0] + d[1] * e[1];
                let c = d[0] * d[0] + d[1] * d[1] - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let t = -b - disc.sqrt();
                (t >= 0.0 && t <= max).then_some(t)
            }
            Obstacle::Polygon { vertices, .. } => {
                let n = vertices.len();
                let mut best: Option<f64> = None;
                for i in 0..n {
                    let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                    let ed = [b[0] - a[0], b[1] - a[1]];
                    let den = e[0] * ed[1] - e[1] * ed[0];
                    if den == 0.0 {
                        continue;
                    }
                    let r = [a[0] - x[0], a[1] - x[1]];
                    let t = (r[0] * ed[1] - r[1] * ed[0]) / den;
                    let s = (r[0] * e[1] - r[1] * e[0]) / den;
                    if (0.0..=1.0).contains(&s) && t >= 0.0 && t <= max && best.map_or(true, |b| t < b) {
                        best = Some(t);
                    }
                }
                best
            }
        }
    }

    /// Axis-aligned bounding box `[xmin, xmax, ymin, ymax]`.
    fn bounds(&self) -> Option<[f64; 4]> {
        match self {
            Obstacle::None => None,
            Obstacle::Disk { center, radius } => {
                Some([center[0] - radius, center[0] + radius, center[1] - radius, center[1] + radius])
            }
            Obstacle::Polygon { vertices, .. } => {
                let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
                for v in vertices {
                    b[0] = b[0].min(v[0]);
                    b[1] = b[1].max(v[0]);
                    b[2] = b[2].min(v[1]);
                    b[3] = b[3].max(v[1]);
                }
                Some(b)
            }
        }
    }

    /// The point the obstacle is star-shaped about.
    pub fn center(&self) -> Option<[f64; 2]> {
        match self {
            Obstacle::None => None,
            Obstacle::Disk { center, .. } | Obstacle::Polygon { center, .. } => Some(*center),
        }
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum::<f64>()
}

fn segment_distance(a: [f64; 2], b: [f64; 2], x: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 { (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (x[0] - a[0] - t * d[0]).hypot(x[1] - a[1] - t * d[1])
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, `C^infinity` in between.
fn smooth_step(t: f64) -> f64 {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (a, b) = (f(t), f(1.0 - t));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

fn point_in_polygon(v: &[[f64; 2]], x: [f64; 2]) -> bool {
    let mut inside = false;
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if (a[1] > x[1]) != (b[1] > x[1]) {
            let cross = a[0] + (x[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if x[0] < cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Every edge leaves `c` strictly on the interior side: the kernel of the
/// polygon contains `c`, which is the visibility condition for all vertices.
fn star_shaped_about(v: &[[f64; 2]], c: [f64; 2]) -> bool {
    let n = v.len();
    if n < 3 {
        return false;
    }
    let area: f64 = (0..n).map(|i| v[i][0] * v[(i + 1) % n][1] - v[(i + 1) % n][0] * v[i][1]).sum();
    if area == 0.0 {
        return false;
    }
    (0..n).all(|i| {
        let (a, b) = (v[i], v[(i + 1) % n]);
        let cr = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        cr * area.signum() > 0.0
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterBoundary {
    /// The box wraps; the obstacle sits in a torus standing in for the plane.
    Periodic,
    /// Walls at `x_a = -L` (equivalently `+L`): cell 0 of each axis is excluded.
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub obstacle: Obstacle,
    pub outer: OuterBoundary,
}

impl GeometrySpec {
    pub fn free(outer: OuterBoundary) -> Self {
        Self { obstacle: Obstacle::None, outer }
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Self { obstacle: Obstacle::Disk { center, radius }, outer: OuterBoundary::Periodic }
    }

    /// Parses `key = value` lines: `shape = none|disk|polygon`, `center = x, y`,
    /// `radius = r`, `vertices = x y; x y; ...`, `outer = periodic|dirichlet`.
    /// `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut shape = None;
        let mut center = None;
        let mut radius = None;
        let mut vertices = None;
        let mut outer = OuterBoundary::Periodic;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Geometry(format!("line {}: expected key = value", n + 1)))?;
            let v = v.trim();
            match k.trim() {
                "shape" => shape = Some(v.to_string()),
                "center" => center = Some(parse_pair(v, ',')?),
                "radius" => radius = Some(parse_num(v)?),
                "vertices" => {
                    vertices = Some(v.split(';').filter(|s| !s.trim().is_empty()).map(|s| parse_pair(s, ' ')).collect::<Result<Vec<_>>>()?)
                }
                "outer" => {
                    outer = match v {
                        "periodic" => OuterBoundary::Periodic,
                        "dirichlet" => OuterBoundary::Dirichlet,
                        _ => return Err(Error::Geometry(format!("unknown outer boundary `{v}`"))),
                    }
                }
                other => return Err(Error::Geometry(format!("unknown key `{other}`"))),
            }
        }
        let obstacle = match shape.as_deref().unwrap_or("none") {
            "none" => Obstacle::None,
            "disk" => Obstacle::Disk {
                center: center.unwrap_or([0.0, 0.0]),
                radius: radius.ok_or_else(|| Error::Geometry("disk needs a radius".into()))?,
            },
            "polygon" => Obstacle::Polygon {
                center: center.unwrap_or([0.0, 0.0]),
                vertices: vertices.ok_or_else(|| Error::Geometry("polygon needs vertices".into()))?,
            },
            s => return Err(Error::Geometry(format!("unknown shape `{s}`"))),
        };
        Ok(Self { obstacle, outer })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match &self.obstacle {
            Obstacle::None => s.push_str("shape = none\n"),
            Obstacle::Disk { center, radius } => {
                let _ = writeln!(s, "shape = disk\ncenter = {}, {}\nradius = {}", center[0], center[1], radius);
            }
            Obstacle::Polygon { center, vertices } => {
                let _ = writeln!(s, "shape = polygon\ncenter = {}, {}", center[0], center[1]);
                let vs: Vec<String> = vertices.iter().map(|v| format!("{} {}", v[0], v[1])).collect();
                let _ = writeln!(s, "vertices = {}", vs.join("; "));
            }
        }
        let _ = writeln!(s, "outer = {}", if self.outer == OuterBoundary::Periodic { "periodic" } else { "dirichlet" });
        s
    }
}

fn parse_num(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Geometry(format!("not a number: `{s}`")))
}

fn parse_pair(s: &str, sep: char) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(sep).map(str::trim).filter(|p| !p.is_empty()).collect();
    if parts.len() != 2 {
        return Err(Error::Geometry(format!("expected two numbers in `{s}`")));
    }
    Ok([parse_num(parts[0])?, parse_num(parts[1])?])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Interior,
    /// In the domain with at least one excluded face neighbour.
    BoundaryAdjacent,
    Exterior,
}

/// One exposed face of a domain cell: the wall cell across it carries the
/// Dirichlet value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryFace {
    /// Domain cell next to the boundary.
    pub cell: usize,
    /// Excluded cell across the face; its centre is the boundary point.
    pub wall: usize,
    /// Second domain cell along the inward normal, if it is in the domain.
    pub second: Option<usize>,
    /// Unit normal of the exposed face pointing into the domain, axis-aligned.
    pub inward: [f64; 2],
    /// Inward unit normal of the boundary curve at `point`; equal to
    /// `inward` on box walls.
    pub normal: [f64; 2],
    /// Where the axis from the cell centre towards the wall cell meets the
    /// boundary.
    pub point: [f64; 2],
    /// Distance from the cell centre to `point`, in `[MIN_BOUNDARY_FRACTION dx, dx]`.
    pub delta: f64,
    pub on_obstacle: bool,
    /// Surface measure of the face: `dx` in 2D, 1 in 1D.
    pub measure: f64,
    /// Arc length the face carries when the squared axis trace stands in for
    /// `|d_n u|^2`: `measure / (|n_1|^3 + |n_2|^3)`. The faces of both axes
    /// tile the curve with partition weights `|n_a|^3 / sum |n_b|^3`, and an
    /// axis face covers `dx / |n_a|` of arc on which `|d_a u|^2 = n_a^2 |d_n u|^2`.
    pub weight: f64,
}

impl BoundaryFace {
    /// Value at the wall cell, as a multiple of the cell value, of the line
    /// through the cell value and the boundary zero. Zero on box walls.
    pub fn ghost_factor(&self, dx: f64) -> f64 {
        -(dx - self.delta) / self.delta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid {
    base: Grid,
    geometry: GeometrySpec,
    mask: Vec<CellKind>,
    faces: Vec<BoundaryFace>,
    ghosts: Vec<[f64; 4]>,
}

/// Slot `2 axis + (d > 0)` of the neighbour at offset `d` along `axis`.
fn slot(axis: usize, d: i64) -> usize {
    2 * axis + usize::from(d > 0)
}

/// The wall lies opposite the inward normal.
fn ghost_slot(inward: [f64; 2]) -> usize {
    if inward[0] != 0.0 {
        slot(0, if inward[0] > 0.0 { -1 } else { 1 })
    } else {
        slot(1, if inward[1] > 0.0 { -1 } else { 1 })
    }
}

impl DomainGrid {
    pub fn new(base: Grid, geometry: GeometrySpec) -> Result<Self> {
        let dim = base.dim();
        let l = base.half_length();
        let margin = OBSTACLE_MARGIN_CELLS * base.dx();
        if let Some(b) = geometry.obstacle.bounds() {
            if dim != 2 {
                return Err(Error::Geometry("obstacles need a 2D grid".into()));
            }
            if b[0] < -l + margin || b[1] > l - margin || b[2] < -l + margin || b[3] > l - margin {
                return Err(Error::Geometry(format!("obstacle must stay {OBSTACLE_MARGIN_CELLS} cells inside the box")));
            }
        }
        match &geometry.obstacle {
            Obstacle::Disk { radius, .. } if !(*radius > 0.0) => {
                return Err(Error::Geometry("disk radius must be positive".into()));
            }
            Obstacle::Polygon { center, vertices } if !star_shaped_about(vertices, *center) => {
                return Err(Error::Geometry("polygon is not star-shaped about its center".into()));
            }
            _ => {}
        }
        let n = base.n();
        let excluded = |idx: usize| -> bool {
            let [i, j] = base.unflatten(idx);
            if geometry.outer == OuterBoundary::Dirichlet && (i == 0 || (dim == 2 && j == 0)) {
                return true;
            }
            geometry.obstacle.contains(base.point(idx))
        };
        let ext: Vec<bool> = (0..base.len()).map(excluded).collect();
        let mut mask = vec![CellKind::Interior; base.len()];
        let mut faces = Vec::new();
        let measure = if dim == 2 { base.dx() } else { 1.0 };
        for idx in 0..base.len() {
            if ext[idx] {
                mask[idx] = CellKind::Exterior;
                continue;
            }
            let [i, j] = base.unflatten(idx);
            for axis in 0..dim {
                for sign in [-1i64, 1] {
                    let step = |k: usize, d: i64| -> usize { ((k as i64 + d).rem_euclid(n as i64)) as usize };
                    let (wi, wj, si, sj) = if axis == 0 {
                        (step(i, sign), j, step(i, -sign), j)
                    } else {
                        (i, step(j, sign), i, step(j, -sign))
                    };
                    let wall = base.flatten(wi, wj);
                    if !ext[wall] {
                        continue;
                    }
                    mask[idx] = CellKind::BoundaryAdjacent;
                    let second = base.flatten(si, sj);
                    let mut inward = [0.0; 2];
                    inward[axis] = -(sign as f64);
                    let dx = base.dx();
                    let c = base.point(idx);
                    let mut wall_point = c;
                    wall_point[axis] += sign as f64 * dx;
                    let on_obstacle = dim == 2 && geometry.obstacle.contains(wall_point);
                    let crossing = if on_obstacle { geometry.obstacle.axis_crossing(c, axis, sign as f64, dx) } else { None };
                    let delta = crossing.map_or(dx, |t| t.max(MIN_BOUNDARY_FRACTION * dx));
                    let mut point = c;
                    point[axis] += sign as f64 * delta;
                    let normal = match geometry.obstacle.outward_normal(point) {
                        Some(nv) if on_obstacle => nv,
                        _ => inward,
                    };
                    let weight = measure / (normal[0].abs().powi(3) + normal[1].abs().powi(3));
                    faces.push(BoundaryFace {
                        cell: idx,
                        wall,
                        second: (!ext[second]).then_some(second),
                        inward,
                        normal,
                        point,
                        delta,
                        on_obstacle,
                        measure,
                        weight,
                    });
                }
            }
        }
        let mut ghosts = vec![[0.0; 4]; base.len()];
        for f in &faces {
            ghosts[f.cell][ghost_slot(f.inward)] = f.ghost_factor(base.dx());
        }
        Ok(Self { base, geometry, mask, faces, ghosts })
    }

    pub fn base(&self) -> &Grid {
        &self.base
    }

    pub fn geometry(&self) -> &GeometrySpec {
        &self.geometry
    }

    pub fn mask(&self) -> &[CellKind] {
        &self.mask
    }

    pub fn faces(&self) -> &[BoundaryFace] {
        &self.faces
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.mask[idx] != CellKind::Exterior
    }

    pub fn active_count(&self) -> usize {
        self.mask.iter().filter(|k| **k != CellKind::Exterior).count()
    }

    /// Zeroes `u` on excluded cells.
    pub fn pin(&self, u: &mut ComplexField) {
        for (z, k) in u.values_mut().iter_mut().zip(&self.mask) {
            if *k == CellKind::Exterior {
                *z = num_complex::Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn pinned(&self, u: &ComplexField) -> ComplexField {
        let mut out = u.clone();
        self.pin(&mut out);
        out
    }

    /// Largest modulus on excluded cells; zero for a Dirichlet state.
    pub fn exterior_sup(&self, u: &ComplexField) -> f64 {
        u.values().iter().zip(&self.mask).filter(|(_, k)| **k == CellKind::Exterior).map(|(z, _)| z.norm()).fold(0.0, f64::max)
    }

    /// Distance from `x` to the excluded set: the obstacle and, for a walled
    /// box, the walls at `+-L`.
    pub fn distance_to_exterior(&self, x: [f64; 2]) -> f64 {
        let mut d = self.geometry.obstacle.distance(x);
        if self.geometry.outer == OuterBoundary::Dirichlet {
            let l = self.base.half_length();
            for a in 0..self.base.dim() {
                d = d.min(l - x[a].abs());
            }
        }
        d
    }

    /// `u` times a smooth collar that vanishes within `offset` of the
    /// excluded set and is 1 beyond `offset + width`; the product is pinned.
    pub fn collared(&self, u: &ComplexField, offset: f64, width: f64) -> ComplexField {
        let mut out = u.clone();
        for (idx, z) in out.values_mut().iter_mut().enumerate() {
            let d = self.distance_to_exterior(self.base.point(idx));
            *z *= smooth_step((d - offset) / width);
        }
        self.pin(&mut out);
        out
    }

    /// Ghost factor of the neighbour of an active cell at unit offset `d`
    /// along `axis`; zero when that neighbour is active or a box wall.
    pub fn ghost_factor(&self, idx: usize, axis: usize, d: i64) -> f64 {
        self.ghosts[idx][slot(axis, d)]
    }

    /// Value of `u` at the unit neighbour of an active cell, with excluded
    /// neighbours read through the ghost extrapolation.
    pub fn neighbour_value(&self, u: &[num_complex::Complex64], idx: usize, axis: usize, d: i64) -> num_complex::Complex64 {
        let j = self.neighbour(idx, axis, d);
        if self.is_active(j) {
            u[j]
        } else {
            u[idx] * self.ghost_factor(idx, axis, d)
        }
    }

    /// Flat neighbour index along `axis` at offset `d`, wrapping.
    pub fn neighbour(&self, idx: usize, axis: usize, d: i64) -> usize {
        let n = self.base.n() as i64;
        let [i, j] = self.base.unflatten(idx);
        if axis == 0 {
            self.base.flatten(((i as i64 + d).rem_euclid(n)) as usize, j)
        } else {
            self.base.flatten(i, ((j as i64 + d).rem_euclid(n)) as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mask_and_faces() {
        let g = Grid::new(2, 64, 4.0).unwrap();
        let d = DomainGrid::new(g, GeometrySpec::disk([0.0, 0.0], 1.0)).unwrap();
        let excluded = d.mask().iter().filter(|k| **k == CellKind::Exterior).count() as f64;
        let area = excluded * g.cell_volume();
        assert!((area - std::f64::consts::PI).abs() < 0.1, "{area}");
        for f in d.faces() {
            assert!(!d.is_active(f.wall) && d.is_active(f.cell));
            assert_eq!(d.mask()[f.cell], CellKind::BoundaryAdjacent);
            // the inward normal points away from the obstacle centre
            let c = g.point(f.cell);
            assert!(f.inward[0] * c[0] + f.inward[1] * c[1] > 0.0);
            assert!(f.on_obstacle && f.delta > 0.0 && f.delta <= g.dx());
            let r = f.point[0].hypot(f.point[1]);
            assert!(f.delta == MIN_BOUNDARY_FRACTION * g.dx() || (r - 1.0).abs() < 1e-12, "{r}");
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        let g = Grid::new(2, 64, 4.0).unwrap();
        assert!(DomainGrid::new(g, GeometrySpec::disk([0.0, 0.0], 3.9)).is_err());
        let bowtie = GeometrySpec {
            obstacle: Obstacle::Polygon { center: [0.0, 0.0], vertices: vec![[-1.0, -1.0], [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0]] },
            outer: OuterBoundary::Periodic,
        };
        assert!(DomainGrid::new(g, bowtie).is_err());
        let dart = GeometrySpec {
            obstacle: Obstacle::Polygon { center: [-0.5, 0.6], vertices: vec![[-1.0, -1.0], [1.0, 0.0], [-1.0, 1.0], [0.0, 0.0]] },
            outer: OuterBoundary::Periodic,
        };
        assert!(DomainGrid::new(g, dart).is_err());
    }

    #[test]
    fn geometry_text_round_trip() {
        let text = "# obstacle\nshape = polygon\ncenter = 0.1, 0\nvertices = 1 0; 0 1; -1 0; 0 -1\nouter = dirichlet\n";
        let s = GeometrySpec::parse(text).unwrap();
        assert_eq!(GeometrySpec::parse(&s.to_text()).unwrap(), s);
        assert!(GeometrySpec::parse("shape = blob").is_err());
        assert!(GeometrySpec::parse("radius 2").is_err());
        let g = Grid::new(2, 64, 4.0).unwrap();
        assert!(DomainGrid::new(g, s).is_ok());
    }

    #[test]
    fn collar_vanishes_near_the_obstacle() {
        let g = Grid::new(2, 64, 4.0).unwrap();
        let dom = DomainGrid::new(g, GeometrySpec::disk([0.0, 0.0], 1.0)).unwrap();
        let u = ComplexField::from_real(g, |_| 1.0);
        let c = dom.collared(&u, 0.2, 0.5);
        for idx in 0..g.len() {
            let d = dom.distance_to_exterior(g.point(idx));
            let v = c.values()[idx].re;
            assert!(if d <= 0.2 { v == 0.0 } else if d >= 0.7 { v == 1.0 } else { (0.0..=1.0).contains(&v) });
        }
        let sq = Obstacle::Polygon { center: [0.0, 0.0], vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]] };
        assert_eq!(sq.distance([0.5, 0.5]), 0.0);
        assert!((sq.distance([2.0, 0.0]) - 1.0).abs() < 1e-15);
        assert!((sq.distance([2.0, 2.0]) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(sq.axis_crossing([1.5, 0.2], 0, -1.0, 1.0), Some(0.5));
        assert_eq!(sq.axis_crossing([1.5, 0.2], 0, 1.0, 1.0), None);
        assert_eq!(sq.outward_normal([1.1, 0.3]), Some([1.0, 0.0]));
    }

    #[test]
    fn dirichlet_interval_walls() {
        let g = Grid::new(1, 16, 1.0).unwrap();
        let d = DomainGrid::new(g, GeometrySpec::free(OuterBoundary::Dirichlet)).unwrap();
        assert_eq!(d.active_count(), 15);
        assert_eq!(d.faces().len(), 2);
        let normals: Vec<f64> = d.faces().iter().map(|f| f.inward[0]).collect();
        assert!(normals.contains(&1.0) && normals.contains(&-1.0));
    }
}
