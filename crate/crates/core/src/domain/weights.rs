//! Smooth virial weights `h` on 2D domains with closed-form derivatives up to
//! the bi-Laplacian.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::geometry::DomainGrid;

type Scalar = dyn Fn([f64; 2]) -> f64 + Send + Sync;
type Vector = dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync;
type Matrix = dyn Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync;

#[derive(Clone)]
pub struct VirialWeight {
    pub name: String,
    h: Arc<Scalar>,
    grad: Arc<Vector>,
    hessian: Arc<Matrix>,
    bilaplacian: Arc<Scalar>,
}

impl std::fmt::Debug for VirialWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VirialWeight").field("name", &self.name).finish()
    }
}

impl VirialWeight {
    pub fn custom(
        name: impl Into<String>,
        h: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
        grad: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static,
        hessian: impl Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync + 'static,
        bilaplacian: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), h: Arc::new(h), grad: Arc::new(grad), hessian: Arc::new(hessian), bilaplacian: Arc::new(bilaplacian) }
    }

    pub fn constant(c: f64) -> Self {
        Self::custom("constant", move |_| c, |_| [0.0; 2], |_| [[0.0; 2]; 2], |_| 0.0)
    }

    /// `|x - o|`; smooth away from `o`, which must lie in the obstacle.
    pub fn distance_to_point(o: [f64; 2]) -> Self {
        let r = move |x: [f64; 2]| (x[0] - o[0]).hypot(x[1] - o[1]);
        Self::custom(
            "distance_to_point",
            r,
            move |x| {
                let d = r(x);
                [(x[0] - o[0]) / d, (x[1] - o[1]) / d]
            },
            move |x| {
                let d = r(x);
                let (a, b) = ((x[0] - o[0]) / d, (x[1] - o[1]) / d);
                [[(1.0 - a * a) / d, -a * b / d], [-a * b / d, (1.0 - b * b) / d]]
            },
            move |x| r(x).powi(-3),
        )
    }

    /// `sqrt(1 + |x - o|^2)`.
    pub fn japanese_bracket(o: [f64; 2]) -> Self {
        let s = move |x: [f64; 2]| (x[0] - o[0]).powi(2) + (x[1] - o[1]).powi(2);
        Self::custom(
            "japanese_bracket",
            move |x| (1.0 + s(x)).sqrt(),
            move |x| {
                let f = (1.0 + s(x)).sqrt();
                [(x[0] - o[0]) / f, (x[1] - o[1]) / f]
            },
            move |x| {
                let b2 = 1.0 + s(x);
                let c = 1.0 / (b2 * b2.sqrt());
                let (a, b) = (x[0] - o[0], x[1] - o[1]);
                [[c * (b2 - a * a), -c * a * b], [-c * a * b, c * (b2 - b * b)]]
            },
            move |x| {
                let r2 = s(x);
                (r2 * r2 + 8.0 * r2 - 8.0) * (1.0 + r2).powf(-3.5)
            },
        )
    }

    pub fn h(&self, x: [f64; 2]) -> f64 {
        (self.h)(x)
    }

    pub fn grad(&self, x: [f64; 2]) -> [f64; 2] {
        (self.grad)(x)
    }

    pub fn hessian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        (self.hessian)(x)
    }

    pub fn laplacian(&self, x: [f64; 2]) -> f64 {
        let m = self.hessian(x);
        m[0][0] + m[1][1]
    }

    pub fn bilaplacian(&self, x: [f64; 2]) -> f64 {
        (self.bilaplacian)(x)
    }
}

/// Sampled sign conditions of a weight on a domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignAudit {
    pub min_hessian_eigenvalue: f64,
    pub min_laplacian: f64,
    /// Over faces of the obstacle only; `+inf` without an obstacle.
    pub min_normal_derivative: f64,
    pub max_normal_derivative: f64,
}

impl SignAudit {
    pub fn convex(&self, tol: f64) -> bool {
        self.min_hessian_eigenvalue >= -tol && self.min_laplacian >= -tol
    }
}

fn min_eigenvalue(m: [[f64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    0.5 * tr - (0.25 * tr * tr - det).max(0.0).sqrt()
}

pub fn sign_audit(dom: &DomainGrid, w: &VirialWeight) -> SignAudit {
    let g = dom.base();
    let mut out = SignAudit {
        min_hessian_eigenvalue: f64::INFINITY,
        min_laplacian: f64::INFINITY,
        min_normal_derivative: f64::INFINITY,
        max_normal_derivative: f64::NEG_INFINITY,
    };
    for idx in 0..g.len() {
        if dom.is_active(idx) {
            let x = g.point(idx);
            out.min_hessian_eigenvalue = out.min_hessian_eigenvalue.min(min_eigenvalue(w.hessian(x)));
            out.min_laplacian = out.min_laplacian.min(w.laplacian(x));
        }
    }
    for f in dom.faces() {
        if f.on_obstacle {
            let gr = w.grad(f.point);
            let dn = gr[0] * f.normal[0] + gr[1] * f.normal[1];
            out.min_normal_derivative = out.min_normal_derivative.min(dn);
            out.max_normal_derivative = out.max_normal_derivative.max(dn);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::geometry::{GeometrySpec, Obstacle, OuterBoundary};
    use crate::grid::Grid;

    fn laplacian_fd(f: &dyn Fn([f64; 2]) -> f64, x: [f64; 2], h: f64) -> f64 {
        (f([x[0] + h, x[1]]) + f([x[0] - h, x[1]]) + f([x[0], x[1] + h]) + f([x[0], x[1] - h]) - 4.0 * f(x)) / (h * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let o = [0.3, -0.2];
        for w in [VirialWeight::distance_to_point(o), VirialWeight::japanese_bracket(o), VirialWeight::constant(2.0)] {
            for x in [[1.5, 0.4], [-0.9, 1.1], [2.0, -1.7]] {
                let h = 1e-4;
                let g = w.grad(x);
                let gx = (w.h([x[0] + h, x[1]]) - w.h([x[0] - h, x[1]])) / (2.0 * h);
                let gy = (w.h([x[0], x[1] + h]) - w.h([x[0], x[1] - h])) / (2.0 * h);
                assert!((g[0] - gx).abs() < 1e-7 && (g[1] - gy).abs() < 1e-7, "{}", w.name);
                let lap = |y: [f64; 2]| w.laplacian(y);
                let hess = w.hessian(x);
                let hxy = (w.grad([x[0], x[1] + h])[0] - w.grad([x[0], x[1] - h])[0]) / (2.0 * h);
                assert!((hess[0][1] - hxy).abs() < 1e-7, "{}", w.name);
                let bl = laplacian_fd(&lap, x, 1e-3);
                assert!((w.bilaplacian(x) - bl).abs() < 1e-5, "{} {} {}", w.name, w.bilaplacian(x), bl);
                let l = laplacian_fd(&|y| w.h(y), x, 1e-3);
                assert!((w.laplacian(x) - l).abs() < 1e-5, "{}", w.name);
            }
        }
    }

    #[test]
    fn distance_weight_signs_on_star_shaped_obstacle() {
        let g = Grid::new(2, 64, 4.0).unwrap();
        let geo = GeometrySpec {
            obstacle: Obstacle::Polygon { center: [0.0, 0.0], vertices: vec![[1.0, 0.0], [0.0, 0.8], [-1.0, 0.0], [0.0, -0.8]] },
            outer: OuterBoundary::Periodic,
        };
        let dom = DomainGrid::new(g, geo).unwrap();
        let a = sign_audit(&dom, &VirialWeight::distance_to_point([0.0, 0.0]));
        assert!(a.convex(1e-10), "{a:?}");
        assert!(a.min_normal_derivative >= 0.0 && a.max_normal_derivative <= 1.0 + 1e-12, "{a:?}");
    }
}
