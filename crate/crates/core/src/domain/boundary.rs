//! Normal traces, finite-difference derivatives of masked fields, and the
//! boundary flux of the directional interaction.

use num_complex::Complex64;

use super::geometry::{BoundaryFace, DomainGrid};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{Direction, ExactDirection};

/// Integer lattice step of an exact direction and its length in cells.
pub fn lattice_step(omega: &Direction) -> Result<([i64; 2], f64)> {
    match omega.exact() {
        Some(ExactDirection::Axis { axis, sign }) => {
            let mut v = [0; 2];
            v[axis] = sign as i64;
            Ok((v, 1.0))
        }
        Some(ExactDirection::Diagonal { a, b }) => Ok(([a as i64, b as i64], std::f64::consts::SQRT_2)),
        None => Err(Error::InexactDirection { omega: omega.components() }),
    }
}

/// `omega . grad u` with the axis differences of [`gradient`].
pub fn directional_difference(dom: &DomainGrid, u: &ComplexField, omega: &Direction) -> Result<ComplexField> {
    if omega.dim() != dom.base().dim() {
        return Err(Error::Dimension { expected: dom.base().dim().to_string(), got: omega.dim() });
    }
    lattice_step(omega)?;
    let grad = gradient(dom, u)?;
    let w = omega.components();
    let mut out = ComplexField::zeros(*dom.base());
    for (a, ga) in grad.iter().enumerate() {
        if w[a] != 0.0 {
            for (o, z) in out.values_mut().iter_mut().zip(ga.values()) {
                *o += z * w[a];
            }
        }
    }
    Ok(out)
}

/// Central-difference gradient, one field per axis, with excluded
/// neighbours read through their ghost values. Zero off the domain.
pub fn gradient(dom: &DomainGrid, u: &ComplexField) -> Result<Vec<ComplexField>> {
    if u.grid() != dom.base() {
        return Err(Error::GridMismatch);
    }
    let g = dom.base();
    let inv = 1.0 / (2.0 * g.dx());
    let uv = u.values();
    Ok((0..g.dim())
        .map(|axis| {
            let mut out = ComplexField::zeros(*g);
            for (idx, o) in out.values_mut().iter_mut().enumerate() {
                if dom.is_active(idx) {
                    *o = (dom.neighbour_value(uv, idx, axis, 1) - dom.neighbour_value(uv, idx, axis, -1)) * inv;
                }
            }
            out
        })
        .collect())
}

/// Axis derivative of `u` at each face's boundary point, into the domain:
/// the slope at the boundary zero of the parabola through the zero and the
/// first two cells, or `u_1 / delta` when the second cell is excluded. On
/// box walls this is `(4 u_1 - u_2) / (2 dx)`.
pub fn normal_trace(dom: &DomainGrid, u: &ComplexField) -> Result<Vec<Complex64>> {
    if u.grid() != dom.base() {
        return Err(Error::GridMismatch);
    }
    let dx = dom.base().dx();
    let uv = u.values();
    Ok(dom
        .faces()
        .iter()
        .map(|f| {
            let d = f.delta;
            match f.second {
                Some(c2) => (uv[f.cell] * (d + dx).powi(2) - uv[c2] * d * d) / (d * (d + dx) * dx),
                None => uv[f.cell] / d,
            }
        })
        .collect())
}

/// Integer slice coordinate `v . (x + L) / dx` of a point.
fn slice_key(dom: &DomainGrid, v: [i64; 2], x: [f64; 2]) -> i64 {
    let g = dom.base();
    let l = g.half_length();
    let mut k = 0;
    for a in 0..g.dim() {
        k += v[a] * ((x[a] + l) / g.dx()).round() as i64;
    }
    k
}

fn face_weights(dom: &DomainGrid, u: &ComplexField, omega: &Direction) -> Result<Vec<(i64, f64)>> {
    let (v, _) = lattice_step(omega)?;
    let tr = normal_trace(dom, u)?;
    let w = omega.components();
    Ok(dom
        .faces()
        .iter()
        .zip(&tr)
        .map(|(f, t): (&BoundaryFace, &Complex64)| {
            let n_dot = f.normal[0] * w[0] + f.normal[1] * w[1];
            (slice_key(dom, v, f.point), f.weight * n_dot * t.norm_sqr())
        })
        .collect())
}

/// `int_{x in dOmega} int_{y in Omega} |u|^2(y) sign((x - y).omega) (n(x).omega) |d_n u|^2(x)`
/// with `n` inward, by prefix sums of the slice masses of `|u|^2`.
pub fn boundary_term_directional(dom: &DomainGrid, u: &ComplexField, omega: &Direction) -> Result<f64> {
    let (v, _) = lattice_step(omega)?;
    let g = dom.base();
    let faces = face_weights(dom, u, omega)?;
    if faces.is_empty() {
        return Ok(0.0);
    }
    let dv = g.cell_volume();
    let keys: Vec<i64> = (0..g.len()).map(|idx| slice_key(dom, v, g.point(idx))).collect();
    let kmin = keys.iter().chain(faces.iter().map(|f| &f.0)).min().copied().unwrap_or(0);
    let kmax = keys.iter().chain(faces.iter().map(|f| &f.0)).max().copied().unwrap_or(0);
    let mut slab = vec![0.0; (kmax - kmin + 1) as usize];
    for (idx, z) in u.values().iter().enumerate() {
        if dom.is_active(idx) {
            slab[(keys[idx] - kmin) as usize] += z.norm_sqr() * dv;
        }
    }
    // below[k] = mass on slices with key < k
    let mut below = vec![0.0; slab.len() + 1];
    for k in 0..slab.len() {
        below[k + 1] = below[k] + slab[k];
    }
    let total = below[slab.len()];
    Ok(faces
        .iter()
        .map(|&(key, w)| {
            let k = (key - kmin) as usize;
            let lower = below[k];
            let upper = total - below[k + 1];
            w * (lower - upper)
        })
        .sum())
}

/// The same flux by the direct double sum over faces and cells.
pub fn boundary_term_directional_brute(dom: &DomainGrid, u: &ComplexField, omega: &Direction) -> Result<f64> {
    let (v, _) = lattice_step(omega)?;
    let g = dom.base();
    let faces = face_weights(dom, u, omega)?;
    let dv = g.cell_volume();
    let mut acc = 0.0;
    for &(key, w) in &faces {
        for (idx, z) in u.values().iter().enumerate() {
            if dom.is_active(idx) {
                let s = (key - slice_key(dom, v, g.point(idx))).signum() as f64;
                acc += w * s * z.norm_sqr() * dv;
            }
        }
    }
    Ok(acc)
}

/// `int_{dOmega} |d_n u|^2`.
pub fn boundary_flux(dom: &DomainGrid, u: &ComplexField) -> Result<f64> {
    let tr = normal_trace(dom, u)?;
    Ok(dom.faces().iter().zip(&tr).map(|(f, t)| f.weight * t.norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data;
    use crate::domain::geometry::{GeometrySpec, OuterBoundary};
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn sine_mode_slopes() {
        // interval of length 2L with walls at -L and L
        let l = 1.0;
        let k = 3.0;
        let mut errs = Vec::new();
        for n in [64, 128] {
            let g = Grid::new(1, n, l).unwrap();
            let dom = DomainGrid::new(g, GeometrySpec::free(OuterBoundary::Dirichlet)).unwrap();
            let u = ComplexField::from_real(g, |x| (k * PI * (x[0] + l) / (2.0 * l)).sin());
            let tr = normal_trace(&dom, &u).unwrap();
            let slope = k * PI / (2.0 * l);
            let mut e: f64 = 0.0;
            for (f, t) in dom.faces().iter().zip(&tr) {
                // inward derivative: +u'(-L) at the left wall, -u'(L) at the right wall
                let exact = if f.inward[0] > 0.0 { slope } else { -slope * (k * PI).cos() };
                e = e.max((t.re - exact).abs());
            }
            errs.push(e);
        }
        assert!(errs[0] < 5e-2 && errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn zero_field_has_zero_traces() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let dom = DomainGrid::new(g, GeometrySpec::disk([0.0, 0.0], 1.0)).unwrap();
        let u = ComplexField::zeros(g);
        assert!(normal_trace(&dom, &u).unwrap().iter().all(|z| z.norm() == 0.0));
        assert_eq!(boundary_term_directional(&dom, &u, &Direction::axis(2, 0)).unwrap(), 0.0);
    }

    #[test]
    fn prefix_sums_match_brute_force() {
        let g = Grid::new(2, 32, 4.0).unwrap();
        let dom = DomainGrid::new(g, GeometrySpec::disk([0.2, -0.1], 1.0)).unwrap();
        let u = dom.pinned(&data::gaussian(&g, [-1.2, 0.3], [0.3, 0.0], 1.1, 1.0));
        for omega in Direction::exact_2d() {
            let a = boundary_term_directional(&dom, &u, &omega).unwrap();
            let b = boundary_term_directional_brute(&dom, &u, &omega).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300), "{a} {b}");
        }
    }

    #[test]
    fn illuminated_side_sign() {
        // mass entirely to the left of the obstacle: for omega = e_1 the lit
        // faces have n.omega < 0 and sign(x - y) > 0, so the flux is negative
        let g = Grid::new(2, 64, 4.0).unwrap();
        let dom = DomainGrid::new(g, GeometrySpec::disk([1.0, 0.0], 0.8)).unwrap();
        let u = dom.pinned(&data::gaussian(&g, [-1.5, 0.0], [0.0, 0.0], 1.2, 1.0));
        let b = boundary_term_directional(&dom, &u, &Direction::axis(2, 0)).unwrap();
        assert!(b < 0.0, "{b}");
    }
}
