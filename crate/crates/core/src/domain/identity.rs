//! The directional identity and the `M_h` virial on a domain, as
//! [`IdentityPair`]s for the shared residual machinery.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::boundary::{self, boundary_term_directional, directional_difference, normal_trace};
use super::cn::evolve_domain;
use super::geometry::{DomainGrid, GeometrySpec, Obstacle, OuterBoundary};
use super::weights::{sign_audit, VirialWeight};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Direction;
use crate::manifest::Manifest;
use crate::nls::{EvolutionConfig, Trajectory};
use crate::radon;
use crate::verify::{verify_identity, IdentityOptions, IdentityPair, Verdict, VerificationReport};
use crate::virial::{self, VirialRecord};

/// Directional terms on `Omega` and the boundary flux. `total` is the sum
/// `term1 + term2 + term3 + boundary_factor * boundary_term`, which is
/// `factor * d^2 I_omega(u, u)` with both constants pinned in the manifest.
/// Derivatives of `u` are central differences with the exterior read as 0.
pub fn rhs_theorem_t1d(dom: &DomainGrid, u: &ComplexField, omega: &Direction, epsilon: i8, p: f64) -> Result<VirialRecord> {
    let g = *dom.base();
    if g.dim() != 2 {
        return Err(Error::Dimension { expected: "2".into(), got: g.dim() });
    }
    let u = dom.pinned(u);
    let m = radon::radon(&g, &u.density(), omega)?;
    let dm = virial::profile_derivative(&m);
    let term1 = dm.iter().map(|x| x * x).sum::<f64>() * m.ds;
    let mp = radon::radon(&g, &u.modulus_power(p + 1.0), omega)?;
    let term2 =
        virial::nonlinear_coefficient(epsilon, p) * m.values.iter().zip(&mp.values).map(|(a, b)| a * b).sum::<f64>() * m.ds;
    let du = directional_difference(dom, &u, omega)?;
    let term3 = virial::trace_term_with(&u, &du, omega)?;
    let b = boundary_term_directional(dom, &u, omega)?;
    let bf = Manifest::current().constant("t1d.boundary_factor")?;
    let mut terms = BTreeMap::new();
    terms.insert("radon_gradient_term".to_string(), term1);
    terms.insert("nonlinear_radon_term".to_string(), term2);
    terms.insert("trace_term".to_string(), term3);
    terms.insert("boundary_term".to_string(), b);
    Ok(VirialRecord {
        t: 0.0,
        i: virial::interaction_directional(&u, &u, omega)?,
        di_dt: f64::NAN,
        rhs_terms: terms,
        total: term1 + term2 + term3 + bf * b,
        residual: None,
    })
}

/// `M_h = int_Omega |u|^2 h`.
pub fn domain_virial_functional(dom: &DomainGrid, u: &ComplexField, w: &VirialWeight) -> f64 {
    let g = dom.base();
    u.values()
        .iter()
        .enumerate()
        .filter(|(idx, _)| dom.is_active(*idx))
        .map(|(idx, z)| z.norm_sqr() * w.h(g.point(idx)))
        .sum::<f64>()
        * g.cell_volume()
}

/// `d^2 M_h / dt^2 = -int |u|^2 Delta^2 h + 2 eps (p-1)/(p+1) int |u|^{p+1} Delta h
/// + 2 int_{dOmega} d_n h |d_n u|^2 + 4 int Hess h(grad u, grad conj u)`, `n` inward.
/// The flux splits into `boundary_term` on the obstacle and `wall_term` on
/// the walls of a Dirichlet box.
pub fn rhs_domain_virial(dom: &DomainGrid, u: &ComplexField, w: &VirialWeight, epsilon: i8, p: f64) -> Result<VirialRecord> {
    let g = *dom.base();
    if g.dim() != 2 {
        return Err(Error::Dimension { expected: "2".into(), got: g.dim() });
    }
    let u = dom.pinned(u);
    let grad = boundary::gradient(dom, &u)?;
    let dv = g.cell_volume();
    let (mut bilap, mut nonlin, mut hess) = (0.0, 0.0, 0.0);
    for (idx, z) in u.values().iter().enumerate() {
        if !dom.is_active(idx) {
            continue;
        }
        let x = g.point(idx);
        let rho = z.norm_sqr();
        bilap -= rho * w.bilaplacian(x);
        nonlin += rho.powf(0.5 * (p + 1.0)) * w.laplacian(x);
        let hm = w.hessian(x);
        let d = [grad[0].values()[idx], grad[1].values()[idx]];
        for a in 0..2 {
            for b in 0..2 {
                hess += hm[a][b] * (d[a] * d[b].conj()).re;
            }
        }
    }
    let tr = normal_trace(dom, &u)?;
    let (mut bnd, mut wall) = (0.0, 0.0);
    for (f, t) in dom.faces().iter().zip(&tr) {
        let gr = w.grad(f.point);
        let c = f.weight * (gr[0] * f.normal[0] + gr[1] * f.normal[1]) * t.norm_sqr();
        if f.on_obstacle {
            bnd += c;
        } else {
            wall += c;
        }
    }
    let eps = epsilon as f64;
    let mut terms = BTreeMap::new();
    terms.insert("bilaplacian_term".to_string(), bilap * dv);
    terms.insert("nonlinear_term".to_string(), 2.0 * eps * (p - 1.0) / (p + 1.0) * nonlin * dv);
    terms.insert("boundary_term".to_string(), 2.0 * bnd);
    terms.insert("wall_term".to_string(), 2.0 * wall);
    terms.insert("hessian_term".to_string(), 4.0 * hess * dv);
    let total = terms.values().sum();
    Ok(VirialRecord {
        t: 0.0,
        i: domain_virial_functional(dom, &u, w),
        di_dt: f64::NAN,
        rhs_terms: terms,
        total,
        residual: None,
    })
}

pub struct PairT1d<'a> {
    pub domain: &'a DomainGrid,
    pub omega: Direction,
    pub epsilon: i8,
    pub p: f64,
}

impl IdentityPair for PairT1d<'_> {
    fn name(&self) -> String {
        format!("t1d omega={}", self.omega.label())
    }

    fn functional(&self, u: &ComplexField, _v: &ComplexField) -> Result<f64> {
        virial::interaction_directional(u, u, &self.omega)
    }

    fn rhs(&self, u: &ComplexField, _v: &ComplexField) -> Result<VirialRecord> {
        let factor = Manifest::current().constant("t1.factor")?;
        let mut rec = rhs_theorem_t1d(self.domain, u, &self.omega, self.epsilon, self.p)?;
        rec.total /= factor;
        Ok(rec)
    }
}

pub struct PairDomainVirial<'a> {
    pub domain: &'a DomainGrid,
    pub weight: VirialWeight,
    pub epsilon: i8,
    pub p: f64,
}

impl IdentityPair for PairDomainVirial<'_> {
    fn name(&self) -> String {
        format!("domain-virial h={}", self.weight.name)
    }

    fn functional(&self, u: &ComplexField, _v: &ComplexField) -> Result<f64> {
        Ok(domain_virial_functional(self.domain, u, &self.weight))
    }

    fn rhs(&self, u: &ComplexField, _v: &ComplexField) -> Result<VirialRecord> {
        rhs_domain_virial(self.domain, u, &self.weight, self.epsilon, self.p)
    }
}

fn pinning_metric(dom: &DomainGrid, traj: &Trajectory, rep: &mut VerificationReport) {
    let sup = traj.samples.iter().map(|(_, u)| dom.exterior_sup(u)).fold(0.0, f64::max);
    rep.set("exterior_sup", sup);
    if sup != 0.0 {
        rep.note(format!("exterior cells carry |u| up to {sup:e}"));
        rep.verdict = Verdict::Fail;
    }
}

/// Residual series of the directional identity on a CN trajectory. Epsilon
/// and `p` come from the trajectory's configuration.
pub fn verify_t1d(dom: &DomainGrid, traj: &Trajectory, omega: &Direction, opts: &IdentityOptions) -> Result<VerificationReport> {
    if traj.grid() != dom.base() {
        return Err(Error::GridMismatch);
    }
    lattice_check(omega)?;
    let pair = PairT1d { domain: dom, omega: *omega, epsilon: traj.config.epsilon, p: traj.config.p };
    let mut rep = verify_identity(traj, None, &pair, opts)?;
    rep.set("boundary_faces", dom.faces().len() as f64);
    rep.set("dx", dom.base().dx());
    pinning_metric(dom, traj, &mut rep);
    Ok(rep)
}

/// Residual series of the `M_h` virial, with the weight's sign audit.
pub fn domain_virial_residual(
    dom: &DomainGrid,
    traj: &Trajectory,
    w: &VirialWeight,
    opts: &IdentityOptions,
) -> Result<VerificationReport> {
    if traj.grid() != dom.base() {
        return Err(Error::GridMismatch);
    }
    let pair = PairDomainVirial { domain: dom, weight: w.clone(), epsilon: traj.config.epsilon, p: traj.config.p };
    let mut rep = verify_identity(traj, None, &pair, opts)?;
    let audit = sign_audit(dom, w);
    rep.set("min_hessian_eigenvalue", audit.min_hessian_eigenvalue);
    rep.set("min_laplacian", audit.min_laplacian);
    rep.set("min_normal_derivative", audit.min_normal_derivative);
    rep.set("max_normal_derivative", audit.max_normal_derivative);
    rep.set("dx", dom.base().dx());
    let (mut min_b, mut min_h) = (f64::INFINITY, f64::INFINITY);
    for (_, u) in traj.samples.iter().step_by(opts.rhs_stride.max(1)) {
        let rec = rhs_domain_virial(dom, u, w, traj.config.epsilon, traj.config.p)?;
        min_b = min_b.min(rec.term("boundary_term"));
        min_h = min_h.min(rec.term("hessian_term"));
    }
    rep.set("min_boundary_term", min_b);
    rep.set("min_hessian_term", min_h);
    pinning_metric(dom, traj, &mut rep);
    Ok(rep)
}

fn lattice_check(omega: &Direction) -> Result<()> {
    boundary::lattice_step(omega).map(|_| ())
}

/// A Gaussian beam aimed at a disk obstacle in a walled box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskStudyParams {
    pub half_length: f64,
    pub disk_center: [f64; 2],
    pub radius: f64,
    pub datum_center: [f64; 2],
    pub xi0: [f64; 2],
    pub sigma: f64,
    pub amplitude: f64,
    /// The datum is cut off within `collar_offset` of the boundary, smoothly
    /// over `collar_width`.
    pub collar_offset: f64,
    pub collar_width: f64,
    pub epsilon: i8,
    pub p: f64,
    pub dt: f64,
    pub t_final: f64,
    pub sample_stride: usize,
    pub levels: Vec<usize>,
}

impl Default for DiskStudyParams {
    fn default() -> Self {
        Self {
            half_length: 4.0,
            disk_center: [0.0, 0.0],
            radius: 0.8,
            datum_center: [-1.8, 0.2],
            xi0: [0.4, 0.0],
            sigma: 1.0,
            amplitude: 1.0,
            collar_offset: 0.05,
            collar_width: 0.5,
            epsilon: 0,
            p: 3.0,
            dt: 1e-3,
            t_final: 0.3,
            sample_stride: 10,
            levels: vec![64, 128, 256],
        }
    }
}

impl DiskStudyParams {
    pub fn domain(&self, n: usize) -> Result<DomainGrid> {
        let g = crate::grid::Grid::new(2, n, self.half_length)?;
        DomainGrid::new(
            g,
            GeometrySpec {
                obstacle: Obstacle::Disk { center: self.disk_center, radius: self.radius },
                outer: OuterBoundary::Dirichlet,
            },
        )
    }

    pub fn trajectory(&self, dom: &DomainGrid) -> Result<Trajectory> {
        let g = dom.base();
        let u0 = crate::data::gaussian(g, self.datum_center, self.xi0, self.sigma, self.amplitude);
        let u0 = dom.collared(&u0, self.collar_offset, self.collar_width);
        let cfg = EvolutionConfig::new(self.epsilon, self.p, self.dt, self.t_final, self.sample_stride)?;
        evolve_domain(dom, &u0, &cfg)
    }
}

/// Worst of several reports on one trajectory, keyed by their experiment.
fn merge_reports(name: &str, reports: Vec<VerificationReport>) -> VerificationReport {
    let rank = |v: Verdict| match v {
        Verdict::Fail => 3,
        Verdict::Inconclusive => 2,
        Verdict::Diagnostic => 1,
        Verdict::Pass => 0,
    };
    let worst = reports.iter().max_by(|a, b| a.measured.total_cmp(&b.measured)).cloned();
    let mut out = worst.expect("at least one report");
    out.experiment = name.to_string();
    for r in &reports {
        out.set(&format!("{}.residual", r.experiment), r.measured);
        if rank(r.verdict) > rank(out.verdict) {
            out.verdict = r.verdict;
        }
    }
    out
}

/// Refinement ladder of the directional identity on the disk for both axis
/// directions on one trajectory per level.
pub fn t1d_disk_study(params: &DiskStudyParams) -> Result<VerificationReport> {
    let tol = Manifest::current().tolerance("t1d.residual")?;
    let opts = IdentityOptions { tolerance: tol, rhs_stride: 1, wrap_limit: f64::INFINITY };
    let levels: Vec<f64> = params.levels.iter().map(|&n| 2.0 * params.half_length / n as f64).collect();
    let mut rep = crate::verify::refinement_study("verify-t1d", &levels, |dx| {
        let n = (2.0 * params.half_length / dx).round() as usize;
        let dom = params.domain(n)?;
        let traj = params.trajectory(&dom)?;
        let reps = [Direction::axis(2, 0), Direction::axis(2, 1)]
            .iter()
            .map(|om| verify_t1d(&dom, &traj, om, &opts))
            .collect::<Result<Vec<_>>>()?;
        Ok(merge_reports("verify-t1d", reps))
    })?;
    rep.config = serde_json::to_value(params).map_err(Error::Json)?;
    Ok(rep)
}

/// Refinement ladder of the `M_h` virial on the disk.
pub fn domain_virial_disk_study(params: &DiskStudyParams, w: &VirialWeight) -> Result<VerificationReport> {
    let tol = Manifest::current().tolerance("domain_virial.residual")?;
    let opts = IdentityOptions { tolerance: tol, rhs_stride: 1, wrap_limit: f64::INFINITY };
    let levels: Vec<f64> = params.levels.iter().map(|&n| 2.0 * params.half_length / n as f64).collect();
    let mut rep = crate::verify::refinement_study("domain-virial", &levels, |dx| {
        let n = (2.0 * params.half_length / dx).round() as usize;
        let dom = params.domain(n)?;
        let traj = params.trajectory(&dom)?;
        domain_virial_residual(&dom, &traj, w, &opts)
    })?;
    rep.config = serde_json::to_value(params).map_err(Error::Json)?;
    Ok(rep)
}

/// Prefix-sum boundary flux against the direct double sum on seeded data,
/// for a disk and a polygon and every exact direction.
pub fn boundary_brute_force_suite(n: usize, trials: usize, seed: u64, spec: &crate::data::RandomSpec) -> Result<VerificationReport> {
    let start = std::time::Instant::now();
    let tol = Manifest::current().tolerance("brute_force.relative")?;
    let mut rep = VerificationReport::new("boundary-brute-force", tol);
    let g = crate::grid::Grid::new(2, n, 4.0)?;
    rep.grid = Some(g);
    rep.config = serde_json::json!({ "trials": trials, "seed": seed, "random": spec });
    let geometries = [
        GeometrySpec::disk([0.3, -0.2], 1.1),
        GeometrySpec {
            obstacle: Obstacle::Polygon { center: [0.0, 0.0], vertices: vec![[1.2, 0.0], [0.2, 1.0], [-1.0, 0.3], [-0.6, -0.9]] },
            outer: OuterBoundary::Dirichlet,
        },
    ];
    let mut worst: f64 = 0.0;
    for geo in geometries {
        let dom = DomainGrid::new(g, geo)?;
        for k in 0..trials {
            let u = dom.pinned(&crate::data::random_smooth(&g, &crate::data::RandomSpec { seed: seed.wrapping_add(k as u64), ..*spec }));
            for om in Direction::exact_2d().iter().flat_map(|d| [*d, d.flipped()]) {
                let a = boundary_term_directional(&dom, &u, &om)?;
                let b = boundary::boundary_term_directional_brute(&dom, &u, &om)?;
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
            }
        }
    }
    rep.set("boundary_relative_gap", worst);
    rep.measured = worst;
    rep.verdict = if worst <= tol { Verdict::Pass } else { Verdict::Fail };
    Ok(rep.finish(start))
}
