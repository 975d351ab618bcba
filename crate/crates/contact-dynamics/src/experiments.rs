//! Reproduction experiments: the three divergence families, the sphere
//! computation with its closed-form oracles, the triangle-inequality
//! failure, the Reeb-conjugation identity, and Cauchy-sequence diagnostics
//! that identify which of the three convergence components fails.

use crate::algebra::{compose, inverse, ContactDiffeo};
use crate::error::{ContactError, Result};
use crate::flow::{advance, half_cos_reference, integrate_system, ContactDynamicalSystem, IntegratorOpts};
use crate::hamfield::{ExpressionField, FnField, Hamiltonian, JetValue};
use crate::manifold::{darboux_box_grid, quadrature_grid, ChartedManifold, ManifoldKind, Point, QuadratureGrid};
use crate::metrics::{c0_distance, contact_norm, grid_extrema, sup_norm};
use crate::numeric::{gauss_legendre, gl_integrate, plateau, plateau_deriv, simpson_weights};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, OnceLock};

// ---------------------------------------------------------------------------
// Report plumbing
// ---------------------------------------------------------------------------

/// How a scalar result is compared against its target.
#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub enum Check {
    /// |value - target| <= tol
    Eq,
    /// value <= target + tol
    Le,
    /// value >= target - tol
    Ge,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalarRow {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tol: f64,
    pub check: Check,
    /// How the target was obtained: "closed-form", "quadrature", "bound",
    /// or "trend".
    pub provenance: String,
    pub pass: bool,
}

pub fn row(name: &str, value: f64, target: f64, tol: f64, check: Check, provenance: &str) -> ScalarRow {
    let pass = match check {
        Check::Eq => (value - target).abs() <= tol,
        Check::Le => value <= target + tol,
        Check::Ge => value >= target - tol,
    };
    ScalarRow {
        name: name.into(),
        value,
        target,
        tol,
        check,
        provenance: provenance.into(),
        pass,
    }
}

/// One pairwise comparison of two systems in a Cauchy table.
#[derive(Debug, Clone, Serialize)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    pub d_bar_m: f64,
    pub conf_sup: f64,
    pub ham_norm: f64,
    pub d_alpha: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub name: String,
    pub t: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    pub scalars: Vec<ScalarRow>,
    pub pairs: Vec<PairRow>,
    pub series: Vec<Series>,
    pub pass: bool,
}

impl ExperimentReport {
    pub fn new(name: &str) -> Self {
        ExperimentReport {
            name: name.into(),
            params: BTreeMap::new(),
            scalars: Vec::new(),
            pairs: Vec::new(),
            series: Vec::new(),
            pass: true,
        }
    }

    pub fn param(&mut self, key: &str, value: f64) {
        self.params.insert(key.into(), value);
    }

    pub fn push(&mut self, r: ScalarRow) {
        self.pass &= r.pass;
        self.scalars.push(r);
    }
}

fn identity_system(m: &ChartedManifold, seeds: Vec<Point>) -> Result<ContactDynamicalSystem> {
    let f: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(m, "0")?);
    integrate_system(
        m,
        f,
        seeds,
        &IntegratorOpts {
            dt: 1e-2,
            t_samples: 11,
            t_end: 1.0,
        },
    )
}

// ---------------------------------------------------------------------------
// The divergent-conformal-factor family and its cutoff profiles
// ---------------------------------------------------------------------------

fn bump_raw(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// Integral of the mollifier profile over [0, 1].
fn bump_half_mass() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| gl_integrate(0.0, 1.0, 64, bump_raw))
}

/// Cumulative integral of the normalized mollifier on [0, 1], tabulated once
/// on a fine uniform grid; evaluations interpolate linearly (error ~1e-8).
fn odd_step_table() -> &'static [f64] {
    static CELL: OnceLock<Vec<f64>> = OnceLock::new();
    CELL.get_or_init(|| {
        let n = 8192usize;
        let h = 1.0 / n as f64;
        let mut acc = Vec::with_capacity(n + 1);
        let mut total = 0.0;
        acc.push(0.0);
        for i in 0..n {
            let a = i as f64 * h;
            total += gl_integrate(a, a + h, 4, bump_raw);
            acc.push(total);
        }
        let last = *acc.last().unwrap();
        for v in &mut acc {
            *v /= last;
        }
        acc
    })
}

/// Normalized odd smooth step: -1 for s <= -1, +1 for s >= 1, steepest at 0.
pub fn odd_step(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        return 1.0_f64.copysign(s);
    }
    let table = odd_step_table();
    let n = table.len() - 1;
    let u = s.abs() * n as f64;
    let i = (u as usize).min(n - 1);
    let frac = u - i as f64;
    let v = table[i] + frac * (table[i + 1] - table[i]);
    v.copysign(s)
}

/// Derivative of [`odd_step`]; its maximum sits at 0.
pub fn odd_step_slope(s: f64) -> f64 {
    bump_raw(s) / bump_half_mass()
}

/// The profile pair (radial bump, odd plateau) behind the Hamiltonians with
/// divergent conformal factors. For parameter k the z-profile `rho` satisfies
/// rho(0) = 0, rho'(0) = 1, |rho'| <= 1, and rho = +-pi/(k^2 ln k) beyond eps.
#[derive(Debug, Clone)]
pub struct CutoffFamily {
    pub k: u32,
    /// Plateau level pi/(k^2 ln k).
    pub amp: f64,
    /// Support scale; rho saturates and the radial bump vanishes beyond it.
    pub eps: f64,
}

impl CutoffFamily {
    pub fn new(k: u32) -> Result<Self> {
        if k < 2 {
            return Err(ContactError::Domain("cutoff family needs k >= 2".into()));
        }
        let amp = PI / (k as f64 * k as f64 * (k as f64).ln());
        let eps = amp * odd_step_slope(0.0);
        Ok(CutoffFamily { k, amp, eps })
    }

    pub fn rho(&self, z: f64) -> f64 {
        self.amp * odd_step(z / self.eps)
    }

    pub fn rho_prime(&self, z: f64) -> f64 {
        // amp * slope(z/eps) / eps with eps = amp * slope(0)
        odd_step_slope(z / self.eps) / odd_step_slope(0.0)
    }

    /// Radial cutoff: 1 for r <= eps/2, 0 for r >= eps.
    pub fn radial(&self, r: f64) -> f64 {
        plateau(r, -self.eps, -0.5 * self.eps, 0.5 * self.eps, self.eps)
    }

    pub fn radial_prime(&self, r: f64) -> f64 {
        plateau_deriv(r, -self.eps, -0.5 * self.eps, 0.5 * self.eps, self.eps)
    }

    /// Check the five defining constraints on a fine 1-D grid.
    pub fn verify(&self) -> Vec<ScalarRow> {
        let n = 4001;
        let mut max_slope = 0.0_f64;
        let mut plateau_err = 0.0_f64;
        for i in 0..n {
            let z = self.eps * (-1.5 + 3.0 * i as f64 / (n - 1) as f64);
            max_slope = max_slope.max(self.rho_prime(z).abs());
            if z.abs() >= self.eps {
                plateau_err = plateau_err.max((self.rho(z).abs() - self.amp).abs());
            }
        }
        vec![
            row("rho_at_zero", self.rho(0.0), 0.0, 1e-15, Check::Eq, "closed-form"),
            row("rho_slope_at_zero", self.rho_prime(0.0), 1.0, 1e-9, Check::Eq, "closed-form"),
            row("rho_max_slope", max_slope, 1.0, 1e-9, Check::Le, "quadrature"),
            row("rho_plateau_error", plateau_err, 0.0, 1e-12, Check::Eq, "quadrature"),
            row("radial_at_origin", self.radial(0.0), 1.0, 1e-15, Check::Eq, "closed-form"),
        ]
    }

    /// The Hamiltonian (radial(r)/k^2) sin(k^2 ln k * rho(z)) on Darboux R^3,
    /// with an analytic jet. Its conformal factor at the origin is t ln k.
    pub fn hamiltonian(&self) -> FnField {
        let fam = self.clone();
        let famj = self.clone();
        let k2 = (self.k as f64).powi(2);
        let a = k2 * (self.k as f64).ln();
        FnField::new(move |_m, _t, x: &Point| {
            let r = x.coords[0].hypot(x.coords[1]);
            Ok(fam.radial(r) / k2 * (a * fam.rho(x.coords[2])).sin())
        })
        .with_jet(move |_m, _t, x: &Point| {
            let (px, py, z) = (x.coords[0], x.coords[1], x.coords[2]);
            let r = px.hypot(py);
            let eta = famj.radial(r);
            let phase = a * famj.rho(z);
            let (s, c) = phase.sin_cos();
            let value = eta / k2 * s;
            let radial_d = if r > 1e-14 { famj.radial_prime(r) / r } else { 0.0 };
            let gx = px * radial_d / k2 * s;
            let gy = py * radial_d / k2 * s;
            let gz = eta / k2 * a * famj.rho_prime(z) * c;
            Ok(JetValue {
                value,
                grad: vec![gx, gy, gz],
                dt: 0.0,
                reeb_deriv: gz,
            })
        })
    }
}

/// Manifold sized so refinement search stays inside the largest support.
fn divergent_factors_manifold() -> ChartedManifold {
    ChartedManifold::darboux(2).with_sample_box(vec![(-4.5, 4.5); 3])
}

/// Seeds for the family: origin plus probes inside the support.
fn divergent_factors_seeds(eps: f64) -> Vec<Point> {
    vec![
        Point::new(vec![0.0, 0.0, 0.0]),
        Point::new(vec![0.25 * eps, 0.0, 0.0]),
        Point::new(vec![0.0, 0.3 * eps, 0.1 * eps]),
        Point::new(vec![0.4 * eps, -0.2 * eps, -0.3 * eps]),
    ]
}

pub fn divergent_factors_system(
    m: &ChartedManifold,
    k: u32,
    dt: f64,
) -> Result<(CutoffFamily, ContactDynamicalSystem)> {
    let fam = CutoffFamily::new(k)?;
    let field: Arc<dyn Hamiltonian> = Arc::new(fam.hamiltonian());
    let sys = integrate_system(
        m,
        field,
        divergent_factors_seeds(fam.eps),
        &IntegratorOpts {
            dt,
            t_samples: 11,
            t_end: 1.0,
        },
    )?;
    Ok((fam, sys))
}

/// Norm grid over the support of the family member with scale `eps`.
fn divergent_factors_grid(m: &ChartedManifold, eps: f64, res_z: usize) -> Result<QuadratureGrid> {
    let bx = vec![(-1.2 * eps, 1.2 * eps); 3];
    darboux_box_grid(m, &bx, &[10, 10, res_z], 1.0)
}

/// The family whose conformal factors diverge while isotopies and
/// Hamiltonians shrink: reports h(1, origin) = ln k and the norm bounds.
pub fn example_divergent_factors(k: u32) -> Result<ExperimentReport> {
    let m = divergent_factors_manifold();
    let (fam, sys) = divergent_factors_system(&m, k, 1e-2)?;
    let sys = Arc::new(sys);
    let kf = k as f64;
    let mut rep = ExperimentReport::new("divergent-factors");
    rep.param("k", kf);
    rep.param("eps_k", fam.eps);
    rep.param("dt", 1e-2);
    for r in fam.verify() {
        rep.push(r);
    }

    let (_, h_origin) = sys.flow_to(1.0, &Point::new(vec![0.0, 0.0, 0.0]))?;
    rep.push(row("conformal_origin_t1", h_origin, kf.ln(), 1e-3, Check::Eq, "closed-form"));
    rep.push(row("conformal_sup", sup_norm(&sys.conformal), kf.ln(), 1e-3, Check::Eq, "closed-form"));

    let grid = divergent_factors_grid(&m, fam.eps, 48)?;
    rep.param("grid_nodes", grid.nodes.len() as f64);
    let norm = contact_norm(&m, sys.hamiltonian.as_ref(), &grid, 5)?;
    rep.push(row("ham_norm", norm.total, 3.0 / (kf * kf), 1e-9, Check::Le, "bound"));

    let inv = Arc::new(inverse(sys.clone())?);
    let inv_norm = contact_norm(&m, inv.hamiltonian.as_ref(), &grid, 5)?;
    rep.push(row("inverse_ham_norm", inv_norm.total, 3.0 / kf, 1e-9, Check::Le, "bound"));

    let id = identity_system(&m, divergent_factors_seeds(fam.eps))?;
    let probes = divergent_factors_seeds(fam.eps);
    let (d_m, _) = c0_distance(&sys, &id, &probes, &[0.5, 1.0])?;
    rep.push(row(
        "c0_distance_to_identity",
        d_m,
        2.0 * 2.0_f64.sqrt() * fam.eps,
        1e-9,
        Check::Le,
        "bound",
    ));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// The divergent-isotopy family
// ---------------------------------------------------------------------------

/// Hamiltonian rho(x,y,z) * f_k(y) with f_k(y) = -eps tanh(y/eps), eps = 1/k.
/// The cutoff rho equals 1 on a neighborhood of the segment 0 <= x <= 1.
pub fn divergent_isotopies_field(k: u32) -> FnField {
    let eps = 1.0 / k as f64;
    let p = |x: f64| plateau(x, -0.6, -0.3, 1.3, 1.6);
    let q = |u: f64| plateau(u, -0.6, -0.3, 0.3, 0.6);
    let dp = |x: f64| plateau_deriv(x, -0.6, -0.3, 1.3, 1.6);
    let dq = |u: f64| plateau_deriv(u, -0.6, -0.3, 0.3, 0.6);
    FnField::new(move |_m, _t, pt: &Point| {
        let (x, y, z) = (pt.coords[0], pt.coords[1], pt.coords[2]);
        let f = -eps * (y / eps).tanh();
        Ok(p(x) * q(y) * q(z) * f)
    })
    .with_jet(move |_m, _t, pt: &Point| {
        let (x, y, z) = (pt.coords[0], pt.coords[1], pt.coords[2]);
        let th = (y / eps).tanh();
        let f = -eps * th;
        let fp = -(1.0 - th * th);
        let value = p(x) * q(y) * q(z) * f;
        let gx = dp(x) * q(y) * q(z) * f;
        let gy = p(x) * q(z) * (dq(y) * f + q(y) * fp);
        let gz = p(x) * q(y) * dq(z) * f;
        Ok(JetValue {
            value,
            grad: vec![gx, gy, gz],
            dt: 0.0,
            reeb_deriv: gz,
        })
    })
}

fn divergent_isotopies_seeds(eps: f64) -> Vec<Point> {
    vec![
        Point::new(vec![0.0, 0.0, 0.0]),
        Point::new(vec![0.0, 0.5 * eps, 0.0]),
        Point::new(vec![0.2, 2.0 * eps, 0.05]),
    ]
}

pub fn divergent_isotopies_system(
    m: &ChartedManifold,
    k: u32,
    dt: f64,
) -> Result<ContactDynamicalSystem> {
    let field: Arc<dyn Hamiltonian> = Arc::new(divergent_isotopies_field(k));
    integrate_system(
        m,
        field,
        divergent_isotopies_seeds(1.0 / k as f64),
        &IntegratorOpts {
            dt,
            t_samples: 11,
            t_end: 1.0,
        },
    )
}

/// The family whose Hamiltonians and conformal factors shrink while the
/// time-1 maps transport the origin a unit distance.
pub fn example_divergent_isotopies(k: u32) -> Result<ExperimentReport> {
    if k < 1 {
        return Err(ContactError::Domain("need k >= 1".into()));
    }
    let m = ChartedManifold::darboux(2);
    let eps = 1.0 / k as f64;
    let sys = divergent_isotopies_system(&m, k, 1e-3)?;
    let mut rep = ExperimentReport::new("divergent-isotopies");
    rep.param("k", k as f64);
    rep.param("eps_k", eps);
    rep.param("dt", 1e-3);

    let origin = Point::new(vec![0.0, 0.0, 0.0]);
    let (end, _) = sys.flow_to(1.0, &origin)?;
    let target = Point::new(vec![1.0, 0.0, 0.0]);
    rep.push(row(
        "endpoint_error",
        m.distance(&end, &target),
        0.0,
        1e-4,
        Check::Eq,
        "closed-form",
    ));

    let id = identity_system(&m, divergent_isotopies_seeds(eps))?;
    let probes = divergent_isotopies_seeds(eps);
    let (_, d_bar) = c0_distance(&sys, &id, &probes, &[0.5, 1.0])?;
    rep.push(row("d_bar_to_identity", d_bar, 1.0, 1e-3, Check::Ge, "closed-form"));

    let bx = vec![(-0.7, 1.7), (-0.7, 0.7), (-0.7, 0.7)];
    let grid = darboux_box_grid(&m, &bx, &[12, 40, 8], 1.0)?;
    rep.param("grid_nodes", grid.nodes.len() as f64);
    let norm = contact_norm(&m, sys.hamiltonian.as_ref(), &grid, 5)?;
    rep.push(row("ham_norm", norm.total, 3.0 * eps, 1e-9, Check::Le, "bound"));
    rep.push(row("conformal_sup", sup_norm(&sys.conformal), 7.0 * eps, 1e-9, Check::Le, "bound"));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// The middle-thirds reparameterization family
// ---------------------------------------------------------------------------

/// The 2^k closed intervals of the k-th middle-thirds stage.
pub fn cantor_intervals(k: u32) -> Vec<(f64, f64)> {
    let mut ivs = vec![(0.0, 1.0)];
    for _ in 0..k {
        let mut next = Vec::with_capacity(2 * ivs.len());
        for (a, b) in ivs {
            let third = (b - a) / 3.0;
            next.push((a, a + third));
            next.push((b - third, b));
        }
        ivs = next;
    }
    ivs
}

/// The Cantor function via ternary digits: F is constant on removed middle
/// thirds and F(0) = 0, F(1) = 1.
pub fn cantor_function(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let mut rem = t;
    let mut val = 0.0;
    let mut factor = 0.5;
    for _ in 0..60 {
        rem *= 3.0;
        let d = rem.floor().min(2.0);
        if (d - 1.0).abs() < 0.5 {
            return val + factor;
        }
        if d >= 2.0 {
            val += factor;
        }
        rem -= d;
        factor *= 0.5;
    }
    val
}

/// Space-independent Hamiltonian (3/2)^k * s_k(t): the smoothed indicator of
/// the k-th middle-thirds stage, with mass-preserving centered edge ramps of
/// width 3^{-k}/10.
#[derive(Debug, Clone)]
pub struct CantorField {
    pub k: u32,
    pub intervals: Vec<(f64, f64)>,
    pub ramp: f64,
    pub scale: f64,
}

impl CantorField {
    pub fn new(k: u32) -> Result<Self> {
        if k > 10 {
            return Err(ContactError::Domain(
                "middle-thirds stage must satisfy k <= 10".into(),
            ));
        }
        Ok(CantorField {
            k,
            intervals: cantor_intervals(k),
            ramp: 3.0_f64.powi(-(k as i32)) / 10.0,
            scale: 1.5_f64.powi(k as i32),
        })
    }

    /// Smoothed indicator in [0, 1]; ramps are centered on interval edges.
    pub fn indicator(&self, t: f64) -> f64 {
        let d = 0.5 * self.ramp;
        let idx = self.intervals.partition_point(|iv| iv.0 - d <= t);
        let mut best = 0.0_f64;
        for cand in idx.saturating_sub(1)..=idx.min(self.intervals.len().saturating_sub(1)) {
            let (a, b) = self.intervals[cand];
            best = best.max(plateau(t, a - d, a + d, b - d, b + d));
        }
        best
    }

    pub fn value(&self, t: f64) -> f64 {
        self.scale * self.indicator(t)
    }

    /// Exact indicator without smoothing.
    pub fn step_value(&self, t: f64) -> f64 {
        let idx = self.intervals.partition_point(|iv| iv.0 <= t);
        if idx > 0 && t <= self.intervals[idx - 1].1 {
            self.scale
        } else {
            0.0
        }
    }
}

impl Hamiltonian for CantorField {
    fn value(&self, _m: &ChartedManifold, t: f64, _x: &Point) -> Result<f64> {
        Ok(CantorField::value(self, t))
    }

    fn jet(&self, m: &ChartedManifold, t: f64, _x: &Point) -> Result<JetValue> {
        // space-independent; the time slope is irrelevant to the dynamics
        Ok(JetValue {
            value: CantorField::value(self, t),
            grad: vec![0.0; m.dim()],
            dt: 0.0,
            reeb_deriv: 0.0,
        })
    }
}

/// Exact L1 distance between the unsmoothed step functions of stages k > j:
/// 2 (1 - (2/3)^{k-j}) by the nesting of the stages.
pub fn cantor_step_l1(k: u32, j: u32) -> f64 {
    assert!(k > j);
    let mk = (2.0_f64 / 3.0).powi(k as i32);
    let mj = (2.0_f64 / 3.0).powi(j as i32);
    let sk = 1.5_f64.powi(k as i32);
    let sj = 1.5_f64.powi(j as i32);
    (sk - sj) * mk + sj * (mj - mk)
}

/// L1 distance between the smoothed stage functions by composite Simpson
/// fine enough to resolve the narrower ramps.
pub fn cantor_mollified_l1(a: &CantorField, b: &CantorField) -> f64 {
    let kmax = a.k.max(b.k);
    let n = (160 * 3_usize.pow(kmax)) | 1;
    let w = simpson_weights(n);
    let mut total = 0.0;
    for (i, wi) in w.iter().enumerate() {
        let t = i as f64 / (n - 1) as f64;
        total += wi * (a.value(t) - b.value(t)).abs();
    }
    total
}

fn cantor_seeds() -> Vec<Point> {
    vec![
        Point::new(vec![0.3, 1.1, 0.8]),
        Point::new(vec![4.0, 2.0, 0.6]),
        Point::new(vec![5.5, 0.2, 1.1]),
    ]
}

pub fn cantor_system(m: &ChartedManifold, k: u32) -> Result<ContactDynamicalSystem> {
    let f = CantorField::new(k)?;
    let dt = (f.ramp / 8.0).min(1e-2);
    let field: Arc<dyn Hamiltonian> = Arc::new(f);
    integrate_system(
        m,
        field,
        cantor_seeds(),
        &IntegratorOpts {
            dt,
            t_samples: 11,
            t_end: 1.0,
        },
    )
}

/// The family of Reeb reparameterizations whose Hamiltonians stay apart in
/// the contact norm while flows and conformal factors converge.
pub fn example_cantor(k: u32) -> Result<ExperimentReport> {
    if k < 2 {
        return Err(ContactError::Domain("need k >= 2 for a pair".into()));
    }
    let fk = CantorField::new(k)?;
    let fj = CantorField::new(k - 1)?;
    let mut rep = ExperimentReport::new("cantor");
    rep.param("k", k as f64);
    rep.param("ramp_k", fk.ramp);

    rep.push(row(
        "step_l1_consecutive",
        cantor_step_l1(k, k - 1),
        5.0 / 9.0,
        1e-12,
        Check::Ge,
        "closed-form",
    ));
    rep.push(row(
        "step_l1_first",
        cantor_step_l1(k, 1),
        5.0 / 9.0,
        1e-12,
        Check::Ge,
        "closed-form",
    ));
    rep.push(row(
        "mollified_l1_consecutive",
        cantor_mollified_l1(&fk, &fj),
        0.5,
        1e-9,
        Check::Ge,
        "quadrature",
    ));

    // cumulative integral of the smoothed stage vs the Cantor function
    let n = 160 * 3_usize.pow(k);
    let mut acc = 0.0;
    let mut sup_err = 0.0_f64;
    let mut prev = fk.value(0.0);
    let h = 1.0 / n as f64;
    let mut series_t = Vec::new();
    let mut series_v = Vec::new();
    for i in 1..=n {
        let t = i as f64 * h;
        let v = fk.value(t);
        acc += 0.5 * h * (prev + v);
        prev = v;
        let err = (acc - cantor_function(t)).abs();
        sup_err = sup_err.max(err);
        if i % (n / 100).max(1) == 0 {
            series_t.push(t);
            series_v.push(err);
        }
    }
    rep.push(row(
        "cantor_function_sup_error",
        sup_err,
        1.5 * 0.5_f64.powi(k as i32),
        1e-12,
        Check::Le,
        "bound",
    ));
    rep.series.push(Series {
        name: "antiderivative_error".into(),
        t: series_t,
        values: series_v,
    });

    let m = ChartedManifold::hopf_sphere();
    let sys_k = cantor_system(&m, k)?;
    let sys_j = cantor_system(&m, k - 1)?;
    rep.push(row(
        "conformal_sup",
        sup_norm(&sys_k.conformal).max(sup_norm(&sys_j.conformal)),
        0.0,
        1e-10,
        Check::Eq,
        "closed-form",
    ));
    let (d_m, _) = c0_distance(&sys_k, &sys_j, &cantor_seeds(), &[0.25, 0.5, 0.75, 1.0])?;
    rep.push(row(
        "flow_c0_distance",
        d_m,
        30.0 * 0.5_f64.powi(k as i32 - 1),
        1e-9,
        Check::Le,
        "bound",
    ));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// The sphere computation with closed-form oracles
// ---------------------------------------------------------------------------

/// Hopf chart sized for flow queries: a small pole margin, since the
/// half-cosine flow squeezes orbits toward the equator's complement.
pub fn sphere_manifold() -> ChartedManifold {
    ChartedManifold::hopf_sphere().with_pole_margin(1e-4)
}

/// Uniform-angle / Gauss-Legendre grid restricted to an eta band. Fields in
/// this experiment depend on xi1 only, so band means equal global means.
pub fn hopf_band_grid(n1: usize, n2: usize, ne: usize, eta_lo: f64, eta_hi: f64) -> QuadratureGrid {
    let (gl_nodes, gl_weights) = gauss_legendre(ne);
    let mid = 0.5 * (eta_lo + eta_hi);
    let half = 0.5 * (eta_hi - eta_lo);
    let mut eta_nodes = Vec::with_capacity(ne);
    let mut eta_weights = Vec::with_capacity(ne);
    for (x, w) in gl_nodes.iter().zip(&gl_weights) {
        let eta: f64 = mid + half * x;
        eta_nodes.push(eta);
        eta_weights.push(w * half * eta.sin() * eta.cos());
    }
    let eta_total: f64 = eta_weights.iter().sum();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n1 {
        let xi1 = TAU * i as f64 / n1 as f64;
        for j in 0..n2 {
            let xi2 = TAU * j as f64 / n2 as f64;
            for (eta, ew) in eta_nodes.iter().zip(&eta_weights) {
                nodes.push(Point::new(vec![xi1, xi2, *eta]));
                weights.push(ew / eta_total / (n1 * n2) as f64);
            }
        }
    }
    QuadratureGrid {
        nodes,
        weights,
        mass: 1.0,
        resolution: vec![n1, n2, ne],
        spacing: vec![TAU / n1 as f64, TAU / n2 as f64, (eta_hi - eta_lo) / ne as f64],
    }
}

/// Closed-form pullback mean of the composed field at time t (the volume
/// element weighted through the flow map, integrand e^{3 h_t} over start
/// points): (3/8) e^{2 pi t} + 1/4 + (3/8) e^{-2 pi t}.
pub fn sphere_composed_mean(t: f64) -> f64 {
    0.375 * (TAU * t).exp() + 0.25 + 0.375 * (-TAU * t).exp()
}

fn sphere_seeds(count: usize) -> Vec<Point> {
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..count)
        .map(|_| {
            Point::new(vec![
                rng.gen_range(0.0..TAU),
                rng.gen_range(0.0..TAU),
                rng.gen_range(1.45..1.55),
            ])
        })
        .collect()
}

/// The full half-cosine computation: closed-form flow and conformal factor,
/// unit norms of the generator, its inverse and the Reeb generator, and the
/// composed norm with its mean-curve oracle.
pub fn example_sphere() -> Result<ExperimentReport> {
    let m = sphere_manifold();
    let mut rep = ExperimentReport::new("sphere");
    let opts = IntegratorOpts {
        dt: 1e-3,
        t_samples: 11,
        t_end: 1.0,
    };
    rep.param("dt", opts.dt);
    let h_field: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "0.5*cos(xi1)")?);
    let f_field: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "1")?);
    let seeds = sphere_seeds(32);
    rep.param("seed_count", seeds.len() as f64);
    let h_sys = Arc::new(integrate_system(&m, h_field.clone(), seeds.clone(), &opts)?);
    let f_sys = Arc::new(integrate_system(&m, f_field.clone(), seeds.clone(), &opts)?);

    // (i) + (ii): integrated flow and conformal factor vs the closed form
    let mut pos_err = 0.0_f64;
    let mut conf_err = 0.0_f64;
    for (i, seed) in seeds.iter().enumerate() {
        let (xi10, xi20, eta0) = (seed.coords[0], seed.coords[1], seed.coords[2]);
        for &t in &[0.3, 0.5, 0.8, 1.0] {
            let (p, h) = h_sys.at_seed(i, t).map(|(p, h)| (p.clone(), h))?;
            let href = half_cos_reference::conformal(xi10, t);
            let xi1r = half_cos_reference::xi1(xi10, t);
            let reference = Point::new(vec![
                xi1r,
                xi20 + (xi1r - half_cos_reference::xi1(xi10, 0.0)),
                half_cos_reference::eta(xi10, eta0, t),
            ])
            .wrapped(&m);
            pos_err = pos_err.max(m.distance(&p, &reference));
            conf_err = conf_err.max((h - href).abs());
        }
    }
    rep.push(row("trajectory_error", pos_err, 0.0, 1e-5, Check::Eq, "closed-form"));
    rep.push(row("conformal_error", conf_err, 0.0, 1e-6, Check::Eq, "closed-form"));

    // (iii) unit norms and the displaced norm
    let grid = quadrature_grid(&m, &[24, 4, 6])?;
    let band = hopf_band_grid(24, 4, 4, 1.50, 1.55);
    let norm_h = contact_norm(&m, h_field.as_ref(), &grid, 5)?.total;
    let norm_f = contact_norm(&m, f_field.as_ref(), &grid, 5)?.total;
    let one_minus: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "1-0.5*cos(xi1)")?);
    let norm_one_minus = contact_norm(&m, one_minus.as_ref(), &grid, 5)?.total;
    let h_inv = inverse(h_sys.clone())?;
    let norm_h_inv = contact_norm(&m, h_inv.hamiltonian.as_ref(), &band, 5)?.total;
    let f_inv = inverse(f_sys.clone())?;
    let norm_f_inv = contact_norm(&m, f_inv.hamiltonian.as_ref(), &band, 5)?.total;
    rep.push(row("norm_h", norm_h, 1.0, 1e-5, Check::Eq, "closed-form"));
    rep.push(row("norm_f", norm_f, 1.0, 1e-5, Check::Eq, "closed-form"));
    rep.push(row("norm_h_inverse", norm_h_inv, 1.0, 1e-5, Check::Eq, "closed-form"));
    rep.push(row("norm_f_inverse", norm_f_inv, 1.0, 1e-5, Check::Eq, "closed-form"));
    rep.push(row("norm_one_minus_h", norm_one_minus, 2.0, 1e-5, Check::Eq, "closed-form"));

    // (iv) + (v) the composed system.
    //
    // A subtlety governs the mean of the composed field. The half-cosine
    // generator is singular on the circle eta = 0 (its value depends on xi1,
    // which is undefined there), so its time-t map is not a diffeomorphism of
    // the whole sphere: a set of positive measure reaches the singular circle
    // before time 1. Consequently two natural mean conventions disagree and
    // both are reported:
    //   * the pullback mean, which weights the volume element through the flow
    //     map (integrand e^{3 h_t} over start points; closed form
    //     (3/8)e^{2 pi t} + 1/4 + (3/8)e^{-2 pi t}, integral ~ 32.21), and
    //   * the direct mean, sampled at fixed points of the band (closed form
    //     cosh(pi t) - sin(xi1) sinh(pi t) pointwise, so the curve is
    //     cosh(pi t) with integral sinh(pi)/pi ~ 3.676).
    // The headline composed norm uses the pullback mean; the direct-mean norm
    // is recorded alongside, and the triangle inequality fails under either
    // convention.
    let fast_opts = IntegratorOpts {
        dt: 1e-2,
        t_samples: 11,
        t_end: 1.0,
    };
    let h_fast = Arc::new(integrate_system(&m, h_field.clone(), seeds.clone(), &fast_opts)?);
    let f_fast = Arc::new(integrate_system(&m, f_field.clone(), seeds.clone(), &fast_opts)?);
    let composed = Arc::new(compose(h_fast.clone(), f_fast.clone())?);
    let comp_field = composed.hamiltonian.clone();

    let nt = 65;
    let w = simpson_weights(nt);
    let n_xi = 256;

    // Oscillation of the composed field at each time node, with extrema
    // refined over an eta band that the flow cannot push into a pole.
    let ext_band = hopf_band_grid(128, 2, 3, 1.50, 1.55);
    let osc_curve: Result<Vec<f64>> = (0..nt)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 / (nt - 1) as f64;
            let cf = comp_field.clone();
            let mc = m.clone();
            let (lo, hi, _) = grid_extrema(&m, &move |p: &Point| cf.value(&mc, t, p), &ext_band)?;
            Ok(hi - lo)
        })
        .collect();
    let osc_curve = osc_curve?;
    let mut osc_margin = f64::INFINITY;
    let mut osc_integral = 0.0;
    for (j, osc) in osc_curve.iter().enumerate() {
        let t = j as f64 / (nt - 1) as f64;
        osc_margin = osc_margin.min(osc - ((PI * t).exp() - (-PI * t).exp()));
        osc_integral += w[j] * osc;
    }
    rep.push(row("osc_lower_bound_margin", osc_margin, 0.0, 1e-6, Check::Ge, "closed-form"));
    let osc_bound = (PI.exp() + (-PI).exp() - 2.0) / PI;
    rep.push(row("osc_integral", osc_integral, osc_bound, 0.0, Check::Ge, "bound"));

    // Mean curves: pullback (e^{3 h_t} over start points, h_t co-integrated
    // numerically) and direct (composed field sampled on a fixed xi1 ring).
    let curves: Result<Vec<(f64, f64)>> = (0..nt)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 / (nt - 1) as f64;
            let mut pull = 0.0;
            let mut direct = 0.0;
            for i in 0..n_xi {
                let p = Point::new(vec![TAU * i as f64 / n_xi as f64, 0.7, 1.52]);
                pull += (3.0 * h_fast.flow_to(t, &p)?.1).exp();
                direct += comp_field.value(&m, t, &p)?;
            }
            Ok((pull / n_xi as f64, direct / n_xi as f64))
        })
        .collect();
    let curves = curves?;
    let mut max_rel = 0.0_f64;
    let mut max_rel_direct = 0.0_f64;
    let mut min_exp_margin = f64::INFINITY;
    let mut pull_integral = 0.0;
    let mut direct_integral = 0.0;
    let mut ts = Vec::with_capacity(nt);
    for (j, (cp, cd)) in curves.iter().enumerate() {
        let t = j as f64 / (nt - 1) as f64;
        ts.push(t);
        let oracle = sphere_composed_mean(t);
        max_rel = max_rel.max((cp - oracle).abs() / oracle);
        max_rel_direct = max_rel_direct.max((cd - (PI * t).cosh()).abs() / (PI * t).cosh());
        min_exp_margin = min_exp_margin.min(cp.min(*cd) - (-3.0 * PI * t).exp());
        pull_integral += w[j] * cp;
        direct_integral += w[j] * cd;
    }
    let oracle_integral = 3.0 / (8.0 * TAU) * (TAU.exp() - (-TAU).exp()) + 0.25;
    let direct_oracle_integral = PI.sinh() / PI;
    rep.push(row("mean_curve_max_rel_error", max_rel, 0.0, 5e-3, Check::Eq, "closed-form"));
    rep.push(row(
        "mean_direct_max_rel_error",
        max_rel_direct,
        0.0,
        5e-3,
        Check::Eq,
        "closed-form",
    ));
    rep.push(row("mean_lower_bound_margin", min_exp_margin, 0.0, 1e-9, Check::Ge, "closed-form"));
    rep.push(row(
        "mean_integral",
        pull_integral,
        oracle_integral,
        0.005 * oracle_integral,
        Check::Eq,
        "closed-form",
    ));
    rep.push(row(
        "mean_direct_integral",
        direct_integral,
        direct_oracle_integral,
        0.005 * direct_oracle_integral,
        Check::Eq,
        "closed-form",
    ));
    rep.series.push(Series {
        name: "composed_mean_pullback".into(),
        t: ts.clone(),
        values: curves.iter().map(|c| c.0).collect(),
    });
    rep.series.push(Series {
        name: "composed_mean_direct".into(),
        t: ts,
        values: curves.iter().map(|c| c.1).collect(),
    });

    // Composed norms under both mean conventions, against the recorded lower
    // bounds (the two additive-constant variants 1/(3 pi) and 3 pi are both
    // checked) and against the sum of the factor norms.
    let norm_comp = osc_integral + pull_integral;
    let norm_comp_direct = osc_integral + direct_integral;
    rep.push(row("norm_composed", norm_comp, 16.0, 0.0, Check::Ge, "bound"));
    rep.push(row("norm_composed_vs_mean_alone", norm_comp, 32.0, 0.0, Check::Ge, "bound"));
    rep.push(row(
        "norm_composed_vs_small_bound",
        norm_comp,
        osc_bound + (1.0 - (-3.0 * PI).exp()) / (3.0 * PI),
        0.0,
        Check::Ge,
        "bound",
    ));
    rep.push(row(
        "norm_composed_vs_large_bound",
        norm_comp,
        osc_bound + 3.0 * PI * (1.0 - (-3.0 * PI).exp()),
        0.0,
        Check::Ge,
        "bound",
    ));
    rep.push(row("norm_composed_vs_sum", norm_comp, norm_h + norm_f, 0.0, Check::Ge, "bound"));
    rep.push(row(
        "norm_composed_direct_vs_sum",
        norm_comp_direct,
        norm_h + norm_f,
        0.0,
        Check::Ge,
        "bound",
    ));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Triangle-inequality failure
// ---------------------------------------------------------------------------

/// Composition of the divergent-factor generator with the Reeb generator:
/// the composed norm exceeds the sum of the two norms by roughly k.
pub fn example_triangle_failure(k: u32) -> Result<ExperimentReport> {
    let m = divergent_factors_manifold();
    let (fam, hk_sys) = divergent_factors_system(&m, k, 1e-2)?;
    let hk_sys = Arc::new(hk_sys);
    let f_field: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "1")?);
    let f_sys = Arc::new(integrate_system(
        &m,
        f_field.clone(),
        divergent_factors_seeds(fam.eps),
        &IntegratorOpts {
            dt: 1e-2,
            t_samples: 11,
            t_end: 1.0,
        },
    )?);
    let kf = k as f64;
    let mut rep = ExperimentReport::new("triangle-failure");
    rep.param("k", kf);
    rep.param("eps_k", fam.eps);

    let composed = Arc::new(compose(hk_sys.clone(), f_sys.clone())?);
    let origin = Point::new(vec![0.0, 0.0, 0.0]);
    let at_origin = composed.hamiltonian.value(&m, 1.0, &origin)?;
    rep.push(row("composed_value_origin_t1", at_origin, kf, 1e-2, Check::Eq, "closed-form"));

    let grid = divergent_factors_grid(&m, fam.eps, 96)?;
    rep.param("grid_nodes", grid.nodes.len() as f64);
    let norm_comp = contact_norm(&m, composed.hamiltonian.as_ref(), &grid, 9)?.total;
    let norm_hk = contact_norm(&m, hk_sys.hamiltonian.as_ref(), &grid, 5)?.total;
    let norm_f = contact_norm(&m, f_field.as_ref(), &grid, 5)?.total;
    let lower = (kf - 1.0) / kf.ln() - 1.0;
    rep.push(row("norm_composed", norm_comp, lower, 1e-9, Check::Ge, "bound"));
    rep.push(row("norm_hk", norm_hk, 3.0 / (kf * kf), 1e-9, Check::Le, "bound"));
    rep.push(row("norm_f", norm_f, 1.0, 1e-9, Check::Eq, "closed-form"));
    rep.push(row(
        "norm_sum",
        norm_hk + norm_f,
        3.0 / (kf * kf) + 1.0,
        1e-9,
        Check::Le,
        "bound",
    ));
    rep.push(row(
        "triangle_violation",
        norm_comp - (norm_hk + norm_f),
        0.0,
        0.0,
        Check::Ge,
        "bound",
    ));

    let inv = Arc::new(inverse(hk_sys.clone())?);
    let grid_small = divergent_factors_grid(&m, fam.eps, 48)?;
    let norm_inv = contact_norm(&m, inv.hamiltonian.as_ref(), &grid_small, 5)?.total;
    rep.push(row("norm_hk_inverse", norm_inv, 3.0 / kf, 1e-9, Check::Le, "bound"));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Reeb conjugation
// ---------------------------------------------------------------------------

/// The time-t Reeb translation in chart coordinates.
pub fn reeb_time(m: &ChartedManifold, t: f64, x: &Point) -> Point {
    let mut c = x.coords.clone();
    match m.kind {
        ManifoldKind::Darboux { .. } => {
            let last = c.len() - 1;
            c[last] += t;
        }
        ManifoldKind::HopfSphere => {
            c[0] += TAU * t;
            c[1] += TAU * t;
        }
    }
    Point::new(c).wrapped(m)
}

/// Max deviation over probes and times between the flow of e^{-g} and the
/// conjugated Reeb flow phi^{-1} o phi_R^t o phi, where g is the conformal
/// factor of phi.
pub fn reeb_conjugation_check(
    m: &ChartedManifold,
    phi: &ContactDiffeo,
    probes: &[Point],
    times: &[f64],
    dt: f64,
) -> Result<f64> {
    let g = phi.log_factor.clone();
    let field = FnField::new(move |_m, _t, x: &Point| Ok((-g(x)?).exp()));
    let mut worst = 0.0_f64;
    for x in probes {
        for &t in times {
            let (left, _) = advance(m, &field, 0.0, t, x, 0.0, dt)?;
            let right = (phi.inverse)(&reeb_time(m, t, &(phi.forward)(x)?))?;
            worst = worst.max(m.distance(&left, &right));
        }
    }
    Ok(worst)
}

/// The conjugation identity on three maps: the identity, a strict
/// contactomorphism (angle translation), and the half-cosine time-1 map.
pub fn reeb_conjugation_suite() -> Result<ExperimentReport> {
    let m = sphere_manifold();
    let mut rep = ExperimentReport::new("reeb-conjugation");
    let times = [0.5, 1.0];

    let generic_probes = vec![
        Point::new(vec![0.5, 1.2, 0.9]),
        Point::new(vec![2.0, 4.0, 1.54]),
    ];
    let dev_id = reeb_conjugation_check(&m, &ContactDiffeo::identity(), &generic_probes, &times, 1e-2)?;
    rep.push(row("identity_deviation", dev_id, 0.0, 1e-9, Check::Eq, "closed-form"));

    let strict = ContactDiffeo {
        forward: Arc::new(|x: &Point| {
            let mut c = x.coords.clone();
            c[0] += 0.7;
            c[1] += 1.3;
            Ok(Point::new(c))
        }),
        inverse: Arc::new(|x: &Point| {
            let mut c = x.coords.clone();
            c[0] -= 0.7;
            c[1] -= 1.3;
            Ok(Point::new(c))
        }),
        log_factor: Arc::new(|_| Ok(0.0)),
    };
    let dev_strict = reeb_conjugation_check(&m, &strict, &generic_probes, &times, 1e-2)?;
    rep.push(row("strict_deviation", dev_strict, 0.0, 1e-5, Check::Eq, "closed-form"));

    let h_field: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "0.5*cos(xi1)")?);
    let probes = vec![
        Point::new(vec![0.3, 1.0, 1.54]),
        Point::new(vec![4.2, 2.5, 1.54]),
    ];
    let h_sys = Arc::new(integrate_system(
        &m,
        h_field,
        probes.clone(),
        &IntegratorOpts {
            dt: 1e-2,
            t_samples: 11,
            t_end: 1.0,
        },
    )?);
    let phi = ContactDiffeo::from_system(h_sys, 1.0);
    // the conjugated generator reaches e^{sup|h|} ~ 11.6, so angular speeds
    // approach 2 pi e^{sup|h|}; a finer step keeps the RK4 error below 1e-5
    let dev = reeb_conjugation_check(&m, &phi, &probes, &times, 1e-3)?;
    rep.push(row("half_cos_time1_deviation", dev, 0.0, 1e-4, Check::Eq, "closed-form"));
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Cauchy diagnostics
// ---------------------------------------------------------------------------

/// Pairwise distances of an ordered family: the barred C0 distance, the sup
/// of the conformal-factor difference over probes and times, the contact
/// norm of the Hamiltonian difference, and their sum.
#[allow(clippy::type_complexity)]
pub fn cauchy_pairs(
    systems: &[Arc<ContactDynamicalSystem>],
    probes: &[Point],
    times: &[f64],
    grid_for_pair: &dyn Fn(usize, usize) -> Result<QuadratureGrid>,
    t_samples: usize,
) -> Result<Vec<PairRow>> {
    if systems.len() < 3 {
        return Err(ContactError::Domain(
            "a Cauchy table needs at least 3 systems".into(),
        ));
    }
    let m = &systems[0].manifold;
    for s in systems.iter().skip(1) {
        if s.manifold != *m {
            return Err(ContactError::ManifoldMismatch);
        }
    }
    let mut out = Vec::new();
    for i in 0..systems.len() {
        for j in (i + 1)..systems.len() {
            let (a, b) = (&systems[i], &systems[j]);
            let (_, d_bar) = c0_distance(a, b, probes, times)?;
            let mut conf_sup = 0.0_f64;
            for x in probes {
                for &t in times {
                    let ha = a.flow_to(t, x)?.1;
                    let hb = b.flow_to(t, x)?.1;
                    conf_sup = conf_sup.max((ha - hb).abs());
                }
            }
            let fa = a.hamiltonian.clone();
            let fb = b.hamiltonian.clone();
            let diff = FnField::new(move |m: &ChartedManifold, t, x: &Point| {
                Ok(fa.value(m, t, x)? - fb.value(m, t, x)?)
            });
            let grid = grid_for_pair(i, j)?;
            let ham_norm = contact_norm(m, &diff, &grid, t_samples)?.total;
            out.push(PairRow {
                i,
                j,
                d_bar_m: d_bar,
                conf_sup,
                ham_norm,
                d_alpha: d_bar + conf_sup + ham_norm,
            });
        }
    }
    Ok(out)
}

/// Whether consecutive-pair values trend to zero: the last value must drop
/// below 30% of the first (or an absolute floor).
pub fn trend_converges(consecutive: &[f64]) -> bool {
    let first = consecutive.first().copied().unwrap_or(0.0);
    let last = consecutive.last().copied().unwrap_or(0.0);
    last <= (0.3 * first).max(0.02)
}

fn consecutive_component(pairs: &[PairRow], pick: &dyn Fn(&PairRow) -> f64) -> Vec<f64> {
    pairs
        .iter()
        .filter(|p| p.j == p.i + 1)
        .map(|p| pick(p))
        .collect()
}

/// Assemble a report from pairwise rows plus convergence-trend flags; the
/// expectations say which components must converge (true) or diverge (false).
pub fn cauchy_table(
    name: &str,
    pairs: Vec<PairRow>,
    expect_converge: [bool; 3],
) -> ExperimentReport {
    let mut rep = ExperimentReport::new(name);
    let components: [(&str, Box<dyn Fn(&PairRow) -> f64>); 3] = [
        ("d_bar_m", Box::new(|p: &PairRow| p.d_bar_m)),
        ("conf_sup", Box::new(|p: &PairRow| p.conf_sup)),
        ("ham_norm", Box::new(|p: &PairRow| p.ham_norm)),
    ];
    for ((label, pick), expect) in components.iter().zip(expect_converge) {
        let vals = consecutive_component(&pairs, pick.as_ref());
        let flag = trend_converges(&vals) as u8 as f64;
        rep.push(row(
            &format!("{label}_converges"),
            flag,
            expect as u8 as f64,
            0.1,
            Check::Eq,
            "trend",
        ));
        if let Some(last) = vals.last() {
            rep.params.insert(format!("last_consecutive_{label}"), *last);
        }
    }
    rep.pairs = pairs;
    rep
}

/// Family with shrinking isotopies and Hamiltonians but divergent factors.
pub fn cauchy_divergent_factors() -> Result<ExperimentReport> {
    let ks = [2u32, 4, 8, 16];
    let m = divergent_factors_manifold();
    let mut systems = Vec::new();
    let mut epsilons = Vec::new();
    for &k in &ks {
        let (fam, sys) = divergent_factors_system(&m, k, 1e-2)?;
        epsilons.push(fam.eps);
        systems.push(Arc::new(sys));
    }
    let mut probes = vec![Point::new(vec![0.0, 0.0, 0.0])];
    for &e in &epsilons {
        probes.push(Point::new(vec![0.3 * e, 0.0, 0.1 * e]));
    }
    let m2 = m.clone();
    let eps2 = epsilons.clone();
    let grid_for_pair = move |i: usize, _j: usize| divergent_factors_grid(&m2, 1.0 * eps2[i], 48);
    let pairs = cauchy_pairs(&systems, &probes, &[0.5, 1.0], &grid_for_pair, 5)?;
    let mut rep = cauchy_table("cauchy-divergent-factors", pairs, [true, false, true]);
    rep.param("family_size", ks.len() as f64);
    Ok(rep)
}

/// Family with shrinking Hamiltonians and factors but divergent isotopies.
pub fn cauchy_divergent_isotopies() -> Result<ExperimentReport> {
    // Small k keeps the profiles in their linear regime over the bump
    // support, so the generator differences only enter their asymptotic
    // halving once k is large; the family runs to 64 so the trend is visible.
    let ks = [2u32, 4, 8, 16, 32, 64];
    let m = ChartedManifold::darboux(2);
    let mut systems = Vec::new();
    for &k in &ks {
        systems.push(Arc::new(divergent_isotopies_system(&m, k, 1e-3)?));
    }
    let mut probes = vec![Point::new(vec![0.0, 0.0, 0.0])];
    for w in ks.windows(2) {
        let y0 = 1.0 / ((w[0] as f64) * (w[1] as f64)).sqrt();
        probes.push(Point::new(vec![0.0, y0, 0.0]));
    }
    let m2 = m.clone();
    let grid_for_pair = move |_i: usize, _j: usize| {
        let bx = vec![(-0.7, 1.7), (-0.7, 0.7), (-0.7, 0.7)];
        darboux_box_grid(&m2, &bx, &[12, 40, 8], 1.0)
    };
    let pairs = cauchy_pairs(&systems, &probes, &[0.5, 1.0], &grid_for_pair, 5)?;
    let mut rep = cauchy_table("cauchy-divergent-isotopies", pairs, [false, true, true]);
    rep.param("family_size", ks.len() as f64);
    Ok(rep)
}

/// Family with converging flows and zero factors but divergent Hamiltonians.
pub fn cauchy_cantor() -> Result<ExperimentReport> {
    // Consecutive flow distances halve per step; four levels give the trend
    // detector enough of the geometric decay to register convergence.
    let ks = [2u32, 3, 4, 5];
    let m = ChartedManifold::hopf_sphere();
    let mut systems = Vec::new();
    for &k in &ks {
        systems.push(Arc::new(cantor_system(&m, k)?));
    }
    let m2 = m.clone();
    let grid_for_pair = move |_i: usize, _j: usize| quadrature_grid(&m2, &[4, 4, 4]);
    let pairs = cauchy_pairs(
        &systems,
        &cantor_seeds(),
        &[0.25, 0.5, 0.75, 1.0],
        &grid_for_pair,
        4001,
    )?;
    let mut rep = cauchy_table("cauchy-cantor", pairs, [true, true, false]);
    rep.param("family_size", ks.len() as f64);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_step_is_normalized() {
        assert!(odd_step(1.0) - 1.0 == 0.0);
        assert!(odd_step(-1.0) + 1.0 == 0.0);
        assert!(odd_step(0.0).abs() < 1e-15);
        // slope maximal at 0
        for s in [0.2, 0.5, 0.9] {
            assert!(odd_step_slope(s) < odd_step_slope(0.0));
        }
    }

    #[test]
    fn cutoff_family_constraints_hold() {
        for k in [2, 4, 8, 16] {
            let fam = CutoffFamily::new(k).unwrap();
            assert!(fam.verify().iter().all(|r| r.pass), "k={k}");
        }
    }

    #[test]
    fn divergent_factors_report_passes() {
        let rep = example_divergent_factors(4).unwrap();
        assert!(rep.pass, "{:#?}", rep.scalars);
        let origin = rep
            .scalars
            .iter()
            .find(|r| r.name == "conformal_origin_t1")
            .unwrap();
        assert!((origin.value - 4.0_f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn divergent_isotopies_report_passes() {
        let rep = example_divergent_isotopies(8).unwrap();
        assert!(rep.pass, "{:#?}", rep.scalars);
    }

    #[test]
    fn cantor_function_oracle_values() {
        assert!((cantor_function(1.0 / 3.0) - 0.5).abs() < 1e-12);
        assert!((cantor_function(0.5) - 0.5).abs() < 1e-12);
        assert!((cantor_function(1.0 / 9.0) - 0.25).abs() < 1e-12);
        assert!((cantor_function(2.0 / 3.0) - 0.5).abs() < 1e-10);
        assert!((cantor_function(1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cantor_step_l1_matches_direct_quadrature() {
        let a = CantorField::new(3).unwrap();
        let b = CantorField::new(1).unwrap();
        // unsmoothed L1 by brute midpoint quadrature
        let n = 200_000;
        let mut total = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            total += (a.step_value(t) - b.step_value(t)).abs();
        }
        total /= n as f64;
        assert!((total - cantor_step_l1(3, 1)).abs() < 1e-3);
        assert!(cantor_step_l1(3, 2) >= 5.0 / 9.0);
    }

    #[test]
    fn cantor_report_passes() {
        let rep = example_cantor(4).unwrap();
        assert!(rep.pass, "{:#?}", rep.scalars);
    }

    #[test]
    fn triangle_failure_report_passes() {
        let rep = example_triangle_failure(8).unwrap();
        assert!(rep.pass, "{:#?}", rep.scalars);
        let v = rep
            .scalars
            .iter()
            .find(|r| r.name == "composed_value_origin_t1")
            .unwrap();
        assert!((v.value - 8.0).abs() < 1e-2);
    }

    #[test]
    fn reeb_conjugation_suite_passes() {
        let rep = reeb_conjugation_suite().unwrap();
        assert!(rep.pass, "{:#?}", rep.scalars);
    }

    #[test]
    fn sphere_report_passes() {
        let rep = example_sphere().unwrap();
        assert!(rep.pass, "{:#?}", rep.scalars);
    }

    #[test]
    fn cauchy_tables_identify_the_divergent_component() {
        let rep = cauchy_divergent_factors().unwrap();
        assert!(rep.pass, "{:#?}", rep.scalars);
        let rep = cauchy_divergent_isotopies().unwrap();
        assert!(rep.pass, "{:#?}", rep.scalars);
        let rep = cauchy_cantor().unwrap();
        assert!(rep.pass, "{:#?}", rep.scalars);
    }
}
