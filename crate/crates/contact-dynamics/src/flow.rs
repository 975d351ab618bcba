//! Flow integration: advances seeds under the contact vector field of a
//! Hamiltonian while co-integrating the conformal factor h, whose time
//! derivative along the flow is the Reeb derivative of H.
//!
//! Fixed-step classical RK4 is used throughout so that every report is
//! reproducible bit-for-bit.

use crate::error::{ContactError, Result};
use crate::hamfield::{contact_vector_from_jet, Hamiltonian};
use crate::manifold::{exterior_data_at, ChartedManifold, Point};
use rayon::prelude::*;
use std::sync::Arc;

pub const STATE_LIMIT: f64 = 1e8;

#[derive(Debug, Clone)]
pub struct IntegratorOpts {
    /// Maximum RK4 step size.
    pub dt: f64,
    /// Number of recorded time samples on [0, t_end] (including both ends).
    pub t_samples: usize,
    /// Final time.
    pub t_end: f64,
}

impl Default for IntegratorOpts {
    fn default() -> Self {
        IntegratorOpts {
            dt: 1e-3,
            t_samples: 101,
            t_end: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemMeta {
    pub dt: f64,
    pub method: &'static str,
    /// Max terminal-state discrepancy between dt and dt/2 on probe seeds.
    pub richardson_error: f64,
}

/// How off-seed flow queries are answered.
///
/// Primitive systems re-integrate their own Hamiltonian; derived systems
/// (compositions, inverses, ...) answer through group-law closures over
/// their parents, which keeps query cost linear in the nesting depth.
#[derive(Clone)]
pub enum FlowKernel {
    Integrate,
    Custom {
        #[allow(clippy::type_complexity)]
        flow: Arc<dyn Fn(f64, &Point) -> Result<(Point, f64)> + Send + Sync>,
        #[allow(clippy::type_complexity)]
        inv: Arc<dyn Fn(f64, &Point) -> Result<(Point, f64)> + Send + Sync>,
    },
}

/// A contact isotopy sampled on seeds: trajectories of the flow together
/// with the conformal factor h(t, seed) along each trajectory.
#[derive(Clone)]
pub struct ContactDynamicalSystem {
    pub manifold: ChartedManifold,
    pub hamiltonian: Arc<dyn Hamiltonian>,
    pub time_grid: Vec<f64>,
    pub seed_set: Vec<Point>,
    /// trajectories[seed][time]
    pub trajectories: Vec<Vec<Point>>,
    /// conformal[seed][time] = h(t_j, seed)
    pub conformal: Vec<Vec<f64>>,
    pub meta: SystemMeta,
    pub kernel: FlowKernel,
}

/// Augmented right-hand side: (dx/dt, dh/dt) at chart state `coords`.
fn rhs(
    m: &ChartedManifold,
    field: &dyn Hamiltonian,
    t: f64,
    coords: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let x = Point::new(coords.to_vec());
    let jet = field.jet(m, t, &x).map_err(|e| match e {
        ContactError::PoleSingularity { .. } => ContactError::PoleCrossing { t },
        other => other,
    })?;
    let v = contact_vector_from_jet(m, &jet, &x)?;
    Ok((v, jet.reeb_deriv))
}

/// One classical RK4 step of size `h` on the augmented state.
fn rk4_step(
    m: &ChartedManifold,
    field: &dyn Hamiltonian,
    t: f64,
    h: f64,
    coords: &mut Vec<f64>,
    conf: &mut f64,
) -> Result<()> {
    let dim = coords.len();
    let (k1, c1) = rhs(m, field, t, coords)?;
    let mid1: Vec<f64> = (0..dim).map(|i| coords[i] + 0.5 * h * k1[i]).collect();
    let (k2, c2) = rhs(m, field, t + 0.5 * h, &mid1)?;
    let mid2: Vec<f64> = (0..dim).map(|i| coords[i] + 0.5 * h * k2[i]).collect();
    let (k3, c3) = rhs(m, field, t + 0.5 * h, &mid2)?;
    let end: Vec<f64> = (0..dim).map(|i| coords[i] + h * k3[i]).collect();
    let (k4, c4) = rhs(m, field, t + h, &end)?;
    for i in 0..dim {
        coords[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    *conf += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
    m.wrap(coords);
    let norm: f64 = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !norm.is_finite() || norm > STATE_LIMIT {
        return Err(ContactError::StepExplosion {
            t: t + h,
            limit: STATE_LIMIT,
        });
    }
    Ok(())
}

/// Advance one seed from (t0, x, h0) to t1, stepping by at most `dt`.
/// `dt` may be negative only if t1 < t0 (backward integration).
pub fn advance(
    m: &ChartedManifold,
    field: &dyn Hamiltonian,
    t0: f64,
    t1: f64,
    x: &Point,
    h0: f64,
    dt: f64,
) -> Result<(Point, f64)> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((x.clone(), h0));
    }
    let n = (span.abs() / dt.abs()).ceil().max(1.0) as usize;
    let step = span / n as f64;
    let mut coords = x.coords.clone();
    let mut conf = h0;
    for k in 0..n {
        let t = t0 + step * k as f64;
        rk4_step(m, field, t, step, &mut coords, &mut conf)?;
    }
    Ok((Point::new(coords), conf))
}

/// Integrate a Hamiltonian system from the given seeds.
pub fn integrate_system(
    m: &ChartedManifold,
    field: Arc<dyn Hamiltonian>,
    seeds: Vec<Point>,
    opts: &IntegratorOpts,
) -> Result<ContactDynamicalSystem> {
    if opts.dt > 1e-2 || opts.dt <= 0.0 {
        return Err(ContactError::Config(format!(
            "integrator dt must be in (0, 1e-2], got {}",
            opts.dt
        )));
    }
    if opts.t_samples < 2 {
        return Err(ContactError::Config("need at least 2 time samples".into()));
    }
    for s in &seeds {
        m.check_point(s)?;
    }
    let k = opts.t_samples - 1;
    let time_grid: Vec<f64> = (0..=k).map(|j| opts.t_end * j as f64 / k as f64).collect();

    let results: Result<Vec<(Vec<Point>, Vec<f64>)>> = seeds
        .par_iter()
        .map(|seed| {
            let mut traj = Vec::with_capacity(opts.t_samples);
            let mut conf = Vec::with_capacity(opts.t_samples);
            let mut x = seed.clone().wrapped(m);
            let mut h = 0.0;
            traj.push(x.clone());
            conf.push(0.0);
            for j in 0..k {
                let (nx, nh) = advance(m, field.as_ref(), time_grid[j], time_grid[j + 1], &x, h, opts.dt)?;
                x = nx;
                h = nh;
                traj.push(x.clone());
                conf.push(h);
            }
            Ok((traj, conf))
        })
        .collect();
    let results = results?;
    let (trajectories, conformal): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    // Richardson estimate: re-run a few probes at dt/2 and compare endpoints.
    let mut richardson_error = 0.0_f64;
    for (i, seed) in seeds.iter().take(3).enumerate() {
        let (fine, fine_h) = advance(m, field.as_ref(), 0.0, opts.t_end, seed, 0.0, opts.dt / 2.0)?;
        let coarse = trajectories[i].last().unwrap();
        let coarse_h = *conformal[i].last().unwrap();
        richardson_error = richardson_error
            .max(m.distance(&fine, coarse))
            .max((fine_h - coarse_h).abs());
    }

    Ok(ContactDynamicalSystem {
        manifold: m.clone(),
        hamiltonian: field,
        time_grid,
        seed_set: seeds,
        trajectories,
        conformal,
        meta: SystemMeta {
            dt: opts.dt,
            method: "rk4",
            richardson_error,
        },
        kernel: FlowKernel::Integrate,
    })
}

impl ContactDynamicalSystem {
    /// Index of a recorded time sample matching t, if any.
    fn sample_index(&self, t: f64) -> Option<usize> {
        self.time_grid
            .iter()
            .position(|&s| (s - t).abs() < 1e-12)
    }

    /// phi_t(x) and h(t, x): re-integration from the query point for
    /// primitive systems, group-law closures for derived ones.
    pub fn flow_to(&self, t: f64, x: &Point) -> Result<(Point, f64)> {
        match &self.kernel {
            FlowKernel::Integrate => advance(
                &self.manifold,
                self.hamiltonian.as_ref(),
                0.0,
                t,
                x,
                0.0,
                self.meta.dt,
            ),
            FlowKernel::Custom { flow, .. } => flow(t, x),
        }
    }

    /// (phi_t)^{-1}(x) together with h(t, (phi_t)^{-1}(x)), computed by one
    /// backward integration from (t, x) for primitive systems.
    pub fn inverse_at(&self, t: f64, x: &Point) -> Result<(Point, f64)> {
        match &self.kernel {
            FlowKernel::Integrate => {
                let (y, a) = advance(
                    &self.manifold,
                    self.hamiltonian.as_ref(),
                    t,
                    0.0,
                    x,
                    0.0,
                    self.meta.dt,
                )?;
                Ok((y, -a))
            }
            FlowKernel::Custom { inv, .. } => inv(t, x),
        }
    }

    /// The fixed-time view x -> phi_t(x).
    pub fn flow_map(&self, t: f64) -> FlowMap<'_> {
        FlowMap { system: self, t }
    }

    /// Stored trajectory point of seed i at recorded time t.
    pub fn at_seed(&self, i: usize, t: f64) -> Result<(&Point, f64)> {
        let j = self.sample_index(t).ok_or_else(|| {
            ContactError::FlowQueryFailure(format!("t = {t} is not a recorded sample"))
        })?;
        Ok((&self.trajectories[i][j], self.conformal[i][j]))
    }
}

/// A fixed-time slice of a system's flow.
#[derive(Clone, Copy)]
pub struct FlowMap<'a> {
    pub system: &'a ContactDynamicalSystem,
    pub t: f64,
}

impl FlowMap<'_> {
    pub fn apply(&self, x: &Point) -> Result<Point> {
        Ok(self.system.flow_to(self.t, x)?.0)
    }

    pub fn apply_inverse(&self, x: &Point) -> Result<Point> {
        Ok(self.system.inverse_at(self.t, x)?.0)
    }
}

/// Log of the conformal factor of phi_t at x, recovered from the definition:
/// pull alpha back through a finite-difference Jacobian of the flow map and
/// read off the proportionality constant against alpha at x.
pub fn pullback_conformal_factor(
    m: &ChartedManifold,
    flow: &FlowMap<'_>,
    x: &Point,
) -> Result<f64> {
    let step = 1e-5;
    let dim = m.dim();
    let y = flow.apply(x)?;
    let alpha_y = exterior_data_at(m, &y)?.alpha;
    let alpha_x = exterior_data_at(m, x)?.alpha;
    // row vector alpha_y . J, built one column at a time
    let mut pulled = vec![0.0; dim];
    for j in 0..dim {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp.coords[j] += step;
        xm.coords[j] -= step;
        let yp = flow.apply(&xp)?;
        let ym = flow.apply(&xm)?;
        for i in 0..dim {
            let mut d = yp.coords[i] - ym.coords[i];
            // FD across the periodic wrap
            if m.periodic_mask()[i] {
                use std::f64::consts::TAU;
                if d > std::f64::consts::PI {
                    d -= TAU;
                } else if d < -std::f64::consts::PI {
                    d += TAU;
                }
            }
            pulled[j] += alpha_y[i] * d / (2.0 * step);
        }
    }
    let bb: f64 = alpha_x.iter().map(|a| a * a).sum();
    let ab: f64 = alpha_x.iter().zip(&pulled).map(|(a, b)| a * b).sum();
    let ratio = ab / bb;
    if !(ratio > 0.0) {
        return Err(ContactError::NotContact { spread: f64::NAN });
    }
    let scale = bb.sqrt() * ratio.abs();
    let spread = alpha_x
        .iter()
        .zip(&pulled)
        .map(|(a, b)| (b - ratio * a).abs())
        .fold(0.0_f64, f64::max)
        / scale;
    if spread > 1e-3 {
        return Err(ContactError::NotContact { spread });
    }
    Ok(ratio.ln())
}

/// Closed-form reference data for the flow of H = (1/2) cos xi1 on the
/// sphere; the dynamics reduce to an ODE in xi1 alone, solvable explicitly.
pub mod half_cos_reference {
    use std::f64::consts::PI;

    /// Trajectory value sin(xi1(t)) for the seed value xi1(0).
    pub fn sin_xi1(xi1_0: f64, t: f64) -> f64 {
        let a = (xi1_0 / 2.0 + PI / 4.0).tan();
        let e = (2.0 * PI * t).exp();
        (a * a * e - 1.0) / (a * a * e + 1.0)
    }

    /// cos(xi1(t)).
    pub fn cos_xi1(xi1_0: f64, t: f64) -> f64 {
        let a = (xi1_0 / 2.0 + PI / 4.0).tan();
        let e = (PI * t).exp();
        2.0 * a * e / (a * a * e * e + 1.0)
    }

    /// Conformal factor h(t, x) for a seed with the given xi1(0).
    pub fn conformal(xi1_0: f64, t: f64) -> f64 {
        let a = (xi1_0 / 2.0 + PI / 4.0).tan();
        ((PI * t).exp() * (1.0 + a * a) / (1.0 + a * a * (2.0 * PI * t).exp())).ln()
    }

    /// eta(t) from eta(0), via cos^2(eta(t)) = cos^2(eta(0)) e^{h_t}.
    pub fn eta(xi1_0: f64, eta_0: f64, t: f64) -> f64 {
        (eta_0.cos() * (conformal(xi1_0, t) / 2.0).exp()).acos()
    }

    /// xi2(t) - xi2(0) = xi1(t) - xi1(0) since both angles share the same speed.
    pub fn xi1(xi1_0: f64, t: f64) -> f64 {
        sin_xi1(xi1_0, t).atan2(cos_xi1(xi1_0, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamfield::ExpressionField;
    use std::f64::consts::{PI, TAU};

    fn hopf_half_cos() -> (ChartedManifold, Arc<dyn Hamiltonian>) {
        let m = ChartedManifold::hopf_sphere();
        let f = ExpressionField::parse(&m, "0.5*cos(xi1)").unwrap();
        (m, Arc::new(f))
    }

    #[test]
    fn reeb_flow_translates_angles() {
        let m = ChartedManifold::hopf_sphere();
        let f: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "1").unwrap());
        let opts = IntegratorOpts {
            t_samples: 3,
            t_end: 0.5,
            ..Default::default()
        };
        let sys =
            integrate_system(&m, f, vec![Point::new(vec![0.0, 0.0, PI / 4.0])], &opts).unwrap();
        let (end, h) = sys.at_seed(0, 0.5).unwrap();
        assert!((end.coords[0] - PI).abs() < 1e-9);
        assert!((end.coords[1] - PI).abs() < 1e-9);
        assert!((end.coords[2] - PI / 4.0).abs() < 1e-12);
        assert!(h.abs() < 1e-12);
    }

    #[test]
    fn half_cos_flow_matches_closed_form() {
        let (m, f) = hopf_half_cos();
        let opts = IntegratorOpts::default();
        let seeds = vec![
            Point::new(vec![0.0, 0.0, 1.45]),
            Point::new(vec![0.8, 2.0, 1.4]),
            Point::new(vec![-0.6_f64.rem_euclid(TAU), 1.0, 1.5]),
        ];
        let sys = integrate_system(&m, f, seeds.clone(), &opts).unwrap();
        for (i, seed) in seeds.iter().enumerate() {
            let xi1_0 = if seed.coords[0] > PI {
                seed.coords[0] - TAU
            } else {
                seed.coords[0]
            };
            for &t in &[0.25, 0.5, 1.0] {
                let (p, h) = sys.at_seed(i, t).unwrap();
                assert!(
                    (p.coords[0].sin() - half_cos_reference::sin_xi1(xi1_0, t)).abs() < 1e-8,
                    "seed {i} t {t}"
                );
                assert!((h - half_cos_reference::conformal(xi1_0, t)).abs() < 1e-8);
                assert!(
                    (p.coords[2] - half_cos_reference::eta(xi1_0, seed.coords[2], t)).abs() < 1e-7
                );
                // xi2 advances exactly as much as xi1
                let dxi1 = (p.coords[0] - seed.coords[0]).rem_euclid(TAU);
                let dxi2 = (p.coords[1] - seed.coords[1]).rem_euclid(TAU);
                assert!((dxi1 - dxi2).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn half_cos_terminal_values_at_origin_seed() {
        let (m, f) = hopf_half_cos();
        let sys = integrate_system(
            &m,
            f,
            vec![Point::new(vec![0.0, 0.0, 1.45])],
            &IntegratorOpts::default(),
        )
        .unwrap();
        let (p, h) = sys.at_seed(0, 1.0).unwrap();
        assert!((p.coords[0].sin() - PI.tanh()).abs() < 1e-9);
        assert!((h + PI.cosh().ln()).abs() < 1e-9);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let (m, f) = hopf_half_cos();
        let seed = Point::new(vec![0.3, 0.0, 1.4]);
        let mut errors = Vec::new();
        for dt in [4e-3, 2e-3, 1e-3] {
            let (p, _) = advance(&m, f.as_ref(), 0.0, 1.0, &seed, 0.0, dt).unwrap();
            let err = (p.coords[0].sin() - half_cos_reference::sin_xi1(0.3, 1.0)).abs();
            errors.push(err);
        }
        assert!(errors[0] / errors[1] > 10.0, "{errors:?}");
        assert!(errors[1] / errors[2] > 10.0, "{errors:?}");
    }

    #[test]
    fn basic_hamiltonian_has_zero_conformal_factor() {
        // R.H = 0 when H does not depend on z
        let m = ChartedManifold::darboux(2);
        let f: Arc<dyn Hamiltonian> =
            Arc::new(ExpressionField::parse(&m, "sin(x1)*y1+0.3*t").unwrap());
        let sys = integrate_system(
            &m,
            f,
            vec![
                Point::new(vec![0.2, -0.4, 0.0]),
                Point::new(vec![1.0, 0.5, -0.7]),
            ],
            &IntegratorOpts::default(),
        )
        .unwrap();
        for conf in &sys.conformal {
            for h in conf {
                assert!(h.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn flow_group_property_in_time() {
        let (m, f) = hopf_half_cos();
        let sys = integrate_system(
            &m,
            f.clone(),
            vec![Point::new(vec![1.0, 0.5, 1.3])],
            &IntegratorOpts::default(),
        )
        .unwrap();
        // autonomous H: phi_{0.7} = phi_{0.4} after phi_{0.3}
        let seed = &sys.seed_set[0];
        let (mid, _) = sys.flow_to(0.3, seed).unwrap();
        let (via, _) = sys.flow_to(0.4, &mid).unwrap();
        let (direct, _) = sys.flow_to(0.7, seed).unwrap();
        assert!(m.distance(&via, &direct) < 1e-6);
    }

    #[test]
    fn inverse_query_round_trips() {
        let (m, f) = hopf_half_cos();
        let sys = integrate_system(
            &m,
            f,
            vec![Point::new(vec![0.4, 1.2, 1.35])],
            &IntegratorOpts::default(),
        )
        .unwrap();
        let x = Point::new(vec![2.0, 0.3, 1.4]);
        let (pre, h_at_pre) = sys.inverse_at(0.8, &x).unwrap();
        let (back, h_fwd) = sys.flow_to(0.8, &pre).unwrap();
        assert!(m.distance(&back, &x) < 1e-8);
        assert!((h_at_pre - h_fwd).abs() < 1e-8);
    }

    #[test]
    fn pullback_recovers_conformal_factor() {
        let (m, f) = hopf_half_cos();
        let sys = integrate_system(
            &m,
            f,
            vec![Point::new(vec![0.0, 0.0, 1.45])],
            &IntegratorOpts::default(),
        )
        .unwrap();
        let x = sys.seed_set[0].clone();
        let fm = sys.flow_map(1.0);
        let lg = pullback_conformal_factor(&m, &fm, &x).unwrap();
        assert!((lg + PI.cosh().ln()).abs() < 1e-4, "{lg}");
    }

    #[test]
    fn pullback_of_identity_is_zero() {
        let m = ChartedManifold::darboux(2);
        let f: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "0").unwrap());
        let sys = integrate_system(
            &m,
            f,
            vec![Point::new(vec![0.3, 0.1, 0.2])],
            &IntegratorOpts {
                t_samples: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let lg = pullback_conformal_factor(&m, &sys.flow_map(1.0), &sys.seed_set[0]).unwrap();
        assert!(lg.abs() < 1e-10);
    }

    #[test]
    fn volume_jacobian_matches_conformal_factor() {
        // time-1 Jacobian determinant = e^{n h} on a (2n-1)-manifold, n = 2
        let (m, f) = hopf_half_cos();
        let sys = integrate_system(
            &m,
            f,
            vec![Point::new(vec![0.5, 0.0, 1.4])],
            &IntegratorOpts::default(),
        )
        .unwrap();
        let x = &sys.seed_set[0];
        let h1 = sys.at_seed(0, 1.0).unwrap().1;
        let step = 1e-5;
        let mut jac = nalgebra::DMatrix::zeros(3, 3);
        // volume density sin(eta)cos(eta) enters the determinant comparison
        let dens = |p: &Point| p.coords[2].sin() * p.coords[2].cos();
        let y = sys.flow_to(1.0, x).unwrap().0;
        for j in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp.coords[j] += step;
            xm.coords[j] -= step;
            let yp = sys.flow_to(1.0, &xp).unwrap().0;
            let ym = sys.flow_to(1.0, &xm).unwrap().0;
            for i in 0..3 {
                let mut d = yp.coords[i] - ym.coords[i];
                if d > PI {
                    d -= TAU;
                } else if d < -PI {
                    d += TAU;
                }
                jac[(i, j)] = d / (2.0 * step);
            }
        }
        let det = jac.determinant() * dens(&y) / dens(x);
        assert!((det - (2.0 * h1).exp()).abs() / (2.0 * h1).exp() < 1e-4);
    }

    #[test]
    fn pole_crossing_is_reported() {
        let m = ChartedManifold::hopf_sphere();
        // strong eta drift toward the pole
        let f: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "sin(xi1)").unwrap());
        let res = integrate_system(
            &m,
            f,
            vec![Point::new(vec![0.0, 0.0, 0.02])],
            &IntegratorOpts::default(),
        );
        assert!(matches!(
            res,
            Err(ContactError::PoleCrossing { .. }) | Err(ContactError::PoleSingularity { .. })
        ));
    }

    #[test]
    fn coarse_dt_rejected() {
        let m = ChartedManifold::darboux(2);
        let f: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "0").unwrap());
        let res = integrate_system(
            &m,
            f,
            vec![Point::new(vec![0.0, 0.0, 0.0])],
            &IntegratorOpts {
                dt: 0.05,
                ..Default::default()
            },
        );
        assert!(matches!(res, Err(ContactError::Config(_))));
    }
}
