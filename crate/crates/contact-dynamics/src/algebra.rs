//! Group structure of contact dynamical systems: composition, inversion,
//! conjugation by a contact diffeomorphism, change of contact form, and
//! time reparameterization.
//!
//! Derived Hamiltonians are closures querying the parent flows lazily;
//! derived trajectories are produced by composing parent flow maps rather
//! than by re-integrating the derived field (which is available separately
//! as a cross-check).

use crate::error::{ContactError, Result};
use crate::flow::{ContactDynamicalSystem, FlowKernel};
use crate::hamfield::FnField;
use crate::manifold::Point;
use rayon::prelude::*;
use std::sync::Arc;

/// A contact diffeomorphism given by point maps and the log conformal
/// factor g with phi^* alpha = e^g alpha.
#[derive(Clone)]
pub struct ContactDiffeo {
    #[allow(clippy::type_complexity)]
    pub forward: Arc<dyn Fn(&Point) -> Result<Point> + Send + Sync>,
    #[allow(clippy::type_complexity)]
    pub inverse: Arc<dyn Fn(&Point) -> Result<Point> + Send + Sync>,
    #[allow(clippy::type_complexity)]
    pub log_factor: Arc<dyn Fn(&Point) -> Result<f64> + Send + Sync>,
}

impl ContactDiffeo {
    pub fn identity() -> Self {
        ContactDiffeo {
            forward: Arc::new(|x| Ok(x.clone())),
            inverse: Arc::new(|x| Ok(x.clone())),
            log_factor: Arc::new(|_| Ok(0.0)),
        }
    }

    /// The time-t slice of a system's flow.
    pub fn from_system(sys: Arc<ContactDynamicalSystem>, t: f64) -> Self {
        let s1 = sys.clone();
        let s2 = sys.clone();
        ContactDiffeo {
            forward: Arc::new(move |x| Ok(s1.flow_to(t, x)?.0)),
            inverse: Arc::new(move |x| Ok(s2.inverse_at(t, x)?.0)),
            log_factor: Arc::new(move |x| Ok(sys.flow_to(t, x)?.1)),
        }
    }
}

fn check_compatible(a: &ContactDynamicalSystem, b: &ContactDynamicalSystem) -> Result<()> {
    if a.manifold != b.manifold {
        return Err(ContactError::ManifoldMismatch);
    }
    if a.time_grid.len() != b.time_grid.len()
        || a.time_grid
            .iter()
            .zip(&b.time_grid)
            .any(|(s, t)| (s - t).abs() > 1e-12)
    {
        return Err(ContactError::FlowQueryFailure(
            "systems have different time grids".into(),
        ));
    }
    Ok(())
}

/// Composition: the system whose time-t map is phi_A^t after phi_B^t.
///
/// Hamiltonian: (H#F)_t = H_t + (e^{h_t} F_t) composed with (phi_H^t)^{-1}.
/// Conformal factor: h_t(phi_F^t(x)) + f_t(x).
pub fn compose(
    a: Arc<ContactDynamicalSystem>,
    b: Arc<ContactDynamicalSystem>,
) -> Result<ContactDynamicalSystem> {
    check_compatible(&a, &b)?;
    let times = b.time_grid.clone();
    let results: Result<Vec<(Vec<Point>, Vec<f64>)>> = (0..b.seed_set.len())
        .into_par_iter()
        .map(|i| {
            let mut traj = Vec::with_capacity(times.len());
            let mut conf = Vec::with_capacity(times.len());
            for (j, &t) in times.iter().enumerate() {
                let y = &b.trajectories[i][j];
                let (z, h_at_y) = a.flow_to(t, y)?;
                traj.push(z);
                conf.push(h_at_y + b.conformal[i][j]);
            }
            Ok((traj, conf))
        })
        .collect();
    let (trajectories, conformal): (Vec<_>, Vec<_>) = results?.into_iter().unzip();

    let (fa, fb) = (a.clone(), b.clone());
    let field = FnField::new(move |_, t, x| {
        let (pre, h_at_pre) = fa.inverse_at(t, x)?;
        let hv = fa.hamiltonian.value(&fa.manifold, t, x)?;
        let fv = fb.hamiltonian.value(&fb.manifold, t, &pre)?;
        Ok(hv + h_at_pre.exp() * fv)
    });

    let (ka, kb) = (a.clone(), b.clone());
    let (ia, ib) = (a.clone(), b.clone());
    let kernel = FlowKernel::Custom {
        flow: Arc::new(move |t, x| {
            let (y, f) = kb.flow_to(t, x)?;
            let (z, h) = ka.flow_to(t, &y)?;
            Ok((z, h + f))
        }),
        inv: Arc::new(move |t, x| {
            let (u, ha) = ia.inverse_at(t, x)?;
            let (v, fb_val) = ib.inverse_at(t, &u)?;
            Ok((v, ha + fb_val))
        }),
    };

    let mut meta = a.meta.clone();
    meta.method = "derived";
    meta.richardson_error = meta.richardson_error.max(b.meta.richardson_error);
    Ok(ContactDynamicalSystem {
        manifold: a.manifold.clone(),
        hamiltonian: Arc::new(field),
        time_grid: times,
        seed_set: b.seed_set.clone(),
        trajectories,
        conformal,
        meta,
        kernel,
    })
}

/// Inversion: the system whose time-t map is (phi_A^t)^{-1}.
///
/// Hamiltonian: -e^{-h_t} (H_t composed with phi_H^t).
/// Conformal factor: -h_t composed with (phi_H^t)^{-1}.
pub fn inverse(a: Arc<ContactDynamicalSystem>) -> Result<ContactDynamicalSystem> {
    let times = a.time_grid.clone();
    let results: Result<Vec<(Vec<Point>, Vec<f64>)>> = (0..a.seed_set.len())
        .into_par_iter()
        .map(|i| {
            let mut traj = Vec::with_capacity(times.len());
            let mut conf = Vec::with_capacity(times.len());
            for &t in &times {
                let (pre, h_at_pre) = a.inverse_at(t, &a.seed_set[i])?;
                traj.push(pre);
                conf.push(-h_at_pre);
            }
            Ok((traj, conf))
        })
        .collect();
    let (trajectories, conformal): (Vec<_>, Vec<_>) = results?.into_iter().unzip();

    let fa = a.clone();
    let field = FnField::new(move |_, t, x| {
        let (y, h) = fa.flow_to(t, x)?;
        Ok(-(-h).exp() * fa.hamiltonian.value(&fa.manifold, t, &y)?)
    });

    let (ka, ia) = (a.clone(), a.clone());
    let kernel = FlowKernel::Custom {
        flow: Arc::new(move |t, x| {
            let (pre, h_at_pre) = ka.inverse_at(t, x)?;
            Ok((pre, -h_at_pre))
        }),
        inv: Arc::new(move |t, x| {
            let (y, h) = ia.flow_to(t, x)?;
            Ok((y, -h))
        }),
    };

    let mut meta = a.meta.clone();
    meta.method = "derived";
    Ok(ContactDynamicalSystem {
        manifold: a.manifold.clone(),
        hamiltonian: Arc::new(field),
        time_grid: times,
        seed_set: a.seed_set.clone(),
        trajectories,
        conformal,
        meta,
        kernel,
    })
}

/// Conjugation: the system with time-t map phi^{-1} after phi_A^t after phi.
///
/// Hamiltonian: K_t(x) = e^{-g(x)} H_t(phi(x)).
/// Conformal factor: h_t(phi(x)) + g(x) - g(psi_t(x)).
pub fn conjugate(
    a: Arc<ContactDynamicalSystem>,
    phi: &ContactDiffeo,
) -> Result<ContactDynamicalSystem> {
    let times = a.time_grid.clone();
    let results: Result<Vec<(Vec<Point>, Vec<f64>)>> = a
        .seed_set
        .par_iter()
        .map(|seed| {
            let fx = (phi.forward)(seed)?;
            let g_x = (phi.log_factor)(seed)?;
            // invertibility probe
            let back = (phi.inverse)(&fx)?;
            if a.manifold.distance(&back, seed) > 1e-6 {
                return Err(ContactError::NotInvertible);
            }
            let mut traj = Vec::with_capacity(times.len());
            let mut conf = Vec::with_capacity(times.len());
            for &t in &times {
                let (y, h_at_fx) = a.flow_to(t, &fx)?;
                let psi = (phi.inverse)(&y)?;
                let g_psi = (phi.log_factor)(&psi)?;
                conf.push(h_at_fx + g_x - g_psi);
                traj.push(psi);
            }
            Ok((traj, conf))
        })
        .collect();
    let (trajectories, conformal): (Vec<_>, Vec<_>) = results?.into_iter().unzip();

    let fa = a.clone();
    let (fwd, lf) = (phi.forward.clone(), phi.log_factor.clone());
    let field = FnField::new(move |_, t, x| {
        let fx = fwd(x)?;
        Ok((-lf(x)?).exp() * fa.hamiltonian.value(&fa.manifold, t, &fx)?)
    });

    let (ka, ia) = (a.clone(), a.clone());
    let (f1, i1, g1) = (phi.forward.clone(), phi.inverse.clone(), phi.log_factor.clone());
    let (f2, i2, g2) = (phi.forward.clone(), phi.inverse.clone(), phi.log_factor.clone());
    let kernel = FlowKernel::Custom {
        flow: Arc::new(move |t, x| {
            let fx = f1(x)?;
            let (y, h) = ka.flow_to(t, &fx)?;
            let psi = i1(&y)?;
            let c = h + g1(x)? - g1(&psi)?;
            Ok((psi, c))
        }),
        inv: Arc::new(move |t, x| {
            let u = f2(x)?;
            let (v, hv) = ia.inverse_at(t, &u)?;
            let w = i2(&v)?;
            let c = hv + g2(&w)? - g2(x)?;
            Ok((w, c))
        }),
    };

    let mut meta = a.meta.clone();
    meta.method = "derived";
    Ok(ContactDynamicalSystem {
        manifold: a.manifold.clone(),
        hamiltonian: Arc::new(field),
        time_grid: times,
        seed_set: a.seed_set.clone(),
        trajectories,
        conformal,
        meta,
        kernel,
    })
}

/// Re-describe the same flow for the rescaled contact form e^f alpha:
/// Hamiltonian becomes e^f H, conformal factor becomes h + f(phi_t(x)) - f(x).
/// Trajectories are shared with the parent.
pub fn change_of_form(
    a: Arc<ContactDynamicalSystem>,
    f: Arc<dyn Fn(&Point) -> Result<f64> + Send + Sync>,
) -> Result<ContactDynamicalSystem> {
    let mut conformal = a.conformal.clone();
    for (i, conf) in conformal.iter_mut().enumerate() {
        let f_seed = f(&a.seed_set[i])?;
        for (j, h) in conf.iter_mut().enumerate() {
            *h += f(&a.trajectories[i][j])? - f_seed;
        }
    }
    let fa = a.clone();
    let ff = f.clone();
    let field = FnField::new(move |m, t, x| Ok(ff(x)?.exp() * fa.hamiltonian.value(m, t, x)?));
    let (ka, ia) = (a.clone(), a.clone());
    let (fk, fi) = (f.clone(), f.clone());
    let kernel = FlowKernel::Custom {
        flow: Arc::new(move |t, x| {
            let (y, h) = ka.flow_to(t, x)?;
            let c = h + fk(&y)? - fk(x)?;
            Ok((y, c))
        }),
        inv: Arc::new(move |t, x| {
            let (w, h) = ia.inverse_at(t, x)?;
            let c = h + fi(x)? - fi(&w)?;
            Ok((w, c))
        }),
    };
    let mut meta = a.meta.clone();
    meta.method = "derived";
    Ok(ContactDynamicalSystem {
        manifold: a.manifold.clone(),
        hamiltonian: Arc::new(field),
        time_grid: a.time_grid.clone(),
        seed_set: a.seed_set.clone(),
        trajectories: a.trajectories.clone(),
        conformal,
        meta,
        kernel,
    })
}

/// A monotone time change zeta: [0,1] -> [0,1] with zeta(0) = 0.
#[derive(Clone)]
pub struct Reparam {
    pub zeta: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Derivative, when available; needed to form the reparameterized
    /// Hamiltonian. Resampling of trajectories works without it.
    pub zeta_prime: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
}

impl Reparam {
    pub fn linear(s: f64) -> Self {
        Reparam {
            zeta: Arc::new(move |t| s * t),
            zeta_prime: Some(Arc::new(move |_| s)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (self.zeta)(0.0).abs() > 1e-12 {
            return Err(ContactError::Config("zeta(0) must be 0".into()));
        }
        let mut prev = (self.zeta)(0.0);
        for k in 1..=256 {
            let v = (self.zeta)(k as f64 / 256.0);
            if v < prev - 1e-12 {
                return Err(ContactError::NotMonotone);
            }
            prev = v;
        }
        Ok(())
    }
}

/// Time reparameterization: the system with phi^t = phi_A^{zeta(t)} and
/// h^zeta(t, x) = h(zeta(t), x). The attached Hamiltonian is the formula
/// field zeta'(t) H(zeta(t), x); re-integrating it must reproduce the
/// resampled trajectories.
pub fn reparameterize(
    a: Arc<ContactDynamicalSystem>,
    zeta: &Reparam,
) -> Result<ContactDynamicalSystem> {
    zeta.validate()?;
    let times = a.time_grid.clone();
    let zf = zeta.zeta.clone();
    let results: Result<Vec<(Vec<Point>, Vec<f64>)>> = a
        .seed_set
        .par_iter()
        .map(|seed| {
            let mut traj = Vec::with_capacity(times.len());
            let mut conf = Vec::with_capacity(times.len());
            for &t in &times {
                let (p, h) = a.flow_to(zf(t), seed)?;
                traj.push(p);
                conf.push(h);
            }
            Ok((traj, conf))
        })
        .collect();
    let (trajectories, conformal): (Vec<_>, Vec<_>) = results?.into_iter().unzip();

    let fa = a.clone();
    let zv = zeta.zeta.clone();
    let zp = match &zeta.zeta_prime {
        Some(p) => p.clone(),
        None => {
            let z = zeta.zeta.clone();
            Arc::new(move |t: f64| {
                let h = 1e-6;
                (z((t + h).min(1.0)) - z((t - h).max(0.0))) / (((t + h).min(1.0)) - ((t - h).max(0.0)))
            })
        }
    };
    let field = FnField::new(move |m, t, x| Ok(zp(t) * fa.hamiltonian.value(m, zv(t), x)?));

    let (ka, ia) = (a.clone(), a.clone());
    let (z1, z2) = (zeta.zeta.clone(), zeta.zeta.clone());
    let kernel = FlowKernel::Custom {
        flow: Arc::new(move |t, x| ka.flow_to(z1(t), x)),
        inv: Arc::new(move |t, x| ia.inverse_at(z2(t), x)),
    };

    let mut meta = a.meta.clone();
    meta.method = "derived";
    Ok(ContactDynamicalSystem {
        manifold: a.manifold.clone(),
        hamiltonian: Arc::new(field),
        time_grid: times,
        seed_set: a.seed_set.clone(),
        trajectories,
        conformal,
        meta,
        kernel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate_system, IntegratorOpts};
    use crate::hamfield::{ExpressionField, Hamiltonian};
    use crate::manifold::ChartedManifold;
    use std::f64::consts::PI;

    fn opts() -> IntegratorOpts {
        IntegratorOpts {
            dt: 1e-3,
            t_samples: 11,
            t_end: 1.0,
        }
    }

    fn half_cos_system() -> Arc<ContactDynamicalSystem> {
        let m = ChartedManifold::hopf_sphere();
        let f: Arc<dyn Hamiltonian> =
            Arc::new(ExpressionField::parse(&m, "0.5*cos(xi1)").unwrap());
        Arc::new(
            integrate_system(
                &m,
                f,
                vec![
                    Point::new(vec![0.0, 0.0, 1.45]),
                    Point::new(vec![0.8, 2.0, 1.4]),
                ],
                &opts(),
            )
            .unwrap(),
        )
    }

    fn reeb_system(seeds: Vec<Point>) -> Arc<ContactDynamicalSystem> {
        let m = ChartedManifold::hopf_sphere();
        let f: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "1").unwrap());
        Arc::new(integrate_system(&m, f, seeds, &opts()).unwrap())
    }

    #[test]
    fn compose_with_identity_is_identity_on_data() {
        let a = half_cos_system();
        let m = a.manifold.clone();
        let id: Arc<dyn Hamiltonian> = Arc::new(ExpressionField::parse(&m, "0").unwrap());
        let e = Arc::new(integrate_system(&m, id, a.seed_set.clone(), &opts()).unwrap());
        let c = compose(a.clone(), e).unwrap();
        for i in 0..a.seed_set.len() {
            for j in 0..a.time_grid.len() {
                assert!(m.distance(&c.trajectories[i][j], &a.trajectories[i][j]) < 1e-6);
                assert!((c.conformal[i][j] - a.conformal[i][j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let a = half_cos_system();
        let inv = Arc::new(inverse(a.clone()).unwrap());
        let c = compose(a.clone(), inv).unwrap();
        let m = &a.manifold;
        for i in 0..c.seed_set.len() {
            for j in 0..c.time_grid.len() {
                assert!(m.distance(&c.trajectories[i][j], &c.seed_set[i]) < 1e-5);
                assert!(c.conformal[i][j].abs() < 1e-5);
            }
        }
    }

    #[test]
    fn inverse_of_reeb_is_minus_one() {
        let a = reeb_system(vec![Point::new(vec![0.3, 0.1, 1.0])]);
        let inv = inverse(a).unwrap();
        let m = inv.manifold.clone();
        let v = inv
            .hamiltonian
            .value(&m, 0.37, &Point::new(vec![1.0, 2.0, 0.8]))
            .unwrap();
        assert!((v + 1.0).abs() < 1e-9);
    }

    #[test]
    fn inverse_of_half_cos_is_minus_half_cos() {
        let a = half_cos_system();
        let inv = inverse(a.clone()).unwrap();
        let m = inv.manifold.clone();
        for (xi1, t) in [(0.0, 0.5), (1.1, 0.25), (2.5, 1.0), (4.0, 0.75)] {
            let x = Point::new(vec![xi1, 0.7, 1.4]);
            let v = inv.hamiltonian.value(&m, t, &x).unwrap();
            let expect = -0.5 * (xi1 as f64).cos();
            assert!((v - expect).abs() < 1e-6, "xi1 {xi1} t {t}: {v} vs {expect}");
        }
    }

    #[test]
    fn double_inverse_returns_to_parent() {
        let a = half_cos_system();
        let back = inverse(Arc::new(inverse(a.clone()).unwrap())).unwrap();
        let m = &a.manifold;
        for i in 0..a.seed_set.len() {
            for j in 0..a.time_grid.len() {
                assert!(m.distance(&back.trajectories[i][j], &a.trajectories[i][j]) < 1e-5);
                assert!((back.conformal[i][j] - a.conformal[i][j]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn composed_hamiltonian_formula_on_reeb_composition() {
        // H = (1/2) cos xi1, F = 1: (H#F)_t(x) = H(x) + e^{h_t((phi^t)^{-1} x)}
        let a = half_cos_system();
        let b = reeb_system(a.seed_set.clone());
        let c = compose(a.clone(), b).unwrap();
        let m = &a.manifold;
        let x = Point::new(vec![0.9, 0.2, 1.35]);
        for t in [0.3, 0.7] {
            let v = c.hamiltonian.value(m, t, &x).unwrap();
            let (_pre, h_pre) = a.inverse_at(t, &x).unwrap();
            let expect = 0.5 * x.coords[0].cos() + h_pre.exp();
            assert!((v - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn inverse_then_compose_matches_difference_formula() {
        // Hamiltonian of compose(inverse(A), B) = e^{-h}((F - H) after phi_H)
        let a = half_cos_system();
        let b = reeb_system(a.seed_set.clone());
        let c = compose(Arc::new(inverse(a.clone()).unwrap()), b.clone()).unwrap();
        let m = &a.manifold;
        let x = Point::new(vec![2.2, 1.0, 1.42]);
        for t in [0.4, 0.9] {
            let v = c.hamiltonian.value(m, t, &x).unwrap();
            let (y, h) = a.flow_to(t, &x).unwrap();
            let expect = (-h).exp() * (1.0 - 0.5 * y.coords[0].cos());
            assert!((v - expect).abs() < 1e-6, "t {t}: {v} vs {expect}");
        }
    }

    #[test]
    fn conjugation_by_identity_is_noop() {
        let a = half_cos_system();
        let c = conjugate(a.clone(), &ContactDiffeo::identity()).unwrap();
        let m = &a.manifold;
        for i in 0..a.seed_set.len() {
            for j in 0..a.time_grid.len() {
                assert!(m.distance(&c.trajectories[i][j], &a.trajectories[i][j]) < 1e-9);
                assert!((c.conformal[i][j] - a.conformal[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn conjugated_reeb_has_hamiltonian_exp_minus_g() {
        let phi_sys = half_cos_system();
        let phi = ContactDiffeo::from_system(phi_sys.clone(), 1.0);
        let r = reeb_system(vec![Point::new(vec![0.5, 0.5, 1.4])]);
        let c = conjugate(r, &phi).unwrap();
        let m = &c.manifold;
        let x = Point::new(vec![0.6, 1.9, 1.38]);
        let g = (phi.log_factor)(&x).unwrap();
        let v = c.hamiltonian.value(m, 0.2, &x).unwrap();
        assert!((v - (-g).exp()).abs() < 1e-6);
        // flow check: psi_t(x) = phi^{-1}(reeb_t(phi(x)))
        let seed = &c.seed_set[0];
        let fx = (phi.forward)(seed).unwrap();
        let mut shifted = fx.clone();
        shifted.coords[0] += PI; // Reeb time 1/2
        shifted.coords[1] += PI;
        let expect = (phi.inverse)(&shifted.wrapped(m)).unwrap();
        let got = &c.trajectories[0][5]; // t = 0.5 on the 11-sample grid
        assert!(m.distance(got, &expect) < 1e-5);
    }

    #[test]
    fn change_of_form_constant_shifts_hamiltonian_only() {
        let a = half_cos_system();
        let b = change_of_form(a.clone(), Arc::new(|_| Ok(0.3))).unwrap();
        let m = &a.manifold;
        let x = Point::new(vec![1.0, 0.0, 1.4]);
        let va = a.hamiltonian.value(m, 0.0, &x).unwrap();
        let vb = b.hamiltonian.value(m, 0.0, &x).unwrap();
        assert!((vb - 0.3_f64.exp() * va).abs() < 1e-12);
        for i in 0..a.seed_set.len() {
            for j in 0..a.time_grid.len() {
                assert!((b.conformal[i][j] - a.conformal[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn change_of_form_round_trip() {
        let a = half_cos_system();
        let f = |x: &Point| Ok(0.2 * x.coords[2].sin());
        let g = |x: &Point| Ok(-0.2 * x.coords[2].sin());
        let b = Arc::new(change_of_form(a.clone(), Arc::new(f)).unwrap());
        let c = change_of_form(b, Arc::new(g)).unwrap();
        let m = &a.manifold;
        let x = Point::new(vec![0.4, 0.4, 1.3]);
        assert!(
            (c.hamiltonian.value(m, 0.1, &x).unwrap() - a.hamiltonian.value(m, 0.1, &x).unwrap())
                .abs()
                < 1e-10
        );
        for i in 0..a.seed_set.len() {
            for j in 0..a.time_grid.len() {
                assert!((c.conformal[i][j] - a.conformal[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn linear_reparameterization_scales_hamiltonian() {
        let a = half_cos_system();
        let s = 0.6;
        let r = reparameterize(a.clone(), &Reparam::linear(s)).unwrap();
        let m = &a.manifold;
        // formula field: H^s(t, x) = s H(st, x)
        let x = Point::new(vec![1.2, 0.1, 1.44]);
        let v = r.hamiltonian.value(m, 0.5, &x).unwrap();
        assert!((v - s * 0.5 * x.coords[0].cos()).abs() < 1e-12);
        // resampled data: phi^t = phi_A^{st}, h^zeta(t) = h(st)
        let seed = &a.seed_set[0];
        let (p, h) = a.flow_to(s * 1.0, seed).unwrap();
        let j = a.time_grid.len() - 1;
        assert!(m.distance(&r.trajectories[0][j], &p) < 1e-9);
        assert!((r.conformal[0][j] - h).abs() < 1e-9);
        // re-integrating the formula field reproduces the resampled flow
        let re = integrate_system(m, r.hamiltonian.clone(), vec![seed.clone()], &opts()).unwrap();
        assert!(m.distance(re.trajectories[0].last().unwrap(), &p) < 1e-5);
    }

    #[test]
    fn non_monotone_reparameterization_rejected() {
        let a = half_cos_system();
        let bad = Reparam {
            zeta: Arc::new(|t| (2.0 * PI * t).sin() * 0.3 + 0.0),
            zeta_prime: None,
        };
        assert!(matches!(
            reparameterize(a, &bad),
            Err(ContactError::NotMonotone)
        ));
    }
}
