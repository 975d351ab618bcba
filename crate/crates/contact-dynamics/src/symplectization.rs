//! The symplectization W = M x R with the exact symplectic form
//! omega = -d(e^theta alpha) = -e^theta (dtheta ^ alpha + d alpha).
//!
//! A contact system lifts admissibly: the point map gains a theta shift by
//! minus the conformal factor, and the Hamiltonian becomes e^theta H. The
//! module provides the lift, the oscillation norms over theta-bands, the
//! cutoff construction confining the lifted field to a band, and a
//! finite-difference symplectic-defect diagnostic.

use crate::error::{ContactError, Result};
use crate::flow::ContactDynamicalSystem;
use crate::manifold::{exterior_data_at, ChartedManifold, Point, QuadratureGrid};
use crate::metrics::{grid_extrema, sup_norm};
use crate::numeric::{plateau, plateau_deriv, simpson_weights};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct SymplectizationPoint {
    pub base: Point,
    pub theta: f64,
}

impl SymplectizationPoint {
    pub fn new(base: Point, theta: f64) -> Self {
        SymplectizationPoint { base, theta }
    }
}

/// The admissible lift of a contact system.
#[derive(Clone)]
pub struct AdmissibleSystem {
    pub parent: Arc<ContactDynamicalSystem>,
}

pub fn lift_system(parent: Arc<ContactDynamicalSystem>) -> AdmissibleSystem {
    AdmissibleSystem { parent }
}

impl AdmissibleSystem {
    pub fn manifold(&self) -> &ChartedManifold {
        &self.parent.manifold
    }

    /// Lifted point map: (phi_t(x), theta - h_t(x)).
    pub fn lift_map(&self, t: f64, w: &SymplectizationPoint) -> Result<SymplectizationPoint> {
        let (y, h) = self.parent.flow_to(t, &w.base)?;
        Ok(SymplectizationPoint::new(y, w.theta - h))
    }

    /// Lifted Hamiltonian e^theta H(t, x).
    pub fn hamiltonian_w(&self, t: f64, w: &SymplectizationPoint) -> Result<f64> {
        Ok(w.theta.exp()
            * self
                .parent
                .hamiltonian
                .value(&self.parent.manifold, t, &w.base)?)
    }

    /// Differential of the lifted Hamiltonian in chart coordinates
    /// (base components, then theta).
    fn d_hamiltonian_w(&self, t: f64, w: &SymplectizationPoint) -> Result<Vec<f64>> {
        let m = &self.parent.manifold;
        let jet = self.parent.hamiltonian.jet(m, t, &w.base)?;
        let e = w.theta.exp();
        let mut d: Vec<f64> = jet.grad.iter().map(|g| e * g).collect();
        d.push(e * jet.value);
        Ok(d)
    }
}

/// omega at a point as an antisymmetric matrix over (base coords, theta):
/// omega(u, v) = u^T W v.
pub fn omega_matrix(m: &ChartedManifold, w: &SymplectizationPoint) -> Result<DMatrix<f64>> {
    let data = exterior_data_at(m, &w.base)?;
    let dim = m.dim();
    let e = w.theta.exp();
    let mut out = DMatrix::zeros(dim + 1, dim + 1);
    for i in 0..dim {
        for j in 0..dim {
            out[(i, j)] = -e * data.d_alpha[(i, j)];
        }
        // -e^theta dtheta ^ alpha: (dtheta ^ alpha)(u, v) = u_th alpha(v) - alpha(u) v_th
        out[(dim, i)] = -e * data.alpha[i];
        out[(i, dim)] = e * data.alpha[i];
    }
    Ok(out)
}

/// Hamiltonian vector field of a function on W from iota(X) omega = dF,
/// solved pointwise. `d_f` is the chart differential of F at the point.
pub fn hamiltonian_vector_w(
    m: &ChartedManifold,
    w: &SymplectizationPoint,
    d_f: &[f64],
) -> Result<Vec<f64>> {
    let omega = omega_matrix(m, w)?;
    // omega(X, .) as a covector is X^T W, so W^T X = dF
    let lu = omega.transpose().lu();
    let rhs = DVector::from_column_slice(d_f);
    let x = lu
        .solve(&rhs)
        .ok_or(ContactError::SingularSystem { cond: f64::INFINITY })?;
    Ok(x.iter().copied().collect())
}

/// A time-dependent Hamiltonian on W given by value and differential.
pub trait WField: Send + Sync {
    fn value(&self, t: f64, w: &SymplectizationPoint) -> Result<f64>;
    fn differential(&self, t: f64, w: &SymplectizationPoint) -> Result<Vec<f64>>;
}

/// The plain lifted Hamiltonian e^theta H as a [`WField`].
pub struct LiftedField {
    pub system: AdmissibleSystem,
}

impl WField for LiftedField {
    fn value(&self, t: f64, w: &SymplectizationPoint) -> Result<f64> {
        self.system.hamiltonian_w(t, w)
    }

    fn differential(&self, t: f64, w: &SymplectizationPoint) -> Result<Vec<f64>> {
        self.system.d_hamiltonian_w(t, w)
    }
}

/// RK4 integration of a [`WField`]'s Hamiltonian vector field on W.
pub fn integrate_w(
    m: &ChartedManifold,
    field: &dyn WField,
    t_end: f64,
    w0: &SymplectizationPoint,
    dt: f64,
) -> Result<SymplectizationPoint> {
    let n = (t_end.abs() / dt).ceil().max(1.0) as usize;
    let step = t_end / n as f64;
    let dim = m.dim();
    let mut state: Vec<f64> = w0.base.coords.clone();
    state.push(w0.theta);
    let deriv = |t: f64, s: &[f64]| -> Result<Vec<f64>> {
        let w = SymplectizationPoint::new(Point::new(s[..dim].to_vec()), s[dim]);
        let d = field.differential(t, &w)?;
        hamiltonian_vector_w(m, &w, &d)
    };
    for k in 0..n {
        let t = step * k as f64;
        let k1 = deriv(t, &state)?;
        let s2: Vec<f64> = state.iter().zip(&k1).map(|(s, d)| s + 0.5 * step * d).collect();
        let k2 = deriv(t + 0.5 * step, &s2)?;
        let s3: Vec<f64> = state.iter().zip(&k2).map(|(s, d)| s + 0.5 * step * d).collect();
        let k3 = deriv(t + 0.5 * step, &s3)?;
        let s4: Vec<f64> = state.iter().zip(&k3).map(|(s, d)| s + step * d).collect();
        let k4 = deriv(t + step, &s4)?;
        for i in 0..=dim {
            state[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        m.wrap(&mut state[..dim]);
    }
    Ok(SymplectizationPoint::new(
        Point::new(state[..dim].to_vec()),
        state[dim],
    ))
}

/// Band norm of the lifted Hamiltonian: time integral of the oscillation of
/// e^theta H over [a, b] x M, computed from the factorized form (extrema in
/// theta sit at the band edges by monotonicity of e^theta).
pub fn admissible_norm(
    sys: &AdmissibleSystem,
    a: f64,
    b: f64,
    grid: &QuadratureGrid,
    t_samples: usize,
) -> Result<f64> {
    assert!(a < b, "band requires a < b");
    let n = if t_samples % 2 == 0 { t_samples + 1 } else { t_samples };
    let w = simpson_weights(n);
    let m = &sys.parent.manifold;
    let field = &sys.parent.hamiltonian;
    let (ea, eb) = (a.exp(), b.exp());
    let mut total = 0.0;
    for (j, wj) in w.iter().enumerate() {
        let t = j as f64 / (n - 1) as f64;
        let (lo, hi, _) = grid_extrema(m, &|p| field.value(m, t, p), grid)?;
        let band_max = if hi >= 0.0 { eb * hi } else { ea * hi };
        let band_min = if lo <= 0.0 { eb * lo } else { ea * lo };
        total += wj * (band_max - band_min);
    }
    Ok(total)
}

/// The cutoff field rho(theta) e^theta H with rho equal to 1 on
/// [a - c, b + c] and supported in (a - c - 1, b + c + 1).
pub struct CutoffField {
    pub system: AdmissibleSystem,
    pub lo0: f64,
    pub lo1: f64,
    pub hi1: f64,
    pub hi0: f64,
}

/// Build the cutoff; fails when the margin c cannot absorb the parent's
/// conformal factor (trajectories would leave the plateau).
pub fn cutoff_hamiltonian(
    sys: &AdmissibleSystem,
    a: f64,
    b: f64,
    c: f64,
) -> Result<CutoffField> {
    let bound = sup_norm(&sys.parent.conformal);
    if c < bound {
        return Err(ContactError::CutoffTooTight { c, bound });
    }
    Ok(CutoffField {
        system: sys.clone(),
        lo0: a - c - 1.0,
        lo1: a - c,
        hi1: b + c,
        hi0: b + c + 1.0,
    })
}

impl WField for CutoffField {
    fn value(&self, t: f64, w: &SymplectizationPoint) -> Result<f64> {
        let rho = plateau(w.theta, self.lo0, self.lo1, self.hi1, self.hi0);
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(rho * self.system.hamiltonian_w(t, w)?)
    }

    fn differential(&self, t: f64, w: &SymplectizationPoint) -> Result<Vec<f64>> {
        let rho = plateau(w.theta, self.lo0, self.lo1, self.hi1, self.hi0);
        let drho = plateau_deriv(w.theta, self.lo0, self.lo1, self.hi1, self.hi0);
        let dim = self.system.manifold().dim();
        if rho == 0.0 && drho == 0.0 {
            return Ok(vec![0.0; dim + 1]);
        }
        let mut d = self.system.d_hamiltonian_w(t, w)?;
        let value = self.system.hamiltonian_w(t, w)?;
        for di in d.iter_mut().take(dim) {
            *di *= rho;
        }
        d[dim] = rho * d[dim] + drho * value;
        Ok(d)
    }
}

/// Max deviation of a map on W from being symplectic: the sup over probes
/// of |J^T omega(phi(w)) J - omega(w)| with finite-difference Jacobians.
pub fn symplectic_defect(
    m: &ChartedManifold,
    map: &dyn Fn(&SymplectizationPoint) -> Result<SymplectizationPoint>,
    probes: &[SymplectizationPoint],
) -> Result<f64> {
    let step = 1e-5;
    let dim = m.dim();
    let mut worst = 0.0_f64;
    for w in probes {
        let image = map(w)?;
        let omega_im = omega_matrix(m, &image)?;
        let omega_at = omega_matrix(m, w)?;
        let mut jac = DMatrix::zeros(dim + 1, dim + 1);
        for j in 0..=dim {
            let mut wp = w.clone();
            let mut wm = w.clone();
            if j < dim {
                wp.base.coords[j] += step;
                wm.base.coords[j] -= step;
            } else {
                wp.theta += step;
                wm.theta -= step;
            }
            let ip = map(&wp)?;
            let im = map(&wm)?;
            for i in 0..=dim {
                let (vp, vm) = if i < dim {
                    (ip.base.coords[i], im.base.coords[i])
                } else {
                    (ip.theta, im.theta)
                };
                let mut d = vp - vm;
                if i < dim && m.periodic_mask()[i] {
                    use std::f64::consts::{PI, TAU};
                    if d > PI {
                        d -= TAU;
                    } else if d < -PI {
                        d += TAU;
                    }
                }
                jac[(i, j)] = d / (2.0 * step);
            }
        }
        let defect = (jac.transpose() * omega_im * jac - omega_at).abs().max();
        worst = worst.max(defect);
    }
    Ok(worst)
}
