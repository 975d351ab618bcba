//! Norms and distances on contact Hamiltonians and their isotopies.
//!
//! The contact length of H is the time integral of osc(H_t) + |c(H_t)|,
//! where osc is the oscillation (max - min) and c the mean with respect to
//! the normalized canonical volume. On top of it sit the sup-variant norm
//! (max over t of the same integrand), the conformal sup-norm, the C^0
//! distances between isotopies, the contact distance, a length variant that
//! only charges the net mean, and the displacement functional.

use crate::error::{ContactError, Result};
use crate::flow::{integrate_system, ContactDynamicalSystem, IntegratorOpts};
use crate::hamfield::{FnField, Hamiltonian};
use crate::manifold::{ChartedManifold, ManifoldKind, Point, QuadratureGrid};
use crate::numeric::{golden_max, simpson_weights};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Serialize)]
pub struct GridMeta {
    pub t_samples: usize,
    pub spatial_nodes: usize,
    /// How much the golden-section pass moved the oscillation, relative to
    /// the total; large values signal an under-resolved grid.
    pub refinement_delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub osc_integral: f64,
    pub mean_abs_integral: f64,
    pub total: f64,
    pub sup_variant: f64,
    pub grid_meta: GridMeta,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceReport {
    pub d_m: f64,
    pub d_bar_m: f64,
    pub conf_sup: f64,
    pub ham_norm: f64,
    pub d_alpha: f64,
}

/// Sharpen a grid extremum by coordinate-wise golden-section sweeps within
/// one grid cell of the starting node.
fn refine_extremum(
    m: &ChartedManifold,
    f: &(dyn Fn(&Point) -> Result<f64> + Sync),
    start: &Point,
    spacing: &[f64],
    maximize: bool,
) -> Result<f64> {
    let dim = m.dim();
    let mut p = start.clone();
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut best = sign * f(&p)?;
    for _ in 0..2 {
        for axis in 0..dim {
            let (mut lo, mut hi) = (p.coords[axis] - spacing[axis], p.coords[axis] + spacing[axis]);
            if let ManifoldKind::HopfSphere = m.kind {
                if axis == 2 {
                    lo = lo.max(m.pole_margin * 1.01);
                    hi = hi.min(PI / 2.0 - m.pole_margin * 1.01);
                }
            } else {
                lo = lo.max(m.sample_box[axis].0);
                hi = hi.min(m.sample_box[axis].1);
            }
            if hi <= lo {
                continue;
            }
            let mut err = None;
            let (xb, vb) = golden_max(lo, hi, 40, |c| {
                let mut q = p.clone();
                q.coords[axis] = c;
                match f(&q) {
                    Ok(v) => sign * v,
                    Err(e) => {
                        err = Some(e);
                        f64::NEG_INFINITY
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            if vb > best {
                best = vb;
                p.coords[axis] = xb;
            }
        }
    }
    Ok(sign * best)
}

/// Refined minimum and maximum of a scalar function over the grid.
/// Returns (min, max, refinement_delta) where the delta measures how much
/// the golden-section pass improved on the raw grid oscillation.
pub fn grid_extrema(
    m: &ChartedManifold,
    f: &(dyn Fn(&Point) -> Result<f64> + Sync),
    grid: &QuadratureGrid,
) -> Result<(f64, f64, f64)> {
    let values: Result<Vec<f64>> = grid.nodes.par_iter().map(|p| f(p)).collect();
    grid_extrema_from_values(m, f, grid, &values?)
}

fn grid_extrema_from_values(
    m: &ChartedManifold,
    f: &(dyn Fn(&Point) -> Result<f64> + Sync),
    grid: &QuadratureGrid,
    values: &[f64],
) -> Result<(f64, f64, f64)> {
    let (mut imax, mut imin) = (0usize, 0usize);
    for (i, v) in values.iter().enumerate() {
        if *v > values[imax] {
            imax = i;
        }
        if *v < values[imin] {
            imin = i;
        }
    }
    let grid_osc = values[imax] - values[imin];
    let hi = refine_extremum(m, f, &grid.nodes[imax], &grid.spacing, true)?;
    let lo = refine_extremum(m, f, &grid.nodes[imin], &grid.spacing, false)?;
    Ok((lo, hi, (hi - lo) - grid_osc))
}

/// Oscillation (with local refinement) and mean of a scalar function over
/// the grid. Returns (osc, mean, refinement_delta).
pub fn osc_and_mean(
    m: &ChartedManifold,
    f: &(dyn Fn(&Point) -> Result<f64> + Sync),
    grid: &QuadratureGrid,
) -> Result<(f64, f64, f64)> {
    let values: Result<Vec<f64>> = grid.nodes.par_iter().map(|p| f(p)).collect();
    let values = values?;
    let mean = grid.mean(&values);
    let (lo, hi, delta) = grid_extrema_from_values(m, f, grid, &values)?;
    Ok((hi - lo, mean, delta))
}

/// Contact length of a Hamiltonian: integral over [0,1] of osc + |mean|,
/// by composite Simpson in time; also reports the sup-over-time variant.
pub fn contact_norm(
    m: &ChartedManifold,
    field: &dyn Hamiltonian,
    grid: &QuadratureGrid,
    t_samples: usize,
) -> Result<NormReport> {
    let n = if t_samples % 2 == 0 {
        t_samples + 1
    } else {
        t_samples
    };
    let w = simpson_weights(n);
    let per_time: Result<Vec<(f64, f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 / (n - 1) as f64;
            osc_and_mean(m, &|p| field.value(m, t, p), grid)
        })
        .collect();
    let per_time = per_time?;
    let mut osc_integral = 0.0;
    let mut mean_abs_integral = 0.0;
    let mut sup_variant = 0.0_f64;
    let mut refinement_delta = 0.0_f64;
    for (j, (osc, mean, delta)) in per_time.iter().enumerate() {
        osc_integral += w[j] * osc;
        mean_abs_integral += w[j] * mean.abs();
        sup_variant = sup_variant.max(osc + mean.abs());
        refinement_delta = refinement_delta.max(*delta);
    }
    let total = osc_integral + mean_abs_integral;
    if total > 1e-12 && refinement_delta / total > 0.05 {
        return Err(ContactError::ResolutionTooCoarse(format!(
            "oscillation refinement moved by {:.2}% of the norm",
            100.0 * refinement_delta / total
        )));
    }
    Ok(NormReport {
        osc_integral,
        mean_abs_integral,
        total,
        sup_variant,
        grid_meta: GridMeta {
            t_samples: n,
            spatial_nodes: grid.nodes.len(),
            refinement_delta,
        },
    })
}

/// Sup-norm of a sampled conformal field.
pub fn sup_norm(conformal: &[Vec<f64>]) -> f64 {
    conformal
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0_f64, |acc, h| acc.max(h.abs()))
}

/// C^0 distances between two isotopies over probe points and times:
/// d_M maximizes the chart distance of the forward maps; the barred
/// variant adds the same for the inverse maps.
pub fn c0_distance(
    a: &ContactDynamicalSystem,
    b: &ContactDynamicalSystem,
    probes: &[Point],
    times: &[f64],
) -> Result<(f64, f64)> {
    if a.manifold != b.manifold {
        return Err(ContactError::ManifoldMismatch);
    }
    let m = &a.manifold;
    let pairs: Result<Vec<(f64, f64)>> = probes
        .par_iter()
        .map(|x| {
            let mut fwd = 0.0_f64;
            let mut inv = 0.0_f64;
            for &t in times {
                let (ya, _) = a.flow_to(t, x)?;
                let (yb, _) = b.flow_to(t, x)?;
                fwd = fwd.max(m.distance(&ya, &yb));
                let (pa, _) = a.inverse_at(t, x)?;
                let (pb, _) = b.inverse_at(t, x)?;
                inv = inv.max(m.distance(&pa, &pb));
            }
            Ok((fwd, inv))
        })
        .collect();
    let mut d_m = 0.0_f64;
    let mut d_inv = 0.0_f64;
    for (f, i) in pairs? {
        d_m = d_m.max(f);
        d_inv = d_inv.max(i);
    }
    Ok((d_m, d_m + d_inv))
}

/// Contact distance: d_bar_M + sup|h - f| + contact length of H - F.
pub fn contact_distance(
    a: &ContactDynamicalSystem,
    b: &ContactDynamicalSystem,
    probes: &[Point],
    times: &[f64],
    grid: &QuadratureGrid,
    t_samples: usize,
) -> Result<DistanceReport> {
    if a.manifold != b.manifold {
        return Err(ContactError::ManifoldMismatch);
    }
    let (d_m, d_bar_m) = c0_distance(a, b, probes, times)?;
    let confs: Result<Vec<f64>> = probes
        .par_iter()
        .map(|x| {
            let mut worst = 0.0_f64;
            for &t in times {
                let (_, ha) = a.flow_to(t, x)?;
                let (_, hb) = b.flow_to(t, x)?;
                worst = worst.max((ha - hb).abs());
            }
            Ok(worst)
        })
        .collect();
    let conf_sup = confs?.into_iter().fold(0.0_f64, f64::max);
    let (fa, fb) = (a.hamiltonian.clone(), b.hamiltonian.clone());
    let diff = FnField::new(move |m, t, x| Ok(fa.value(m, t, x)? - fb.value(m, t, x)?));
    let ham_norm = contact_norm(&a.manifold, &diff, grid, t_samples)?.total;
    Ok(DistanceReport {
        d_m,
        d_bar_m,
        conf_sup,
        ham_norm,
        d_alpha: d_bar_m + conf_sup + ham_norm,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BdReport {
    /// Integral of osc plus absolute value of the net mean.
    pub ell_bd: f64,
    /// |norm of the mean-cancelling composition - ell_bd|; small values
    /// certify the reduction that trades |mean| integrand for net mean.
    pub reduction_check: f64,
    pub energy_upper: f64,
    /// Whether the Hamiltonian is basic (Reeb derivative zero on samples).
    pub basic: bool,
}

/// Length variant charging only the net mean, with an honest verification:
/// compose the system with the space-constant Hamiltonian F_t = C - c_t
/// (C the net mean) and recompute the contact norm of the composition.
pub fn bd_length_and_energy(
    a: Arc<ContactDynamicalSystem>,
    grid: &QuadratureGrid,
    t_samples: usize,
) -> Result<BdReport> {
    let m = a.manifold.clone();
    let field = a.hamiltonian.clone();
    let n = if t_samples % 2 == 0 {
        t_samples + 1
    } else {
        t_samples
    };
    let w = simpson_weights(n);
    let per_time: Result<Vec<(f64, f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let t = j as f64 / (n - 1) as f64;
            osc_and_mean(&m, &|p| field.value(&m, t, p), grid)
        })
        .collect();
    let per_time = per_time?;
    let mut osc_integral = 0.0;
    let mut net_mean = 0.0;
    for (j, (osc, mean, _)) in per_time.iter().enumerate() {
        osc_integral += w[j] * osc;
        net_mean += w[j] * mean;
    }
    let ell_bd = osc_integral + net_mean.abs();

    // basic test on a subsample
    let mut basic = true;
    'outer: for j in (0..n).step_by((n / 8).max(1)) {
        let t = j as f64 / (n - 1) as f64;
        for p in grid.nodes.iter().step_by((grid.nodes.len() / 64).max(1)) {
            if field.jet(&m, t, p)?.reeb_deriv.abs() > 1e-8 {
                basic = false;
                break 'outer;
            }
        }
    }

    // honest reduction check through an actual composition
    let means: Arc<Vec<f64>> = Arc::new(per_time.iter().map(|(_, c, _)| *c).collect());
    let net = net_mean;
    let k = n - 1;
    let f_field = FnField::new(move |_, t, _| {
        // piecewise-linear interpolation of the sampled means
        let s = (t.clamp(0.0, 1.0)) * k as f64;
        let j = (s.floor() as usize).min(k - 1);
        let frac = s - j as f64;
        let c_t = means[j] * (1.0 - frac) + means[j + 1] * frac;
        Ok(net - c_t)
    });
    let f_sys = integrate_system(
        &m,
        Arc::new(f_field),
        vec![grid.nodes[0].clone()],
        &IntegratorOpts {
            dt: 1e-2,
            t_samples: a.time_grid.len(),
            t_end: *a.time_grid.last().unwrap(),
        },
    )?;
    let composed = crate::algebra::compose(a, Arc::new(f_sys))?;
    let composed_norm = contact_norm(&m, composed.hamiltonian.as_ref(), grid, t_samples)?;
    let reduction_check = (composed_norm.total - ell_bd).abs();

    Ok(BdReport {
        ell_bd,
        reduction_check,
        energy_upper: ell_bd,
        basic,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DisplacementReport {
    pub displaced: bool,
    pub min_separation: f64,
    pub functional: f64,
}

/// Whether the time-1 map moves the sampled compact set wholly off itself,
/// together with the energy-style functional e^{-sup|h|} * contact norm.
pub fn displacement_energy_functional(
    a: &ContactDynamicalSystem,
    k_samples: &[Point],
    margin: f64,
    grid: &QuadratureGrid,
    t_samples: usize,
) -> Result<DisplacementReport> {
    let m = &a.manifold;
    let t_end = *a.time_grid.last().unwrap();
    let images: Result<Vec<Point>> = k_samples
        .par_iter()
        .map(|x| Ok(a.flow_to(t_end, x)?.0))
        .collect();
    let images = images?;
    let mut min_sep = f64::INFINITY;
    for img in &images {
        for orig in k_samples {
            min_sep = min_sep.min(m.distance(img, orig));
        }
    }
    let h_sup = sup_norm(&a.conformal);
    let norm = contact_norm(m, a.hamiltonian.as_ref(), grid, t_samples)?;
    Ok(DisplacementReport {
        displaced: min_sep > margin,
        min_separation: min_sep,
        functional: (-h_sup).exp() * norm.total,
    })
}
