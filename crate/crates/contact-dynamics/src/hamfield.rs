//! Time-dependent Hamiltonian fields and their contact vector fields.
//!
//! A Hamiltonian H determines a vector field X through
//!   iota(X) alpha = H,
//!   iota(X) d alpha = (R.H) alpha - dH,
//! where R is the Reeb field. Closed forms are used on both model charts;
//! a generic least-squares solve of the stacked defining equations serves
//! as a cross-check backend.

use crate::dual::Dual;
use crate::error::{ContactError, Result};
use crate::expr::{parse, Expr};
use crate::manifold::{exterior_data_at, reeb_at, ChartedManifold, ManifoldKind, Point};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

/// First-order data of H at a point: value, spatial gradient, time
/// derivative, and the Reeb derivative R.H = dH(R).
#[derive(Debug, Clone)]
pub struct JetValue {
    pub value: f64,
    pub grad: Vec<f64>,
    pub dt: f64,
    pub reeb_deriv: f64,
}

/// A time-dependent scalar field on a chart.
pub trait Hamiltonian: Send + Sync {
    fn value(&self, m: &ChartedManifold, t: f64, x: &Point) -> Result<f64>;

    /// First-order jet. The default implementation uses central finite
    /// differences; expression fields override it with exact duals.
    fn jet(&self, m: &ChartedManifold, t: f64, x: &Point) -> Result<JetValue> {
        fd_jet(m, t, x, &|t, x| self.value(m, t, x))
    }
}

/// Finite-difference jet of a scalar function (step 1e-5).
pub fn fd_jet(
    m: &ChartedManifold,
    t: f64,
    x: &Point,
    f: &dyn Fn(f64, &Point) -> Result<f64>,
) -> Result<JetValue> {
    let h = 1e-5;
    let value = f(t, x)?;
    let dim = m.dim();
    let mut grad = vec![0.0; dim];
    for i in 0..dim {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp.coords[i] += h;
        xm.coords[i] -= h;
        grad[i] = (f(t, &xp)? - f(t, &xm)?) / (2.0 * h);
    }
    let dt = (f(t + h, x)? - f(t - h, x)?) / (2.0 * h);
    let r = reeb_at(m, x)?;
    let reeb_deriv = grad.iter().zip(&r).map(|(g, v)| g * v).sum();
    Ok(JetValue {
        value,
        grad,
        dt,
        reeb_deriv,
    })
}

/// A Hamiltonian parsed from the expression language; jets are exact via
/// dual-number propagation.
#[derive(Debug, Clone)]
pub struct ExpressionField {
    pub ast: Expr,
    coord_names: Vec<String>,
}

impl ExpressionField {
    pub fn parse(m: &ChartedManifold, text: &str) -> Result<ExpressionField> {
        let ast = parse(text)?;
        let coord_names = m.coord_names();
        for v in ast.free_vars() {
            if v != "t" && !coord_names.contains(&v) {
                return Err(ContactError::UnknownIdentifier(v));
            }
        }
        Ok(ExpressionField { ast, coord_names })
    }

    fn env(&self, t: f64, x: &Point) -> HashMap<String, Dual> {
        let n = self.coord_names.len();
        let mut env = HashMap::with_capacity(n + 1);
        for (i, name) in self.coord_names.iter().enumerate() {
            env.insert(name.clone(), Dual::variable(x.coords[i], i, n + 1));
        }
        env.insert("t".into(), Dual::variable(t, n, n + 1));
        env
    }
}

impl Hamiltonian for ExpressionField {
    fn value(&self, m: &ChartedManifold, t: f64, x: &Point) -> Result<f64> {
        m.check_point(x)?;
        let n = self.coord_names.len();
        Ok(self.ast.eval(&self.env(t, x), n + 1)?.v)
    }

    fn jet(&self, m: &ChartedManifold, t: f64, x: &Point) -> Result<JetValue> {
        m.check_point(x)?;
        let n = self.coord_names.len();
        let d = self.ast.eval(&self.env(t, x), n + 1)?;
        let grad = d.d[..n].to_vec();
        let r = reeb_at(m, x)?;
        let reeb_deriv = grad.iter().zip(&r).map(|(g, v)| g * v).sum();
        Ok(JetValue {
            value: d.v,
            grad,
            dt: d.d[n],
            reeb_deriv,
        })
    }
}

/// A Hamiltonian given by closures: exact value, optional exact jet.
/// Used for derived group elements and the experiment families.
#[derive(Clone)]
pub struct FnField {
    #[allow(clippy::type_complexity)]
    pub value_fn: Arc<dyn Fn(&ChartedManifold, f64, &Point) -> Result<f64> + Send + Sync>,
    #[allow(clippy::type_complexity)]
    pub jet_fn:
        Option<Arc<dyn Fn(&ChartedManifold, f64, &Point) -> Result<JetValue> + Send + Sync>>,
}

impl FnField {
    pub fn new(
        f: impl Fn(&ChartedManifold, f64, &Point) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        FnField {
            value_fn: Arc::new(f),
            jet_fn: None,
        }
    }

    pub fn with_jet(
        mut self,
        j: impl Fn(&ChartedManifold, f64, &Point) -> Result<JetValue> + Send + Sync + 'static,
    ) -> Self {
        self.jet_fn = Some(Arc::new(j));
        self
    }
}

impl Hamiltonian for FnField {
    fn value(&self, m: &ChartedManifold, t: f64, x: &Point) -> Result<f64> {
        (self.value_fn)(m, t, x)
    }

    fn jet(&self, m: &ChartedManifold, t: f64, x: &Point) -> Result<JetValue> {
        match &self.jet_fn {
            Some(j) => j(m, t, x),
            None => fd_jet(m, t, x, &|t, x| (self.value_fn)(m, t, x)),
        }
    }
}

/// The contact vector field X_H(t, x) in chart components (closed form).
pub fn contact_vector_field(
    m: &ChartedManifold,
    field: &dyn Hamiltonian,
    t: f64,
    x: &Point,
) -> Result<Vec<f64>> {
    let jet = field.jet(m, t, x)?;
    contact_vector_from_jet(m, &jet, x)
}

/// Closed-form X_H from a precomputed jet.
pub fn contact_vector_from_jet(m: &ChartedManifold, jet: &JetValue, x: &Point) -> Result<Vec<f64>> {
    m.check_point(x)?;
    let dim = m.dim();
    match m.kind {
        ManifoldKind::Darboux { n } => {
            // X = sum_i [ -H_{y_i} dx_i + (H_{x_i} + y_i H_z) dy_i ]
            //     + (H - sum_i y_i H_{y_i}) dz
            let hz = jet.grad[dim - 1];
            let mut v = vec![0.0; dim];
            let mut z_dot = jet.value;
            for i in 0..n - 1 {
                let (xi, yi) = (i, n - 1 + i);
                let y = x.coords[yi];
                v[xi] = -jet.grad[yi];
                v[yi] = jet.grad[xi] + y * hz;
                z_dot -= y * jet.grad[yi];
            }
            v[dim - 1] = z_dot;
            Ok(v)
        }
        ManifoldKind::HopfSphere => {
            let eta = x.coords[2];
            let (s, c) = (eta.sin(), eta.cos());
            let sc = s * c;
            let u = -PI * jet.grad[2] / sc;
            Ok(vec![
                TAU * jet.value - c * c * u,
                TAU * jet.value + s * s * u,
                (PI / sc) * (jet.grad[1] * s * s - jet.grad[0] * c * c),
            ])
        }
    }
}

/// Cross-check backend: solve the stacked defining equations
/// [alpha^T; d alpha] v = [H; (R.H) alpha - dH] by least squares.
pub fn contact_vector_field_generic(
    m: &ChartedManifold,
    field: &dyn Hamiltonian,
    t: f64,
    x: &Point,
) -> Result<Vec<f64>> {
    let jet = field.jet(m, t, x)?;
    let data = exterior_data_at(m, x)?;
    let dim = m.dim();
    let mut a = DMatrix::zeros(dim + 1, dim);
    let mut b = DVector::zeros(dim + 1);
    for j in 0..dim {
        a[(0, j)] = data.alpha[j];
    }
    b[0] = jet.value;
    for i in 0..dim {
        for j in 0..dim {
            // iota(v) d alpha as a covector: (d alpha)(v, e_i) = v^T A e_i
            a[(i + 1, j)] = data.d_alpha[(j, i)];
        }
        b[i + 1] = jet.reeb_deriv * data.alpha[i] - jet.grad[i];
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = smax / smin;
    if !cond.is_finite() || cond > 1e12 {
        return Err(ContactError::SingularSystem { cond });
    }
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|_| ContactError::SingularSystem { cond })?;
    Ok(sol.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_point(m: &ChartedManifold, rng: &mut impl Rng) -> Point {
        match m.kind {
            ManifoldKind::Darboux { .. } => Point::new(
                m.sample_box
                    .iter()
                    .map(|&(lo, hi)| rng.gen_range(lo..hi))
                    .collect(),
            ),
            ManifoldKind::HopfSphere => Point::new(vec![
                rng.gen_range(0.0..TAU),
                rng.gen_range(0.0..TAU),
                rng.gen_range(0.2..PI / 2.0 - 0.2),
            ]),
        }
    }

    fn residuals(m: &ChartedManifold, field: &dyn Hamiltonian, t: f64, x: &Point) -> (f64, f64) {
        let v = contact_vector_field(m, field, t, x).unwrap();
        let jet = field.jet(m, t, x).unwrap();
        let data = exterior_data_at(m, x).unwrap();
        let dim = m.dim();
        let pairing: f64 = data.alpha.iter().zip(&v).map(|(a, b)| a * b).sum();
        let r1 = (pairing - jet.value).abs();
        let mut r2 = 0.0_f64;
        for i in 0..dim {
            let contraction: f64 = (0..dim).map(|j| v[j] * data.d_alpha[(j, i)]).sum();
            let target = jet.reeb_deriv * data.alpha[i] - jet.grad[i];
            r2 = r2.max((contraction - target).abs());
        }
        (r1, r2)
    }

    #[test]
    fn expression_jet_matches_finite_differences() {
        let m = ChartedManifold::darboux(2);
        let f = ExpressionField::parse(&m, "sin(x1*y1)+exp(0.3*z)*t^2").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = random_point(&m, &mut rng);
            let t = rng.gen_range(0.0..1.0);
            let exact = f.jet(&m, t, &x).unwrap();
            let fd = fd_jet(&m, t, &x, &|t, x| f.value(&m, t, x)).unwrap();
            let scale = 1.0 + exact.value.abs();
            assert!((exact.dt - fd.dt).abs() / scale < 1e-6);
            for i in 0..m.dim() {
                assert!((exact.grad[i] - fd.grad[i]).abs() / scale < 1e-6);
            }
        }
    }

    #[test]
    fn unknown_coordinates_rejected() {
        let m = ChartedManifold::hopf_sphere();
        assert!(matches!(
            ExpressionField::parse(&m, "x1+1"),
            Err(ContactError::UnknownIdentifier(_))
        ));
        assert!(ExpressionField::parse(&m, "cos(xi1)*sin(t)").is_ok());
    }

    #[test]
    fn constant_one_generates_reeb() {
        for m in [ChartedManifold::darboux(3), ChartedManifold::hopf_sphere()] {
            let f = ExpressionField::parse(&m, "1").unwrap();
            let x = random_point(&m, &mut ChaCha8Rng::seed_from_u64(1));
            let v = contact_vector_field(&m, &f, 0.0, &x).unwrap();
            let r = reeb_at(&m, &x).unwrap();
            for (a, b) in v.iter().zip(&r) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn darboux_translation_field() {
        // H = y gives X = (-1, 0, 0)
        let m = ChartedManifold::darboux(2);
        let f = ExpressionField::parse(&m, "y1").unwrap();
        let v = contact_vector_field(&m, &f, 0.0, &Point::new(vec![0.4, -1.2, 0.7])).unwrap();
        assert_eq!(v, vec![-1.0, 0.0, 0.0]);
    }

    #[test]
    fn hopf_half_cos_field_closed_form() {
        let m = ChartedManifold::hopf_sphere();
        let f = ExpressionField::parse(&m, "0.5*cos(xi1)").unwrap();
        let (xi1, eta) = (0.7, 0.9_f64);
        let v = contact_vector_field(&m, &f, 0.0, &Point::new(vec![xi1, 0.3, eta])).unwrap();
        let expect = [
            PI * xi1.cos(),
            PI * xi1.cos(),
            (PI / 2.0) * xi1.sin() * eta.cos() / eta.sin(),
        ];
        for (a, b) in v.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12, "{v:?} vs {expect:?}");
        }
    }

    #[test]
    fn defining_equation_residuals_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let darboux = ChartedManifold::darboux(3);
        let hopf = ChartedManifold::hopf_sphere();
        let fields: Vec<(&ChartedManifold, ExpressionField)> = vec![
            (
                &darboux,
                ExpressionField::parse(&darboux, "sin(x1)*y2+t*z^2+x2*y1").unwrap(),
            ),
            (
                &hopf,
                ExpressionField::parse(&hopf, "cos(xi1)*sin(xi2)+0.2*sin(eta)^2*t").unwrap(),
            ),
        ];
        for (m, f) in &fields {
            for _ in 0..5_000 {
                let x = random_point(m, &mut rng);
                let t = rng.gen_range(0.0..1.0);
                let (r1, r2) = residuals(*m, f, t, &x);
                assert!(r1 < 1e-10, "alpha residual {r1}");
                assert!(r2 < 1e-8, "d alpha residual {r2}");
            }
        }
    }

    #[test]
    fn closed_form_matches_generic_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let darboux = ChartedManifold::darboux(2);
        let hopf = ChartedManifold::hopf_sphere();
        let fields: Vec<(&ChartedManifold, ExpressionField)> = vec![
            (
                &darboux,
                ExpressionField::parse(&darboux, "exp(0.2*x1)*y1+z*t").unwrap(),
            ),
            (
                &hopf,
                ExpressionField::parse(&hopf, "0.5*cos(xi1)+0.3*sin(xi2)*cos(eta)").unwrap(),
            ),
        ];
        for (m, f) in &fields {
            for _ in 0..500 {
                let x = random_point(m, &mut rng);
                let t = rng.gen_range(0.0..1.0);
                let a = contact_vector_field(*m, f, t, &x).unwrap();
                let b = contact_vector_field_generic(*m, f, t, &x).unwrap();
                for (u, v) in a.iter().zip(&b) {
                    assert!((u - v).abs() < 1e-8, "{a:?} vs {b:?}");
                }
            }
        }
    }

    #[test]
    fn field_is_linear_in_hamiltonian() {
        let m = ChartedManifold::darboux(2);
        let f = ExpressionField::parse(&m, "sin(x1)*y1").unwrap();
        let g = ExpressionField::parse(&m, "z^2+t").unwrap();
        let combo = ExpressionField::parse(&m, "2.5*sin(x1)*y1-1.25*(z^2+t)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let x = random_point(&m, &mut rng);
            let t = rng.gen_range(0.0..1.0);
            let vf = contact_vector_field(&m, &f, t, &x).unwrap();
            let vg = contact_vector_field(&m, &g, t, &x).unwrap();
            let vc = contact_vector_field(&m, &combo, t, &x).unwrap();
            for i in 0..m.dim() {
                assert!((vc[i] - (2.5 * vf[i] - 1.25 * vg[i])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fn_field_default_jet() {
        let m = ChartedManifold::darboux(2);
        let f = FnField::new(|_, t, x| Ok(t * x.coords[1].powi(2)));
        let jet = f
            .jet(&m, 0.5, &Point::new(vec![0.0, 3.0, 0.0]))
            .unwrap();
        assert!((jet.value - 4.5).abs() < 1e-12);
        assert!((jet.grad[1] - 3.0).abs() < 1e-7);
        assert!((jet.dt - 9.0).abs() < 1e-7);
        assert!(jet.reeb_deriv.abs() < 1e-7);
    }
}
