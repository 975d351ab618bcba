//! Model contact manifolds: standard Darboux space R^{2n-1} with
//! alpha = dz - sum y_i dx_i, and the three-sphere in Hopf coordinates
//! (xi1, xi2, eta) with alpha = (1/2pi)(sin^2 eta dxi1 + cos^2 eta dxi2).
//!
//! Both charts come with closed-form contact data (alpha, d alpha), the Reeb
//! field, and quadrature grids for the normalized canonical volume measure.

use crate::error::{ContactError, Result};
use crate::numeric::gauss_legendre;
use nalgebra::DMatrix;
use std::f64::consts::{PI, TAU};

pub const DEFAULT_POLE_MARGIN: f64 = 1e-3;
pub const DEFAULT_DARBOUX_HALF_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldKind {
    /// R^{2n-1} with the standard contact form, n >= 2.
    Darboux { n: usize },
    /// S^3 in Hopf coordinates.
    HopfSphere,
}

/// A model contact manifold with a single global chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartedManifold {
    pub kind: ManifoldKind,
    /// Margin keeping Hopf trajectories away from the chart poles eta in {0, pi/2}.
    pub pole_margin: f64,
    /// Compact sampling box for Darboux charts, one (lo, hi) pair per coordinate.
    pub sample_box: Vec<(f64, f64)>,
}

impl ChartedManifold {
    pub fn darboux(n: usize) -> Self {
        assert!(n >= 2, "Darboux chart needs n >= 2");
        let dim = 2 * n - 1;
        ChartedManifold {
            kind: ManifoldKind::Darboux { n },
            pole_margin: DEFAULT_POLE_MARGIN,
            sample_box: vec![(-DEFAULT_DARBOUX_HALF_WIDTH, DEFAULT_DARBOUX_HALF_WIDTH); dim],
        }
    }

    pub fn hopf_sphere() -> Self {
        ChartedManifold {
            kind: ManifoldKind::HopfSphere,
            pole_margin: DEFAULT_POLE_MARGIN,
            sample_box: vec![(0.0, TAU), (0.0, TAU), (0.0, PI / 2.0)],
        }
    }

    pub fn with_pole_margin(mut self, margin: f64) -> Self {
        self.pole_margin = margin;
        self
    }

    pub fn with_sample_box(mut self, b: Vec<(f64, f64)>) -> Self {
        assert_eq!(b.len(), self.dim());
        self.sample_box = b;
        self
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Darboux { n } => 2 * n - 1,
            ManifoldKind::HopfSphere => 3,
        }
    }

    /// Coordinate names accepted by the expression language.
    pub fn coord_names(&self) -> Vec<String> {
        match self.kind {
            ManifoldKind::Darboux { n } => {
                let mut names = Vec::with_capacity(2 * n - 1);
                for i in 1..n {
                    names.push(format!("x{i}"));
                }
                for i in 1..n {
                    names.push(format!("y{i}"));
                }
                names.push("z".to_string());
                names
            }
            ManifoldKind::HopfSphere => {
                vec!["xi1".into(), "xi2".into(), "eta".into()]
            }
        }
    }

    /// Which coordinates are 2pi-periodic angles.
    pub fn periodic_mask(&self) -> Vec<bool> {
        match self.kind {
            ManifoldKind::Darboux { n } => vec![false; 2 * n - 1],
            ManifoldKind::HopfSphere => vec![true, true, false],
        }
    }

    /// Wrap periodic angles into [0, 2pi).
    pub fn wrap(&self, coords: &mut [f64]) {
        for (c, periodic) in coords.iter_mut().zip(self.periodic_mask()) {
            if periodic {
                *c = c.rem_euclid(TAU);
            }
        }
    }

    /// Checks that a point is admissible in the chart.
    pub fn check_point(&self, x: &Point) -> Result<()> {
        if x.coords.len() != self.dim() {
            return Err(ContactError::Domain(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                x.coords.len()
            )));
        }
        if x.coords.iter().any(|c| !c.is_finite()) {
            return Err(ContactError::Domain("non-finite coordinate".into()));
        }
        if let ManifoldKind::HopfSphere = self.kind {
            let eta = x.coords[2];
            if eta < self.pole_margin || eta > PI / 2.0 - self.pole_margin {
                return Err(ContactError::PoleSingularity {
                    eta,
                    margin: self.pole_margin,
                });
            }
        }
        Ok(())
    }

    /// Chart distance with angular wrapping on periodic coordinates.
    pub fn distance(&self, a: &Point, b: &Point) -> f64 {
        let mask = self.periodic_mask();
        a.coords
            .iter()
            .zip(&b.coords)
            .zip(&mask)
            .map(|((&u, &v), &periodic)| {
                let d = if periodic {
                    let d = (u - v).rem_euclid(TAU);
                    d.min(TAU - d)
                } else {
                    u - v
                };
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// A chart point. Coordinates are interpreted by the owning manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point { coords }
    }

    /// Canonical representative with periodic angles wrapped into [0, 2pi).
    pub fn wrapped(mut self, m: &ChartedManifold) -> Self {
        m.wrap(&mut self.coords);
        self
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point { coords }
    }
}

/// The contact form and its exterior derivative at a point.
#[derive(Debug, Clone)]
pub struct CovectorData {
    /// Components of alpha in the chart basis.
    pub alpha: Vec<f64>,
    /// Antisymmetric matrix A with d alpha (u, v) = u^T A v.
    pub d_alpha: DMatrix<f64>,
}

/// Closed-form alpha and d alpha for the manifold kind.
pub fn exterior_data_at(m: &ChartedManifold, x: &Point) -> Result<CovectorData> {
    m.check_point(x)?;
    let dim = m.dim();
    match m.kind {
        ManifoldKind::Darboux { n } => {
            // alpha = dz - sum y_i dx_i, d alpha = sum dx_i ^ dy_i.
            let mut alpha = vec![0.0; dim];
            alpha[dim - 1] = 1.0;
            let mut d_alpha = DMatrix::zeros(dim, dim);
            for i in 0..n - 1 {
                let (xi, yi) = (i, n - 1 + i);
                alpha[xi] = -x.coords[yi];
                d_alpha[(xi, yi)] = 1.0;
                d_alpha[(yi, xi)] = -1.0;
            }
            Ok(CovectorData { alpha, d_alpha })
        }
        ManifoldKind::HopfSphere => {
            let eta = x.coords[2];
            let (s, c) = (eta.sin(), eta.cos());
            let alpha = vec![s * s / TAU, c * c / TAU, 0.0];
            // d alpha = (sc/pi)(deta ^ dxi1 - deta ^ dxi2)
            let sc = s * c / PI;
            let mut d_alpha = DMatrix::zeros(3, 3);
            d_alpha[(2, 0)] = sc;
            d_alpha[(0, 2)] = -sc;
            d_alpha[(2, 1)] = -sc;
            d_alpha[(1, 2)] = sc;
            Ok(CovectorData { alpha, d_alpha })
        }
    }
}

/// The Reeb vector field at a point: iota(R) alpha = 1, iota(R) d alpha = 0.
pub fn reeb_at(m: &ChartedManifold, x: &Point) -> Result<Vec<f64>> {
    m.check_point(x)?;
    let dim = m.dim();
    match m.kind {
        ManifoldKind::Darboux { .. } => {
            let mut r = vec![0.0; dim];
            r[dim - 1] = 1.0;
            Ok(r)
        }
        ManifoldKind::HopfSphere => Ok(vec![TAU, TAU, 0.0]),
    }
}

/// Bordered skew matrix [[0, alpha], [-alpha^T, d alpha]]; its determinant is
/// nonzero exactly when alpha ^ (d alpha)^{n-1} != 0 at the point.
pub fn nondegeneracy_matrix(m: &ChartedManifold, x: &Point) -> Result<DMatrix<f64>> {
    let data = exterior_data_at(m, x)?;
    let dim = m.dim();
    let mut s = DMatrix::zeros(dim + 1, dim + 1);
    for i in 0..dim {
        s[(0, i + 1)] = data.alpha[i];
        s[(i + 1, 0)] = -data.alpha[i];
        for j in 0..dim {
            s[(i + 1, j + 1)] = data.d_alpha[(i, j)];
        }
    }
    Ok(s)
}

/// Quadrature nodes and weights for the normalized canonical measure.
///
/// Weights sum to `1`; `mass` records which fraction of the reference measure
/// the grid covers (Darboux sub-box grids carry mass < 1 when embedded in a
/// larger reference box).
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
    pub mass: f64,
    pub resolution: Vec<usize>,
    /// Per-axis node spacing, used as the search radius of local refinement.
    pub spacing: Vec<f64>,
}

/// Tensor-product quadrature grid.
///
/// Hopf: uniform (trapezoidal) nodes on the periodic angles and Gauss–Legendre
/// nodes in eta weighted by the volume density sin(eta) cos(eta). Darboux:
/// midpoint nodes with uniform weights on the manifold's sample box.
pub fn quadrature_grid(m: &ChartedManifold, resolution: &[usize]) -> Result<QuadratureGrid> {
    if resolution.len() != m.dim() {
        return Err(ContactError::ResolutionTooCoarse(format!(
            "expected {} axis counts, got {}",
            m.dim(),
            resolution.len()
        )));
    }
    if resolution.iter().any(|&r| r < 4) {
        return Err(ContactError::ResolutionTooCoarse(
            "need at least 4 nodes per axis".into(),
        ));
    }
    match m.kind {
        ManifoldKind::Darboux { .. } => darboux_box_grid(m, &m.sample_box.clone(), resolution, 1.0),
        ManifoldKind::HopfSphere => hopf_grid(m, resolution),
    }
}

fn hopf_grid(m: &ChartedManifold, resolution: &[usize]) -> Result<QuadratureGrid> {
    let (n1, n2, ne) = (resolution[0], resolution[1], resolution[2]);
    let (lo, hi) = (m.pole_margin, PI / 2.0 - m.pole_margin);
    let (gl_nodes, gl_weights) = gauss_legendre(ne);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eta_nodes = Vec::with_capacity(ne);
    let mut eta_weights = Vec::with_capacity(ne);
    for (x, w) in gl_nodes.iter().zip(&gl_weights) {
        let eta: f64 = mid + half * x;
        eta_nodes.push(eta);
        eta_weights.push(w * half * eta.sin() * eta.cos());
    }
    let eta_total: f64 = eta_weights.iter().sum();
    let mut nodes = Vec::with_capacity(n1 * n2 * ne);
    let mut weights = Vec::with_capacity(n1 * n2 * ne);
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
    Ok(QuadratureGrid {
        nodes,
        weights,
        mass: 1.0,
        resolution: resolution.to_vec(),
        spacing: vec![TAU / n1 as f64, TAU / n2 as f64, (hi - lo) / ne as f64],
    })
}

/// Midpoint grid on an explicit Darboux box. `mass` is the fraction of the
/// reference measure covered by `bx` (pass 1.0 when the box is the reference).
pub fn darboux_box_grid(
    m: &ChartedManifold,
    bx: &[(f64, f64)],
    resolution: &[usize],
    mass: f64,
) -> Result<QuadratureGrid> {
    let dim = m.dim();
    assert!(matches!(m.kind, ManifoldKind::Darboux { .. }));
    assert_eq!(bx.len(), dim);
    assert_eq!(resolution.len(), dim);
    let total: usize = resolution.iter().product();
    let mut nodes = Vec::with_capacity(total);
    let w = mass / total as f64;
    let mut idx = vec![0usize; dim];
    loop {
        let coords: Vec<f64> = (0..dim)
            .map(|a| {
                let (lo, hi) = bx[a];
                lo + (hi - lo) * (idx[a] as f64 + 0.5) / resolution[a] as f64
            })
            .collect();
        nodes.push(Point::new(coords));
        // odometer increment
        let mut a = dim;
        loop {
            if a == 0 {
                break;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < resolution[a] {
                break;
            }
            idx[a] = 0;
            if a == 0 {
                let spacing = (0..dim)
                    .map(|a| (bx[a].1 - bx[a].0) / resolution[a] as f64)
                    .collect();
                let weights = vec![w; nodes.len()];
                return Ok(QuadratureGrid {
                    nodes,
                    weights,
                    mass,
                    resolution: resolution.to_vec(),
                    spacing,
                });
            }
        }
    }
}

impl QuadratureGrid {
    /// Weighted mean over the grid. For mass < 1 grids this is the mean over
    /// the reference measure of a function supported inside the grid box.
    pub fn mean(&self, values: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            * self.mass
    }

    /// Merge two grids into one, renormalizing weights to total mass 1.
    /// Used to combine a coarse global grid with a fine sub-box grid.
    pub fn union(&self, other: &QuadratureGrid) -> QuadratureGrid {
        let mut nodes = self.nodes.clone();
        nodes.extend(other.nodes.iter().cloned());
        let mut weights: Vec<f64> = self
            .weights
            .iter()
            .map(|w| w * self.mass)
            .chain(other.weights.iter().map(|w| w * other.mass))
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        let spacing = self
            .spacing
            .iter()
            .zip(&other.spacing)
            .map(|(a, b)| a.min(*b))
            .collect();
        QuadratureGrid {
            nodes,
            weights,
            mass: 1.0,
            resolution: self.resolution.clone(),
            spacing,
        }
    }
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
                rng.gen_range(0.1..PI / 2.0 - 0.1),
            ]),
        }
    }

    #[test]
    fn darboux_alpha_at_origin() {
        let m = ChartedManifold::darboux(2);
        let d = exterior_data_at(&m, &Point::new(vec![0.0, 0.0, 0.0])).unwrap();
        assert_eq!(d.alpha, vec![0.0, 0.0, 1.0]);
        assert_eq!(d.d_alpha[(0, 1)], 1.0);
        assert_eq!(d.d_alpha[(1, 0)], -1.0);
    }

    #[test]
    fn darboux_alpha_generic_point() {
        // alpha = dz - y dx at (1, 3, 5) is (-3, 0, 1)
        let m = ChartedManifold::darboux(2);
        let d = exterior_data_at(&m, &Point::new(vec![1.0, 3.0, 5.0])).unwrap();
        assert_eq!(d.alpha, vec![-3.0, 0.0, 1.0]);
    }

    #[test]
    fn hopf_alpha_at_equator() {
        let m = ChartedManifold::hopf_sphere();
        let d = exterior_data_at(&m, &Point::new(vec![0.3, 1.0, PI / 4.0])).unwrap();
        let expect = 1.0 / (4.0 * PI);
        assert!((d.alpha[0] - expect).abs() < 1e-15);
        assert!((d.alpha[1] - expect).abs() < 1e-15);
        assert_eq!(d.alpha[2], 0.0);
    }

    #[test]
    fn hopf_pole_margin_is_enforced() {
        let m = ChartedManifold::hopf_sphere();
        let err = exterior_data_at(&m, &Point::new(vec![0.0, 0.0, 1e-5]));
        assert!(matches!(err, Err(ContactError::PoleSingularity { .. })));
    }

    #[test]
    fn reeb_defining_equations_hold_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [
            ChartedManifold::darboux(2),
            ChartedManifold::darboux(3),
            ChartedManifold::hopf_sphere(),
        ] {
            for _ in 0..10_000 {
                let x = random_point(&m, &mut rng);
                let d = exterior_data_at(&m, &x).unwrap();
                let r = reeb_at(&m, &x).unwrap();
                let pairing: f64 = d.alpha.iter().zip(&r).map(|(a, v)| a * v).sum();
                assert!((pairing - 1.0).abs() < 1e-12);
                for j in 0..m.dim() {
                    let contraction: f64 = (0..m.dim()).map(|i| r[i] * d.d_alpha[(i, j)]).sum();
                    assert!(contraction.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn d_alpha_is_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for m in [ChartedManifold::darboux(3), ChartedManifold::hopf_sphere()] {
            for _ in 0..100 {
                let x = random_point(&m, &mut rng);
                let d = exterior_data_at(&m, &x).unwrap();
                let asym = (&d.d_alpha + d.d_alpha.transpose()).abs().max();
                assert!(asym < 1e-14);
            }
        }
    }

    #[test]
    fn nondegenerate_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for m in [ChartedManifold::darboux(2), ChartedManifold::hopf_sphere()] {
            for _ in 0..10_000 {
                let x = random_point(&m, &mut rng);
                let s = nondegeneracy_matrix(&m, &x).unwrap();
                assert!(s.determinant().abs() > 1e-12);
            }
        }
    }

    #[test]
    fn hopf_grid_weights_normalized() {
        let m = ChartedManifold::hopf_sphere();
        let g = quadrature_grid(&m, &[8, 8, 8]).unwrap();
        let total: f64 = g.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hopf_mean_of_constant_is_one() {
        let m = ChartedManifold::hopf_sphere();
        let g = quadrature_grid(&m, &[6, 6, 6]).unwrap();
        let ones = vec![1.0; g.nodes.len()];
        assert!((g.mean(&ones) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hopf_mean_of_half_cos_xi1_vanishes() {
        let m = ChartedManifold::hopf_sphere();
        let g = quadrature_grid(&m, &[16, 8, 8]).unwrap();
        let vals: Vec<f64> = g.nodes.iter().map(|p| 0.5 * p.coords[0].cos()).collect();
        assert!(g.mean(&vals).abs() < 1e-12);
    }

    #[test]
    fn hopf_mean_of_sin_sq_eta_is_half() {
        // int_0^{pi/2} sin^2(eta) 2 sin(eta) cos(eta) d eta = 1/2
        let m = ChartedManifold::hopf_sphere();
        let g = quadrature_grid(&m, &[4, 4, 24]).unwrap();
        let vals: Vec<f64> = g.nodes.iter().map(|p| p.coords[2].sin().powi(2)).collect();
        assert!((g.mean(&vals) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn hopf_grid_mean_matches_xi1_line_integral() {
        // For f(xi1), the sphere mean reduces to (1/2pi) int_0^{2pi} f dxi1.
        let m = ChartedManifold::hopf_sphere();
        let g = quadrature_grid(&m, &[32, 6, 10]).unwrap();
        for f in [
            (|x: f64| (x.cos() + 2.0).powi(3)) as fn(f64) -> f64,
            |x: f64| (0.5 * x.sin()).exp(),
        ] {
            let vals: Vec<f64> = g.nodes.iter().map(|p| f(p.coords[0])).collect();
            let line = crate::numeric::gl_integrate(0.0, TAU, 64, f) / TAU;
            assert!((g.mean(&vals) - line).abs() < 1e-8);
        }
    }

    #[test]
    fn darboux_grid_covers_box_uniformly() {
        let m = ChartedManifold::darboux(2);
        let g = quadrature_grid(&m, &[4, 4, 4]).unwrap();
        assert_eq!(g.nodes.len(), 64);
        let total: f64 = g.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // mean of z over a symmetric box vanishes
        let vals: Vec<f64> = g.nodes.iter().map(|p| p.coords[2]).collect();
        assert!(g.mean(&vals).abs() < 1e-12);
    }

    #[test]
    fn coarse_resolution_rejected() {
        let m = ChartedManifold::darboux(2);
        assert!(matches!(
            quadrature_grid(&m, &[3, 4, 4]),
            Err(ContactError::ResolutionTooCoarse(_))
        ));
    }

    #[test]
    fn wrapping_and_distance() {
        let m = ChartedManifold::hopf_sphere();
        let a = Point::new(vec![0.1, 6.2, 0.8]);
        let b = Point::new(vec![TAU - 0.1, 0.0, 0.8]);
        // angular distance across the wrap point
        let d = m.distance(&a, &b);
        let expect = (0.2f64.powi(2) + (TAU - 6.2).powi(2)).sqrt();
        assert!((d - expect).abs() < 1e-12);
        let w = Point::new(vec![-0.5, TAU + 0.25, 0.3]).wrapped(&m);
        assert!((w.coords[0] - (TAU - 0.5)).abs() < 1e-12);
        assert!((w.coords[1] - 0.25).abs() < 1e-12);
    }
}
