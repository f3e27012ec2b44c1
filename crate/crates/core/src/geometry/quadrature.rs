use super::{sphere_area, OddDimension, MAX_DIM};
use crate::error::{Error, Result};
use crate::sum::compensated_sum;
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
///
/// Nodes are computed for one half and mirrored, so the rule is exactly
/// symmetric.
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(count >= 1);
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let nf = count as f64;
    for i in 0..count.div_ceil(2) {
        // i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(count, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(count, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[count - 1 - i] = x;
        nodes[i] = -x;
        weights[count - 1 - i] = w;
        weights[i] = w;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule for the weight `√(1 − t²)` on `[-1, 1]` (Chebyshev, second kind).
fn gauss_chebyshev_u(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let h = PI / (count as f64 + 1.0);
    for i in 0..count.div_ceil(2) {
        let a = (i as f64 + 1.0) * h;
        let t = a.cos();
        let w = h * a.sin().powi(2);
        nodes[count - 1 - i] = t;
        nodes[i] = -t;
        weights[count - 1 - i] = w;
        weights[i] = w;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }
    (nodes, weights)
}

/// One-dimensional quadrature on `[lo, hi]`, composite Gauss–Legendre.
#[derive(Clone, Debug)]
pub struct RadialRule {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Gauss points per panel; each panel integrates degree `2·order − 1` exactly.
    pub order: usize,
}

impl RadialRule {
    pub fn gauss_legendre(lo: f64, hi: f64, order: usize) -> Result<Self> {
        Self::composite(lo, hi, order, 1)
    }

    pub fn composite(lo: f64, hi: f64, order: usize, panels: usize) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "radial interval [{lo}, {hi}] is empty or not finite"
            )));
        }
        if order == 0 || panels == 0 {
            return Err(Error::InvalidParameter("radial rule needs at least one node".into()));
        }
        let (x, w) = gauss_legendre(order);
        let width = (hi - lo) / panels as f64;
        let mut nodes = Vec::with_capacity(order * panels);
        let mut weights = Vec::with_capacity(order * panels);
        for p in 0..panels {
            let a = lo + p as f64 * width;
            let b = if p + 1 == panels { hi } else { a + width };
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + half * xi);
                weights.push(half * wi);
            }
        }
        Ok(RadialRule { lo, hi, nodes, weights, order })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        compensated_sum(self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)))
    }
}

#[derive(Clone, Debug)]
enum SphereTree {
    /// `S^1`: uniform angles `2π(k + ½)/count`.
    Circle { count: usize },
    /// `S^{d−1}`, `d ≥ 3`: last coordinate `t` from a 1-D Gauss rule for the
    /// weight `(1 − t²)^{(d−3)/2}`, remaining coordinates `√(1 − t²)·ω`.
    Zonal { t: Vec<f64>, tw: Vec<f64>, sub: Box<SphereTree>, sub_count: usize },
}

impl SphereTree {
    fn build(d: usize, level: usize) -> SphereTree {
        if d == 2 {
            return SphereTree::Circle { count: 2 * level };
        }
        let (t, mut tw) = if d % 2 == 1 {
            let j = (d - 3) / 2;
            let (t, w) = gauss_legendre(level + j);
            let w: Vec<f64> = t.iter().zip(&w).map(|(x, w)| w * (1.0 - x * x).powi(j as i32)).collect();
            (t, w)
        } else {
            let j = (d - 4) / 2;
            let (t, w) = gauss_chebyshev_u(level + j);
            let w: Vec<f64> = t.iter().zip(&w).map(|(x, w)| w * (1.0 - x * x).powi(j as i32)).collect();
            (t, w)
        };
        // mirror weights exactly
        let k = tw.len();
        for i in 0..k / 2 {
            tw[k - 1 - i] = tw[i];
        }
        let sub = SphereTree::build(d - 1, level);
        let sub_count = sub.count();
        SphereTree::Zonal { t, tw, sub: Box::new(sub), sub_count }
    }

    fn count(&self) -> usize {
        match self {
            SphereTree::Circle { count } => *count,
            SphereTree::Zonal { t, sub_count, .. } => t.len() * sub_count,
        }
    }

    /// Appends nodes (each `d` coordinates) and weights.
    fn emit(&self, d: usize, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
        match self {
            SphereTree::Circle { count } => {
                let half = count / 2;
                let step = 2.0 * PI / *count as f64;
                let w = step;
                let mut first = Vec::with_capacity(half);
                for k in 0..half {
                    let a = step * (k as f64 + 0.5);
                    first.push((a.cos(), a.sin()));
                }
                for &(c, s) in &first {
                    nodes.extend_from_slice(&[c, s]);
                    weights.push(w);
                }
                for &(c, s) in &first {
                    nodes.extend_from_slice(&[-c, -s]);
                    weights.push(w);
                }
            }
            SphereTree::Zonal { t, tw, sub, .. } => {
                let mut sub_nodes = Vec::new();
                let mut sub_weights = Vec::new();
                sub.emit(d - 1, &mut sub_nodes, &mut sub_weights);
                for (ti, wi) in t.iter().zip(tw) {
                    let rho = (1.0 - ti * ti).sqrt();
                    for (j, sw) in sub_weights.iter().enumerate() {
                        for c in &sub_nodes[j * (d - 1)..(j + 1) * (d - 1)] {
                            nodes.push(rho * c);
                        }
                        nodes.push(*ti);
                        weights.push(wi * sw);
                    }
                }
            }
        }
    }

    fn antipode(&self, idx: usize) -> usize {
        match self {
            SphereTree::Circle { count } => (idx + count / 2) % count,
            SphereTree::Zonal { t, sub, sub_count, .. } => {
                let i = idx / sub_count;
                let j = idx % sub_count;
                (t.len() - 1 - i) * sub_count + sub.antipode(j)
            }
        }
    }

    /// Tensor Lagrange interpolation weights at the unit vector `y` (length `d`).
    fn stencil(&self, d: usize, y: &[f64], out: &mut SphereStencil, base: usize, factor: f64) {
        match self {
            SphereTree::Circle { count } => {
                let step = 2.0 * PI / *count as f64;
                let mut a = y[1].atan2(y[0]);
                if a < 0.0 {
                    a += 2.0 * PI;
                }
                // angular position measured in grid units from node 0
                let p = a / step - 0.5;
                let k0 = p.floor() as i64 - 1;
                let xs: [f64; 4] = [0.0, 1.0, 2.0, 3.0];
                let local = p - k0 as f64;
                let lw = lagrange_weights(&xs, local);
                for (q, w) in lw.iter().enumerate() {
                    let k = (k0 + q as i64).rem_euclid(*count as i64) as usize;
                    // nodes k ≥ half negate node k − half, which puts every
                    // node k at angle step·(k + ½)
                    out.push(base + k, factor * w);
                }
            }
            SphereTree::Zonal { t, sub, sub_count, .. } => {
                let tv = y[d - 1].clamp(-1.0, 1.0);
                let nt = t.len();
                let width = nt.min(4);
                let above = t.partition_point(|&x| x < tv);
                let start = above.saturating_sub(width / 2).min(nt - width);
                let xs = &t[start..start + width];
                let lw = lagrange_weights(xs, tv);
                let mut sub_y = [0.0; MAX_DIM];
                let rho = (1.0 - tv * tv).max(0.0).sqrt();
                if rho > 1e-12 {
                    for i in 0..d - 1 {
                        sub_y[i] = y[i] / rho;
                    }
                } else {
                    sub_y[0] = 1.0;
                }
                for (q, w) in lw.iter().enumerate() {
                    sub.stencil(d - 1, &sub_y[..d - 1], out, base + (start + q) * sub_count, factor * w);
                }
            }
        }
    }
}

fn lagrange_weights(xs: &[f64], x: f64) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            let mut w = 1.0;
            for (j, xj) in xs.iter().enumerate() {
                if j != i {
                    w *= (x - xj) / (xs[i] - xj);
                }
            }
            w
        })
        .collect()
}

/// Node indices and weights of an angular interpolation stencil.
#[derive(Clone, Debug, Default)]
pub struct SphereStencil {
    pub entries: Vec<(usize, f64)>,
}

impl SphereStencil {
    fn push(&mut self, idx: usize, w: f64) {
        self.entries.push((idx, w));
    }
}

/// A product quadrature rule on the unit sphere `S^{d−1} ⊂ ℝ^d`.
///
/// Every rule contains the antipode of each of its nodes, with equal weight.
#[derive(Clone, Debug)]
pub struct SphereQuadrature {
    ambient: usize,
    level: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    exactness_degree: usize,
    tree: SphereTree,
    antipodes: Vec<usize>,
}

/// Product rule on `S^{n−1}` for an odd dimension `n`.
pub fn build_sphere_quadrature(dim: OddDimension, level: usize) -> Result<SphereQuadrature> {
    SphereQuadrature::product(dim.n(), level)
}

impl SphereQuadrature {
    /// Product rule on `S^{d−1}` for any ambient dimension `d ≥ 2`.
    ///
    /// For `d = 3` this is `level` Gauss–Legendre points in the polar cosine
    /// times `2·level` uniform azimuths.
    pub fn product(ambient: usize, level: usize) -> Result<Self> {
        if level == 0 {
            return Err(Error::InvalidParameter("sphere level must be at least 1".into()));
        }
        if !(2..=MAX_DIM).contains(&ambient) {
            return Err(Error::InvalidDimension(ambient));
        }
        let tree = SphereTree::build(ambient, level);
        let mut nodes = Vec::with_capacity(tree.count() * ambient);
        let mut weights = Vec::with_capacity(tree.count());
        tree.emit(ambient, &mut nodes, &mut weights);
        let antipodes = (0..weights.len()).map(|i| tree.antipode(i)).collect();
        Ok(SphereQuadrature {
            ambient,
            level,
            nodes,
            weights,
            exactness_degree: 2 * level - 1,
            tree,
            antipodes,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    #[inline]
    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.ambient..(i + 1) * self.ambient]
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn antipode(&self, i: usize) -> usize {
        self.antipodes[i]
    }

    /// Surface area the weights are normalised to.
    pub fn area(&self) -> f64 {
        sphere_area(self.ambient)
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        compensated_sum((0..self.len()).map(|i| self.weights[i] * f(self.node(i))))
    }

    /// Index of the node equal to `dir` up to `tol`, if any.
    pub fn find_node(&self, dir: &[f64], tol: f64) -> Option<usize> {
        let mut stencil = SphereStencil::default();
        self.tree.stencil(self.ambient, dir, &mut stencil, 0, 1.0);
        stencil
            .entries
            .iter()
            .map(|&(i, _)| i)
            .chain(0..self.len())
            .find(|&i| {
                let nd = self.node(i);
                nd.iter().zip(dir).all(|(a, b)| (a - b).abs() <= tol)
            })
    }

    /// Angular interpolation stencil at a unit vector (tensor cubic Lagrange
    /// on the product grid; extrapolates near the poles).
    pub fn stencil(&self, dir: &[f64]) -> SphereStencil {
        let mut s = SphereStencil { entries: Vec::with_capacity(4usize.pow(self.ambient as u32 - 1)) };
        self.tree.stencil(self.ambient, dir, &mut s, 0, 1.0);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_exactness() {
        for count in 1..12 {
            let (x, w) = gauss_legendre(count);
            for deg in 0..(2 * count) {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "count {count} deg {deg}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn radial_rule_exactness_on_interval() {
        let r = RadialRule::composite(0.5, 2.0, 5, 3).unwrap();
        for deg in 0..10 {
            let got = r.integrate(|x| x.powi(deg));
            let exact = (2f64.powi(deg + 1) - 0.5f64.powi(deg + 1)) / (deg as f64 + 1.0);
            assert_relative_eq!(got, exact, max_relative = 1e-12);
        }
        assert!(RadialRule::gauss_legendre(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn s2_level_8_matches_examples() {
        let q = build_sphere_quadrature(OddDimension::new(3).unwrap(), 8).unwrap();
        assert_eq!(q.len(), 128);
        let total: f64 = q.weights().iter().sum();
        assert_relative_eq!(total, 4.0 * PI, max_relative = 1e-12);
        assert!(q.integrate(|t| t[0]).abs() < 1e-13);
        assert_relative_eq!(q.integrate(|t| t[2] * t[2]), 4.0 * PI / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn moment_identities_all_dimensions() {
        for d in 2..=7 {
            for level in [2, 3, 6] {
                let q = SphereQuadrature::product(d, level).unwrap();
                let area = sphere_area(d);
                assert_relative_eq!(q.integrate(|_| 1.0), area, max_relative = 1e-12);
                for i in 0..d {
                    assert!(q.integrate(|t| t[i]).abs() < 1e-13);
                    for j in 0..d {
                        let want = if i == j { area / d as f64 } else { 0.0 };
                        assert!((q.integrate(|t| t[i] * t[j]) - want).abs() < 1e-12 * area);
                    }
                }
                for i in 0..q.len() {
                    let nrm: f64 = q.node(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                    assert!((nrm - 1.0).abs() < 1e-14);
                    assert!(q.weight(i) > 0.0);
                }
            }
        }
    }

    #[test]
    fn antipodes_are_exact() {
        for d in [3, 5] {
            let q = SphereQuadrature::product(d, 5).unwrap();
            for i in 0..q.len() {
                let j = q.antipode(i);
                assert_eq!(q.antipode(j), i);
                assert_eq!(q.weight(i), q.weight(j));
                for (a, b) in q.node(i).iter().zip(q.node(j)) {
                    assert_eq!(*a, -*b);
                }
            }
        }
    }

    #[test]
    fn stencil_reproduces_node_values_and_smooth_functions() {
        let q = SphereQuadrature::product(3, 12).unwrap();
        let f = |t: &[f64]| 1.0 + 0.3 * t[0] - 0.2 * t[1] * t[2] + 0.1 * t[2] * t[2];
        let vals: Vec<f64> = (0..q.len()).map(|i| f(q.node(i))).collect();
        for i in (0..q.len()).step_by(7) {
            let s = q.stencil(q.node(i));
            let v: f64 = s.entries.iter().map(|&(k, w)| w * vals[k]).sum();
            assert_relative_eq!(v, vals[i], max_relative = 1e-12);
        }
        let dir = [0.48, -0.6, 0.64];
        let s = q.stencil(&dir);
        let v: f64 = s.entries.iter().map(|&(k, w)| w * vals[k]).sum();
        assert!((v - f(&dir)).abs() < 2e-3);
        assert_eq!(q.find_node(q.node(17), 1e-12), Some(17));
        assert_eq!(q.find_node(&dir, 1e-9), None);
    }
}
