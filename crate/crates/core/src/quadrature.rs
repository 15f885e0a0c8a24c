//! Gauss–Legendre rules, tensor grids and kink-aware product integration weights.

use std::f64::consts::PI;

use crate::error::{OgpError, Result};
use crate::kernel::Family;

/// Default cap on the number of tensor-grid nodes.
pub const DEFAULT_NODE_BUDGET: usize = 1_000_000;

/// Nodes and weights of an `n`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n
            let mut x = -((PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = x;
            weights[i] = w;
            nodes[n - 1 - i] = -x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    /// `int_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// `int_{-1}^{1} f`, split at `kink` so that each panel is smooth.
    pub fn integrate_split(&self, kink: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let k = kink.clamp(-1.0, 1.0);
        let mut s = 0.0;
        if k > -1.0 {
            s += self.integrate(-1.0, k, &mut f);
        }
        if k < 1.0 {
            s += self.integrate(k, 1.0, &mut f);
        }
        s
    }
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Order used when the caller does not pick one: 64 in one dimension, otherwise
/// `max(8, floor(budget^(1/d)))` capped at 64.
pub fn default_order(dim: usize) -> usize {
    if dim <= 1 {
        return 64;
    }
    let root = (DEFAULT_NODE_BUDGET as f64).powf(1.0 / dim as f64);
    // guard against 1e6^(1/3) = 99.999...
    let floor = (root + 1e-9).floor() as usize;
    floor.clamp(8, 64)
}

/// Errors when `order^dim` exceeds `budget`.
pub fn check_budget(order: usize, dim: usize, budget: usize) -> Result<usize> {
    let nodes = (order as f64).powi(dim as i32);
    if nodes > budget as f64 {
        return Err(OgpError::NodeBudget {
            order,
            dim,
            nodes,
            budget,
        });
    }
    Ok(nodes as usize)
}

/// Lagrange interpolation on Gauss–Legendre nodes, used to build product integration
/// weights for integrands `c(x, s) q(s)` where `q` is smooth and `c` may have a kink.
#[derive(Debug, Clone)]
pub struct LagrangeRule {
    pub rule: GaussLegendre,
    bary: Vec<f64>,
    panel: GaussLegendre,
}

impl LagrangeRule {
    pub fn new(order: usize) -> Self {
        let rule = GaussLegendre::new(order);
        let n = rule.len();
        let mut bary = vec![1.0; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    bary[i] /= rule.nodes[i] - rule.nodes[j];
                }
            }
        }
        let scale = bary.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        bary.iter_mut().for_each(|b| *b /= scale);
        let panel = GaussLegendre::new(order + 32);
        LagrangeRule { rule, bary, panel }
    }

    pub fn order(&self) -> usize {
        self.rule.len()
    }

    /// Values of all Lagrange cardinal polynomials at `s` (barycentric form).
    pub fn cardinals(&self, s: f64, out: &mut [f64]) {
        let nodes = &self.rule.nodes;
        if let Some(k) = nodes.iter().position(|&t| t == s) {
            out.iter_mut().for_each(|v| *v = 0.0);
            out[k] = 1.0;
            return;
        }
        let mut denom = 0.0;
        for (i, (&t, &b)) in nodes.iter().zip(&self.bary).enumerate() {
            let q = b / (s - t);
            out[i] = q;
            denom += q;
        }
        out.iter_mut().for_each(|v| *v /= denom);
    }

    /// `v[a] = int_{-1}^{1} c(x, s) l_a(s) ds` for the unit-variance 1-D correlation.
    pub fn kernel_weights(&self, family: Family, psi: f64, x: f64) -> Vec<f64> {
        let n = self.order();
        let mut v = vec![0.0; n];
        let mut card = vec![0.0; n];
        let mut panel = |a: f64, b: f64, v: &mut [f64]| {
            if b <= a {
                return;
            }
            for (s, w) in self.panel.on_interval(a, b) {
                let c = w * family.correlation(x - s, psi);
                self.cardinals(s, &mut card);
                for (vi, li) in v.iter_mut().zip(&card) {
                    *vi += c * li;
                }
            }
        };
        // splitting at x also resolves narrow squared-exponential peaks
        let k = x.clamp(-1.0, 1.0);
        panel(-1.0, k, &mut v);
        panel(k, 1.0, &mut v);
        v
    }

    /// `K[a][b] = int int c(s, t) l_a(s) l_b(t) ds dt`, row-major `n x n`.
    pub fn kernel_matrix(&self, family: Family, psi: f64) -> Vec<f64> {
        let n = self.order();
        let mut k = vec![0.0; n * n];
        let mut card = vec![0.0; n];
        // the inner integral is smooth in t, so a plain outer rule suffices
        for (t, w) in self.panel.on_interval(-1.0, 1.0) {
            let inner = self.kernel_weights(family, psi, t);
            self.cardinals(t, &mut card);
            for a in 0..n {
                let wa = w * inner[a];
                let row = &mut k[a * n..(a + 1) * n];
                for (kb, lb) in row.iter_mut().zip(&card) {
                    *kb += wa * lb;
                }
            }
        }
        // symmetrize away rounding
        for a in 0..n {
            for b in (a + 1)..n {
                let m = 0.5 * (k[a * n + b] + k[b * n + a]);
                k[a * n + b] = m;
                k[b * n + a] = m;
            }
        }
        k
    }
}

/// Tensor-product Gauss–Legendre grid on `[-1, 1]^d`, index order last-dimension-fastest.
#[derive(Debug, Clone)]
pub struct TensorGrid {
    pub dim: usize,
    pub rule: GaussLegendre,
}

impl TensorGrid {
    pub fn new(order: usize, dim: usize, budget: usize) -> Result<Self> {
        check_budget(order, dim, budget)?;
        Ok(TensorGrid {
            dim,
            rule: GaussLegendre::new(order),
        })
    }

    pub fn len(&self) -> usize {
        self.rule.len().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point and weight for flat index `idx`.
    pub fn point(&self, idx: usize, out: &mut [f64]) -> f64 {
        let m = self.rule.len();
        let mut rest = idx;
        let mut w = 1.0;
        for j in (0..self.dim).rev() {
            let a = rest % m;
            rest /= m;
            out[j] = self.rule.nodes[a];
            w *= self.rule.weights[a];
        }
        w
    }

    pub fn points(&self) -> impl Iterator<Item = (Vec<f64>, f64)> + '_ {
        (0..self.len()).map(move |i| {
            let mut p = vec![0.0; self.dim];
            let w = self.point(i, &mut p);
            (p, w)
        })
    }
}

/// Applies `mats[j]` (row-major `m x m`) along every axis of the tensor `data` laid out
/// last-axis-fastest with `m^d` entries: `out[a] = sum_b prod_j M_j[a_j][b_j] data[b]`.
pub fn apply_along_axes(data: &[f64], m: usize, mats: &[&[f64]]) -> Vec<f64> {
    let d = mats.len();
    let mut cur = data.to_vec();
    let mut next = vec![0.0; cur.len()];
    for (axis, mat) in mats.iter().enumerate() {
        let stride = m.pow((d - 1 - axis) as u32);
        let outer = cur.len() / (m * stride);
        for o in 0..outer {
            let base = o * m * stride;
            for s in 0..stride {
                for a in 0..m {
                    let row = &mat[a * m..(a + 1) * m];
                    let mut acc = 0.0;
                    for (b, r) in row.iter().enumerate() {
                        acc += r * cur[base + b * stride + s];
                    }
                    next[base + a * stride + s] = acc;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Contracts every axis of `data` with a vector: `sum_a prod_j v_j[a_j] data[a]`.
pub fn contract_axes(data: &[f64], m: usize, vecs: &[&[f64]]) -> f64 {
    // contract last axis first so the remaining tensor stays contiguous
    let mut cur: Vec<f64> = data.to_vec();
    for v in vecs.iter().rev() {
        let outer = cur.len() / m;
        let mut next = vec![0.0; outer];
        for (o, slot) in next.iter_mut().enumerate() {
            *slot = cur[o * m..(o + 1) * m]
                .iter()
                .zip(v.iter())
                .map(|(a, b)| a * b)
                .sum();
        }
        cur = next;
    }
    cur[0]
}
