//! Exact 1-Wasserstein distances between finite measures with Euclidean cost.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

const WEIGHT_TOL: f64 = 1e-12;
const FLOW_EPS: f64 = 1e-14;

/// Finitely supported probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<DVector<f64>>,
    weights: Vec<f64>,
    uniform: bool,
}

fn check_atoms(atoms: &[DVector<f64>]) -> Result<()> {
    let first = atoms
        .first()
        .ok_or_else(|| Error::InvalidModel("measure needs at least one atom".into()))?;
    for a in atoms {
        check_dim(first.len(), a.len())?;
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("atoms must be finite".into()));
        }
    }
    Ok(())
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        check_atoms(&atoms)?;
        check_dim(atoms.len(), weights.len())?;
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidModel("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidModel(format!("weights sum to {total}, not 1")));
        }
        let uniform = weights.iter().all(|w| *w == weights[0]);
        Ok(Self {
            atoms,
            weights,
            uniform,
        })
    }

    /// Equal weights `1/len`.
    pub fn uniform(atoms: Vec<DVector<f64>>) -> Result<Self> {
        check_atoms(&atoms)?;
        let w = 1.0 / atoms.len() as f64;
        Ok(Self {
            weights: vec![w; atoms.len()],
            atoms,
            uniform: true,
        })
    }

    pub fn atoms(&self) -> &[DVector<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// The push-forward under `x ↦ x + shift`.
    pub fn translated(&self, shift: &DVector<f64>) -> Result<Self> {
        check_dim(self.dim(), shift.len())?;
        Ok(Self {
            atoms: self.atoms.iter().map(|a| a + shift).collect(),
            weights: self.weights.clone(),
            uniform: self.uniform,
        })
    }
}

fn cost_matrix(p: &DiscreteMeasure, q: &DiscreteMeasure) -> DMatrix<f64> {
    DMatrix::from_fn(p.len(), q.len(), |i, j| (&p.atoms[i] - &q.atoms[j]).norm())
}

/// Minimum-cost perfect matching on a square cost matrix by shortest
/// augmenting paths with row/column potentials. Returns the column assigned
/// to each row and the total cost.
pub fn assignment(cost: &DMatrix<f64>) -> Result<(Vec<usize>, f64)> {
    let n = cost.nrows();
    check_dim(n, cost.ncols())?;
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    // 1-based internals; column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        col_of_row[row_of[j] - 1] = j - 1;
    }
    let total = col_of_row.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    Ok((col_of_row, total))
}

/// Optimal transport cost for general weights by successive shortest paths
/// on the bipartite residual graph.
fn min_cost_flow(cost: &DMatrix<f64>, supply: &[f64], demand: &[f64]) -> f64 {
    let (m, n) = cost.shape();
    // nodes: 0 = source, 1..=m supplies, m+1..=m+n demands, m+n+1 = sink
    let source = 0;
    let sink = m + n + 1;
    let nodes = m + n + 2;
    let mut flow = DMatrix::<f64>::zeros(m, n);
    let mut sent = vec![0.0; m];
    let mut received = vec![0.0; n];
    let mut pot = vec![0.0; nodes];
    let mut remaining: f64 = supply.iter().sum::<f64>().min(demand.iter().sum());

    while remaining > FLOW_EPS {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev = vec![usize::MAX; nodes];
        let mut done = vec![false; nodes];
        dist[source] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for (k, &dk) in dist.iter().enumerate() {
                if !done[k] && dk < best {
                    best = dk;
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            let mut relax = |w: usize, c: f64| {
                let nd = dist[u] + (c + pot[u] - pot[w]).max(0.0);
                if nd < dist[w] {
                    dist[w] = nd;
                    prev[w] = u;
                }
            };
            if u == source {
                for i in 0..m {
                    if supply[i] - sent[i] > FLOW_EPS {
                        relax(1 + i, 0.0);
                    }
                }
            } else if u <= m {
                let i = u - 1;
                for j in 0..n {
                    relax(m + 1 + j, cost[(i, j)]);
                }
                if sent[i] > FLOW_EPS {
                    relax(source, 0.0);
                }
            } else if u < sink {
                let j = u - m - 1;
                if demand[j] - received[j] > FLOW_EPS {
                    relax(sink, 0.0);
                }
                for i in 0..m {
                    if flow[(i, j)] > FLOW_EPS {
                        relax(1 + i, -cost[(i, j)]);
                    }
                }
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        for k in 0..nodes {
            pot[k] += dist[k].min(dist[sink]);
        }
        // bottleneck along the path
        let mut push = remaining;
        let mut w = sink;
        while w != source {
            let u = prev[w];
            let cap = if u == source {
                supply[w - 1] - sent[w - 1]
            } else if w == sink {
                demand[u - m - 1] - received[u - m - 1]
            } else if u <= m && w > m {
                f64::INFINITY
            } else if u > m && w <= m && w != source {
                flow[(w - 1, u - m - 1)]
            } else {
                sent[u - 1]
            };
            push = push.min(cap);
            w = u;
        }
        let mut w = sink;
        while w != source {
            let u = prev[w];
            if u == source {
                sent[w - 1] += push;
            } else if w == sink {
                received[u - m - 1] += push;
            } else if u <= m && w > m {
                flow[(u - 1, w - m - 1)] += push;
            } else if u > m && w <= m && w != source {
                flow[(w - 1, u - m - 1)] -= push;
            } else {
                sent[u - 1] -= push;
            }
            w = u;
        }
        remaining -= push;
    }
    flow.component_mul(cost).sum()
}

/// Exact `W1(P, Q)` with Euclidean ground cost.
pub fn w1_distance(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    if p.len() == 1 || q.len() == 1 {
        let (single, other) = if p.len() == 1 { (p, q) } else { (q, p) };
        return Ok(other
            .atoms
            .iter()
            .zip(&other.weights)
            .map(|(a, w)| w * (a - &single.atoms[0]).norm())
            .sum());
    }
    let cost = cost_matrix(p, q);
    if p.is_uniform() && q.is_uniform() && p.len() == q.len() {
        let (_, total) = assignment(&cost)?;
        return Ok(total / p.len() as f64);
    }
    Ok(min_cost_flow(&cost, &p.weights, &q.weights))
}

/// `W1` on the real line as `∫ |F_P − F_Q|`; other dimensions fall back to
/// [`w1_distance`].
pub fn w1_distance_1d(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    if p.dim() != 1 {
        return w1_distance(p, q);
    }
    let mut events: Vec<(f64, f64)> = p
        .atoms
        .iter()
        .zip(&p.weights)
        .map(|(a, w)| (a[0], *w))
        .chain(q.atoms.iter().zip(&q.weights).map(|(a, w)| (a[0], -*w)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gap = 0.0;
    let mut total = 0.0;
    for pair in events.windows(2) {
        gap += pair[0].1;
        total += gap.abs() * (pair[1].0 - pair[0].0);
    }
    Ok(total)
}
