//! Distances and functional summaries on persistence diagrams: 2-Wasserstein
//! via exact optimal assignment, discretized persistence landscapes, and the
//! combined signature distance.
//!
//! Diagrams of unequal cardinality are compared on the augmented
//! `(n+m) x (n+m)` cost matrix where every point may instead match its own
//! diagonal projection; diagonal-to-diagonal matches are free.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::PersistencePair;
use crate::tslc::TopologicalSignature;

/// Solves the square assignment problem exactly (shortest augmenting paths,
/// O(n^3)). Returns, for each row, its assigned column.
pub fn solve_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));

    // 1-indexed potentials; column 0 is the virtual root.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut assigned_row = vec![0usize; n + 1]; // row assigned to column (0 = none)

    for i in 1..=n {
        let mut j0 = 0usize;
        assigned_row[0] = i;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut prev = vec![0usize; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = assigned_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    prev[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if assigned_row[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path.
        while j0 != 0 {
            let j1 = prev[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
        }
    }

    let mut result = vec![0usize; n];
    for j in 1..=n {
        if assigned_row[j] > 0 {
            result[assigned_row[j] - 1] = j - 1;
        }
    }
    result
}

/// Squared Euclidean distance in the birth-death plane.
fn pair_cost(a: &PersistencePair, b: &PersistencePair) -> f64 {
    (a.birth - b.birth).powi(2) + (a.death - b.death).powi(2)
}

/// Squared distance from a pair to its diagonal projection
/// `((b+d)/2, (b+d)/2)`.
fn diagonal_cost(p: &PersistencePair) -> f64 {
    let half_gap = (p.death - p.birth) / 2.0;
    2.0 * half_gap * half_gap
}

/// Builds the augmented cost matrix for two diagrams.
pub fn augmented_cost_matrix(a: &[PersistencePair], b: &[PersistencePair]) -> Vec<Vec<f64>> {
    let (n, m) = (a.len(), b.len());
    let size = n + m;
    let mut cost = vec![vec![0.0; size]; size];
    for (i, pa) in a.iter().enumerate() {
        for (j, pb) in b.iter().enumerate() {
            cost[i][j] = pair_cost(pa, pb);
        }
        for j in m..size {
            cost[i][j] = diagonal_cost(pa);
        }
    }
    for (j, pb) in b.iter().enumerate() {
        for i in n..size {
            cost[i][j] = diagonal_cost(pb);
        }
    }
    cost
}

/// 2-Wasserstein distance between two dimension-1 diagrams (finite pairs
/// only): the square root of the minimal total squared matching cost over
/// the diagonal-augmented assignment.
pub fn wasserstein2(a: &[PersistencePair], b: &[PersistencePair]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let cost = augmented_cost_matrix(a, b);
    let assignment = solve_assignment(&cost);
    // Re-accumulate in row order so equal inputs sum identically.
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    total.max(0.0).sqrt()
}

/// Landscape function value `max_i min(t - b_i, d_i - t)^+` at a point.
pub fn landscape_value(pairs: &[PersistencePair], t: f64) -> f64 {
    pairs
        .iter()
        .map(|p| (t - p.birth).min(p.death - t).max(0.0))
        .fold(0.0, f64::max)
}

/// First persistence landscape discretized on a uniform grid over
/// `[0, eps_max)`: `values[i]` samples `t_i = i * eps_max / G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landscape {
    pub eps_max: f64,
    pub values: Vec<f64>,
}

impl Landscape {
    /// Grid spacing; also the quadrature weight of each sample.
    pub fn spacing(&self) -> f64 {
        self.eps_max / self.values.len() as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.spacing();
        (0..self.values.len()).map(move |i| i as f64 * h)
    }

    /// Text export: `t,value` lines.
    pub fn export(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.grid().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || (lineno == 0 && line == "t,value") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Parse(format!("landscape line {}: {:?}", lineno + 1, line)));
            }
            let t: f64 = fields[0]
                .parse()
                .map_err(|_| Error::Parse(format!("landscape line {}: bad t", lineno + 1)))?;
            let v: f64 = fields[1]
                .parse()
                .map_err(|_| Error::Parse(format!("landscape line {}: bad value", lineno + 1)))?;
            ts.push(t);
            values.push(v);
        }
        if values.len() < 2 {
            return Err(Error::Validation("landscape needs at least 2 samples".into()));
        }
        let h = ts[1] - ts[0];
        Ok(Self { eps_max: h * values.len() as f64, values })
    }
}

/// Samples the landscape of a diagram on `grid_count` points over
/// `[0, eps_max)`.
pub fn landscape(pairs: &[PersistencePair], grid_count: usize, eps_max: f64) -> Result<Landscape> {
    if grid_count < 2 {
        return Err(Error::Validation("grid_count must be >= 2".into()));
    }
    if eps_max <= 0.0 {
        return Err(Error::Validation("eps_max must be > 0".into()));
    }
    let h = eps_max / grid_count as f64;
    let values = (0..grid_count)
        .map(|i| landscape_value(pairs, i as f64 * h))
        .collect();
    Ok(Landscape { eps_max, values })
}

/// Discrete L2 distance between two landscapes on the same grid:
/// `sqrt(sum (a_i - b_i)^2 * h)`.
pub fn landscape_distance(a: &Landscape, b: &Landscape) -> Result<f64> {
    if a.values.len() != b.values.len() || a.eps_max != b.eps_max {
        return Err(Error::Validation(format!(
            "landscape grids differ: {}x[0,{}) vs {}x[0,{})",
            a.values.len(),
            a.eps_max,
            b.values.len(),
            b.eps_max
        )));
    }
    let h = a.spacing();
    let sum: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((sum * h).sqrt())
}

/// Weighted combination of Wasserstein and landscape distances between two
/// signatures.
pub fn combined_distance(
    a: &TopologicalSignature,
    b: &TopologicalSignature,
    w_wasserstein: f64,
    w_landscape: f64,
) -> Result<f64> {
    let w2 = wasserstein2(&a.pd1, &b.pd1);
    let ld = landscape_distance(&a.landscape, &b.landscape)?;
    Ok(w_wasserstein * w2 + w_landscape * ld)
}
