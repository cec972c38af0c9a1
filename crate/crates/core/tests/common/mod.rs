//! Independent oracles shared by the integration and acceptance suites.
//!
//! Everything here recomputes expected values by routes disjoint from the
//! library implementation: persistent Betti numbers by Gaussian elimination
//! over F2 rank functions, Wasserstein by exhaustive matching, singular
//! values by a symmetric Jacobi eigensolver on the Gram matrix.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use toponav_core::topology::PersistencePair;

/// Rank of a set of F2 column vectors given as bitmasks.
pub fn rank_f2(cols: &[u64]) -> usize {
    let mut pivots: Vec<(u64, u32)> = Vec::new();
    for &col in cols {
        let mut c = col;
        for &(mask, bit) in &pivots {
            if c & (1u64 << bit) != 0 {
                c ^= mask;
            }
        }
        if c != 0 {
            pivots.push((c, c.trailing_zeros()));
        }
    }
    pivots.len()
}

/// Kernel basis of an F2 matrix whose columns are bitmasks; each kernel
/// vector is returned as a bitmask over column indices.
pub fn kernel_f2(cols: &[u64]) -> Vec<u64> {
    assert!(cols.len() <= 64, "kernel oracle limited to 64 columns");
    let mut pivots: Vec<(u64, u64, u32)> = Vec::new(); // (value, combo, pivot bit)
    let mut kernel = Vec::new();
    for (j, &col) in cols.iter().enumerate() {
        let mut c = col;
        let mut combo = 1u64 << j;
        for &(mask, cmb, bit) in &pivots {
            if c & (1u64 << bit) != 0 {
                c ^= mask;
                combo ^= cmb;
            }
        }
        if c == 0 {
            kernel.push(combo);
        } else {
            pivots.push((c, combo, c.trailing_zeros()));
        }
    }
    kernel
}

/// Persistence of a point cloud recomputed from scratch: homology ranks at
/// every critical scale by F2 Gaussian elimination, pair multiplicities by
/// inclusion-exclusion of persistent Betti numbers. Deaths of classes still
/// alive at the end are clamped to `eps_max`. Zero-persistence pairs are
/// invisible to rank functions and therefore absent.
pub fn oracle_diagram(points: &[Vec<f64>], eps_max: f64) -> Vec<(u8, f64, f64)> {
    let n = points.len();
    assert!(n <= 8, "oracle sized for tiny clouds");
    let dist = |i: usize, j: usize| -> f64 {
        points[i]
            .iter()
            .zip(&points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };

    // Global edge and triangle tables.
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(i, j);
            if d <= eps_max {
                edges.push((i, j, d));
            }
        }
    }
    let edge_index = |a: usize, b: usize| edges.iter().position(|&(i, j, _)| i == a && j == b);
    let mut triangles: Vec<(u64, f64)> = Vec::new(); // (edge mask, value)
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let (dij, dik, djk) = (dist(i, j), dist(i, k), dist(j, k));
                let val = dij.max(dik).max(djk);
                if val <= eps_max {
                    let mask = (1u64 << edge_index(i, j).unwrap())
                        | (1u64 << edge_index(i, k).unwrap())
                        | (1u64 << edge_index(j, k).unwrap());
                    triangles.push((mask, val));
                }
            }
        }
    }

    // Critical scales.
    let mut crit: Vec<f64> = std::iter::once(0.0)
        .chain(edges.iter().map(|e| e.2))
        .chain(triangles.iter().map(|t| t.1))
        .collect();
    crit.sort_by(f64::total_cmp);
    crit.dedup();
    let m = crit.len();

    // Vertex-space columns of the edge boundary, per scale.
    let d1_cols = |scale: f64| -> Vec<u64> {
        edges
            .iter()
            .filter(|e| e.2 <= scale)
            .map(|&(i, j, _)| (1u64 << i) | (1u64 << j))
            .collect()
    };
    // beta0 is independent of the birth scale: all components born at 0.
    let beta0: Vec<usize> = crit.iter().map(|&s| n - rank_f2(&d1_cols(s))).collect();

    // Kernel of the edge boundary per scale, as masks over global edge
    // indices. Inactive edges never appear in combinations because only
    // active columns are eliminated; remap combos into global indexing.
    let kernel_at: Vec<Vec<u64>> = crit
        .iter()
        .map(|&s| {
            let active: Vec<usize> =
                (0..edges.len()).filter(|&e| edges[e].2 <= s).collect();
            let cols: Vec<u64> = active
                .iter()
                .map(|&e| (1u64 << edges[e].0) | (1u64 << edges[e].1))
                .collect();
            kernel_f2(&cols)
                .into_iter()
                .map(|combo| {
                    let mut global = 0u64;
                    for (local, &e) in active.iter().enumerate() {
                        if combo & (1u64 << local) != 0 {
                            global |= 1u64 << e;
                        }
                    }
                    global
                })
                .collect()
        })
        .collect();

    let d2_at: Vec<Vec<u64>> = crit
        .iter()
        .map(|&s| triangles.iter().filter(|t| t.1 <= s).map(|t| t.0).collect())
        .collect();
    let d2_rank: Vec<usize> = d2_at.iter().map(|cols| rank_f2(cols)).collect();

    // Persistent beta_1 for born-by crit[i], alive-after crit[j].
    let beta1 = |i: usize, j: usize| -> i64 {
        let mut cols = kernel_at[i].clone();
        cols.extend_from_slice(&d2_at[j]);
        rank_f2(&cols) as i64 - d2_rank[j] as i64
    };

    let mut out: Vec<(u8, f64, f64)> = Vec::new();

    // Dimension 0: births at 0, deaths where components merge.
    for j in 1..m {
        for _ in 0..(beta0[j - 1] - beta0[j]) {
            out.push((0, 0.0, crit[j]));
        }
    }
    for _ in 0..beta0[m - 1] {
        out.push((0, 0.0, eps_max));
    }

    // Dimension 1 by inclusion-exclusion over the critical grid.
    let mut b1 = vec![vec![0i64; m]; m];
    for i in 0..m {
        for j in i..m {
            b1[i][j] = beta1(i, j);
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let with_prev_birth = if i == 0 { 0 } else { b1[i - 1][j - 1] - b1[i - 1][j] };
            let mult = (b1[i][j - 1] - b1[i][j]) - with_prev_birth;
            assert!(mult >= 0, "negative multiplicity at ({i},{j})");
            for _ in 0..mult {
                out.push((1, crit[i], crit[j]));
            }
        }
    }
    // Essential 1-cycles, clamped.
    for i in 0..m {
        let with_prev = if i == 0 { 0 } else { b1[i - 1][m - 1] };
        let mult = b1[i][m - 1] - with_prev;
        for _ in 0..mult {
            out.push((1, crit[i], eps_max));
        }
    }

    sort_triples(&mut out);
    out
}

pub fn sort_triples(v: &mut [(u8, f64, f64)]) {
    v.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });
}

/// Exhaustive minimum over all augmented matchings: the Wasserstein-2
/// oracle for tiny diagrams.
pub fn exhaustive_wasserstein2(a: &[PersistencePair], b: &[PersistencePair]) -> f64 {
    let cost = toponav_core::diagram_metrics::augmented_cost_matrix(a, b);
    let size = cost.len();
    if size == 0 {
        return 0.0;
    }
    assert!(size <= 9, "exhaustive oracle sized for tiny diagrams");
    fn recurse(cost: &[Vec<f64>], row: usize, used: u32, acc: f64, best: &mut f64) {
        if row == cost.len() {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        if acc >= *best {
            return;
        }
        for col in 0..cost.len() {
            if used & (1 << col) == 0 {
                recurse(cost, row + 1, used | (1 << col), acc + cost[row][col], best);
            }
        }
    }
    let mut best = f64::INFINITY;
    recurse(&cost, 0, 0, 0.0, &mut best);
    best.max(0.0).sqrt()
}

/// Singular values of a `t x d` matrix through the Gram route: eigenvalues
/// of A^T A by cyclic two-sided Jacobi, descending.
pub fn gram_singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    let mut g = vec![vec![0.0f64; d]; d];
    for (i, gi) in g.iter_mut().enumerate() {
        for (j, gij) in gi.iter_mut().enumerate() {
            *gij = rows.iter().map(|r| r[i] * r[j]).sum();
        }
    }
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off += g[p][q] * g[p][q];
            }
        }
        if off.sqrt() < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                if g[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (2.0 * g[p][q]).atan2(g[q][q] - g[p][p]);
                let (s, c) = theta.sin_cos();
                for k in 0..d {
                    let (gkp, gkq) = (g[k][p], g[k][q]);
                    g[k][p] = c * gkp - s * gkq;
                    g[k][q] = s * gkp + c * gkq;
                }
                for k in 0..d {
                    let (gpk, gqk) = (g[p][k], g[q][k]);
                    g[p][k] = c * gpk - s * gqk;
                    g[q][k] = s * gpk + c * gqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..d).map(|i| g[i][i].max(0.0).sqrt()).collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig
}

/// Random point cloud in a box, uniform coordinates.
pub fn random_cloud(rng: &mut ChaCha8Rng, max_points: usize, span: f64, dim: usize) -> Vec<Vec<f64>> {
    let n = rng.gen_range(1..=max_points);
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-span..span)).collect())
        .collect()
}

/// Random diagram of up to `max_pairs` dimension-1 pairs.
pub fn random_diagram(rng: &mut ChaCha8Rng, max_pairs: usize) -> Vec<PersistencePair> {
    let n = rng.gen_range(0..=max_pairs);
    (0..n)
        .map(|_| {
            let birth = rng.gen_range(0.0..3.0);
            let death = birth + rng.gen_range(0.0..2.0);
            PersistencePair { birth, death }
        })
        .collect()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
