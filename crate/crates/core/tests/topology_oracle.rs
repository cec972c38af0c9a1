//! Cross-validation of the persistence pipeline against rank-based oracles.

mod common;

use common::{oracle_diagram, random_cloud, seeded, sort_triples};
use rand::Rng;

use toponav_core::topology::{
    build_vr_filtration, compute_persistence, connected_components, reduce_boundary_matrix,
    ComponentEnd, EmbeddedCloud, Filtration, PersistenceDiagram, Simplex,
};

fn cloud_of(points: &[Vec<f64>]) -> EmbeddedCloud {
    EmbeddedCloud::from_points(points.to_vec(), (0, points.len() as u64)).unwrap()
}

/// Flattens a diagram into (dim, birth, death) triples with essential
/// components clamped to `eps_max` and zero-persistence pairs dropped, the
/// same view the rank oracle produces.
fn diagram_triples(pd: &PersistenceDiagram, eps_max: f64) -> Vec<(u8, f64, f64)> {
    let mut out = Vec::new();
    for p in &pd.dim0_pairs {
        let death = match p.death {
            ComponentEnd::Merged(d) => d,
            ComponentEnd::Essential => eps_max,
        };
        if death > p.birth {
            out.push((0, p.birth, death));
        }
    }
    for p in &pd.dim1_pairs {
        if p.death > p.birth {
            out.push((1, p.birth, p.death));
        }
    }
    sort_triples(&mut out);
    out
}

fn assert_matches_oracle(points: &[Vec<f64>], eps_max: f64, tag: &str) {
    let filt = build_vr_filtration(&cloud_of(points), eps_max).unwrap();
    let pd = compute_persistence(&filt).unwrap();
    let got = diagram_triples(&pd, eps_max);
    let mut expected = oracle_diagram(points, eps_max);
    expected.retain(|&(_, b, d)| d > b);
    assert_eq!(
        got.len(),
        expected.len(),
        "{tag}: pair count mismatch\n got {got:?}\n exp {expected:?}"
    );
    for (g, e) in got.iter().zip(&expected) {
        assert_eq!(g.0, e.0, "{tag}: dim mismatch {got:?} vs {expected:?}");
        assert!(
            (g.1 - e.1).abs() < 1e-12 && (g.2 - e.2).abs() < 1e-12,
            "{tag}: pair mismatch {g:?} vs {e:?}"
        );
    }
}

#[test]
fn oracle_equivalence_random_clouds() {
    let mut rng = seeded(0xA11CE);
    for case in 0..60 {
        let points = random_cloud(&mut rng, 8, 2.5, 3);
        assert_matches_oracle(&points, 5.0, &format!("cloud {case}"));
    }
}

#[test]
fn oracle_equivalence_duplicate_points() {
    // Duplicates produce zero-persistence pairs, dropped on both sides.
    let points = vec![
        vec![0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0],
        vec![1.0, 0.0, 0.0],
        vec![1.0, 1.0, 0.0],
        vec![0.0, 1.0, 0.0],
    ];
    assert_matches_oracle(&points, 5.0, "duplicates");
}

#[test]
fn oracle_equivalence_tight_eps() {
    // Small eps_max exercises essential classes of both dimensions.
    let mut rng = seeded(0xBEEF);
    for case in 0..40 {
        let points = random_cloud(&mut rng, 8, 2.5, 3);
        assert_matches_oracle(&points, 1.5, &format!("tight {case}"));
    }
}

#[test]
fn boundary_of_boundary_is_zero() {
    let mut rng = seeded(0xD00D);
    for _ in 0..25 {
        let points = random_cloud(&mut rng, 30, 3.0, 3);
        let filt = build_vr_filtration(&cloud_of(&points), 5.0).unwrap();
        assert_dd_zero(&filt);
    }
}

fn assert_dd_zero(filt: &Filtration) {
    // Apply the boundary operator twice over F2 by symmetric difference of
    // vertex-pair faces; every triangle must cancel completely.
    for s in filt.simplices().iter().filter(|s| s.dim == 2) {
        let mut vertex_count = std::collections::HashMap::new();
        for edge in s.faces() {
            for v in edge.faces() {
                *vertex_count.entry(v.vertices[0]).or_insert(0u32) += 1;
            }
        }
        for (&v, &c) in &vertex_count {
            assert!(c % 2 == 0, "vertex {v} survives d(d(triangle)) in {:?}", s.verts());
        }
    }
}

#[test]
fn euler_characteristic_identity() {
    let mut rng = seeded(0xE411);
    for case in 0..25 {
        let points = random_cloud(&mut rng, 30, 3.0, 3);
        let filt = build_vr_filtration(&cloud_of(&points), 5.0).unwrap();
        let reduction = reduce_boundary_matrix(&filt).unwrap();
        let (v, e, t) = (
            filt.count_dim(0) as i64,
            filt.count_dim(1) as i64,
            filt.count_dim(2) as i64,
        );
        let (b0, b1, b2) = (
            reduction.betti(&filt, 0) as i64,
            reduction.betti(&filt, 1) as i64,
            reduction.betti(&filt, 2) as i64,
        );
        assert_eq!(v - e + t, b0 - b1 + b2, "case {case}: V-E+T != b0-b1+b2");
    }
}

#[test]
fn betti0_agrees_with_union_find() {
    let mut rng = seeded(0xC0FFEE);
    for _ in 0..30 {
        let points = random_cloud(&mut rng, 20, 4.0, 3);
        let eps_max = rng.gen_range(0.5..5.0);
        let filt = build_vr_filtration(&cloud_of(&points), eps_max).unwrap();
        let pd = compute_persistence(&filt).unwrap();
        assert_eq!(pd.essential_components(), connected_components(&filt, eps_max));
    }
}

#[test]
fn pairing_legality() {
    let mut rng = seeded(0x1E6A1);
    for _ in 0..20 {
        let points = random_cloud(&mut rng, 15, 2.0, 3);
        let eps_max = 4.0;
        let filt = build_vr_filtration(&cloud_of(&points), eps_max).unwrap();
        let pd = compute_persistence(&filt).unwrap();
        let edge_values: Vec<f64> =
            filt.simplices().iter().filter(|s| s.dim == 1).map(|s| s.value).collect();
        let tri_values: Vec<f64> =
            filt.simplices().iter().filter(|s| s.dim == 2).map(|s| s.value).collect();
        for p in &pd.dim1_pairs {
            assert!(p.death >= p.birth);
            assert!(
                edge_values.iter().any(|&v| v == p.birth),
                "dim1 birth {} is not an edge value",
                p.birth
            );
            assert!(
                p.death == eps_max || tri_values.iter().any(|&v| v == p.death),
                "dim1 death {} is neither a triangle value nor eps_max",
                p.death
            );
        }
        for p in &pd.dim0_pairs {
            if let ComponentEnd::Merged(d) = p.death {
                assert!(d >= p.birth);
                assert!(edge_values.iter().any(|&v| v == d));
            }
        }
    }
}

#[test]
fn permutation_invariance() {
    let mut rng = seeded(0x5EED);
    for _ in 0..15 {
        let mut points = random_cloud(&mut rng, 12, 2.0, 3);
        if points.len() < 2 {
            continue;
        }
        let filt = build_vr_filtration(&cloud_of(&points), 5.0).unwrap();
        let base = diagram_triples(&compute_persistence(&filt).unwrap(), 5.0);
        // Deterministic shuffle.
        for i in (1..points.len()).rev() {
            let j = rng.gen_range(0..=i);
            points.swap(i, j);
        }
        let filt2 = build_vr_filtration(&cloud_of(&points), 5.0).unwrap();
        let shuffled = diagram_triples(&compute_persistence(&filt2).unwrap(), 5.0);
        assert_eq!(base.len(), shuffled.len());
        for (a, b) in base.iter().zip(&shuffled) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-12 && (a.2 - b.2).abs() < 1e-12);
        }
    }
}

#[test]
fn reduction_rejects_missing_face() {
    // A triangle with a face never inserted must be a structural error at
    // the filtration layer already.
    let simplices = vec![
        Simplex::vertex(0),
        Simplex::vertex(1),
        Simplex::vertex(2),
        Simplex::edge(0, 1, 1.0),
        Simplex::edge(0, 2, 1.0),
        Simplex::triangle(0, 1, 2, 1.0),
    ];
    assert!(Filtration::from_simplices(simplices, 5.0).is_err());
}
