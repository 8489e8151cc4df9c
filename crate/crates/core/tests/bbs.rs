use downsample::bbs::*;
use downsample::blockgrid::{induce_augmented_partition, induce_partition, BlockPartition};
use downsample::concepts::{generate, BooleanFn, Concept, Gate};
use downsample::product_dist::*;
use downsample::rng::{child, stream};
use proptest::prelude::*;

fn partitions(r: usize, d: usize, seed: u64) -> Vec<BlockPartition> {
    let mut rng = stream(seed);
    let induced = induce_partition(&sample_points(&ProductDistribution::gaussian(d), r * 50, &mut rng), r, &mut rng).unwrap();
    vec![BlockPartition::uniform_unit(r, d), induced]
}

#[test]
fn monotone_corner_counts_within_bound() {
    for d in [1, 2] {
        for r in [8, 16] {
            let bound = bbs_bound(&ClassId::Monotone, r, d, 1).unwrap().max_nonconstant;
            for t in 0..100u64 {
                let mut rng = child(r as u64 * 10 + d as u64, t);
                let f = if t % 2 == 0 {
                    generate::monotone_dnf(d, 3, &mut rng)
                } else {
                    generate::monotone_halfspace(d, &mut rng)
                };
                for p in partitions(r, d, t) {
                    let c = corner_oracle_nonconstant(&f, &p).unwrap();
                    assert!(c.count as f64 <= bound, "d={d} r={r} count={}", c.count);
                }
            }
        }
    }
}

#[test]
fn k_alternating_corner_counts_within_bound() {
    for t in 0..100u64 {
        let mut rng = child(5, t);
        let k = 1 + (t as usize % 4);
        let f = generate::staircase(2, k, &mut rng);
        let p = BlockPartition::uniform_unit(16, 2);
        let bound = bbs_bound(&ClassId::KAlternating, 16, 2, k).unwrap().max_nonconstant;
        // the corner test only lower-bounds non-monotone counts, so probe too
        let c = corner_oracle_nonconstant(&f, &p).unwrap().count;
        let q = count_nonconstant_blocks(&f, &p, 64, &mut rng).unwrap().count;
        assert!(c.max(q) as f64 <= bound);
    }
}

#[test]
fn geometric_counts_within_bound() {
    for (d, r) in [(1, 8), (1, 16), (2, 8), (2, 16)] {
        let convex = bbs_bound(&ClassId::Convex, r, d, 1).unwrap().max_nonconstant;
        let half = bbs_bound(&ClassId::Halfspace, r, d, 1).unwrap().max_nonconstant;
        for t in 0..100u64 {
            let mut rng = child(40 + d as u64 * r as u64, t);
            let disk = generate::disk(d, &mut rng);
            let h = generate::halfspace(d, &mut rng);
            for p in partitions(r, d, t) {
                let cd = analytic_nonconstant(&disk, &p).unwrap().unwrap().count;
                assert!(cd as f64 <= convex);
                let ch = analytic_nonconstant(&h, &p).unwrap().unwrap().count;
                assert!(ch as f64 <= half);
                if d == 2 {
                    let tri = generate::triangle(&mut rng);
                    let ct = analytic_nonconstant(&tri, &p).unwrap().unwrap().count;
                    assert!(ct as f64 <= convex);
                }
            }
        }
    }
}

#[test]
fn disk_example_on_uniform_cuts() {
    let p = BlockPartition::uniform_unit(16, 2);
    let disk = Concept::ball(vec![0.5, 0.5], 0.3);
    let exact = analytic_nonconstant(&disk, &p).unwrap().unwrap().count;
    let probe = count_nonconstant_blocks(&disk, &p, 64, &mut stream(1)).unwrap().count;
    assert!(exact <= 64);
    assert!(probe <= exact && probe > 0);
}

#[test]
fn anti_diagonal_band() {
    let p = BlockPartition::uniform_unit(8, 2);
    let f = Concept::halfspace(vec![1.0, 1.0], 1.0);
    let c = corner_oracle_nonconstant(&f, &p).unwrap();
    assert!(c.count <= 16);
    let shape = p.shape();
    for &idx in &c.cells {
        let v = shape.cell(idx);
        // cells touching the line x1 + x2 = 1
        assert!((v[0] + v[1]) as i64 - 7 <= 0 && (v[0] + v[1]) >= 6, "{v:?}");
    }
    // the 8 cells the line crosses in their interior
    let exact = analytic_nonconstant(&f, &p).unwrap().unwrap();
    assert_eq!(exact.count, 8);
}

#[test]
fn probes_never_exceed_the_corner_oracle_on_monotone_functions() {
    for t in 0..30u64 {
        let mut rng = child(77, t);
        let f = generate::monotone_halfspace(2, &mut rng);
        let p = BlockPartition::uniform_unit(8, 2);
        let corner = corner_oracle_nonconstant(&f, &p).unwrap();
        let probe = count_nonconstant_blocks(&f, &p, 64, &mut rng).unwrap();
        assert!(probe.cells.iter().all(|c| corner.cells.contains(c)));
    }
}

#[test]
fn probe_counts_stabilize() {
    let mut total64 = 0usize;
    let mut total128 = 0usize;
    for t in 0..20u64 {
        let mut rng = child(91, t);
        let disk = generate::disk(2, &mut rng);
        let tri = generate::triangle(&mut rng);
        let p = BlockPartition::uniform_unit(16, 2);
        for f in [&disk, &tri] {
            let seed: u64 = rand::Rng::random(&mut rng);
            total64 += count_nonconstant_blocks(f, &p, 64, &mut stream(seed)).unwrap().count;
            total128 += count_nonconstant_blocks(f, &p, 128, &mut stream(seed)).unwrap().count;
        }
    }
    assert!(total64 <= total128);
    assert!(((total128 - total64) as f64) < 0.05 * total128 as f64, "{total64} vs {total128}");
}

#[test]
fn composition_is_subadditive() {
    let p = BlockPartition::uniform_unit(16, 2);
    for t in 0..50u64 {
        let mut rng = child(123, t);
        let k = 2 + t as usize % 3;
        let f = generate::composed_halfspaces(2, k, &mut rng);
        let Concept::Compose { inner, .. } = &f else {
            panic!("composed generator returns a composition")
        };
        let parts: usize = inner
            .iter()
            .map(|h| analytic_nonconstant(h, &p).unwrap().unwrap().count)
            .sum();
        let whole = count_nonconstant_blocks(&f, &p, 64, &mut rng).unwrap().count;
        assert!(whole <= parts, "{whole} > {parts}");
        let bound = bbs_bound(
            &ClassId::Composed {
                k,
                inner: Box::new(ClassId::Halfspace),
            },
            16,
            2,
            1,
        )
        .unwrap();
        assert!(whole as f64 <= bound.max_nonconstant);
    }
}

#[test]
fn augmented_counts_within_plain_bound() {
    let support: Vec<f64> = (0..5).map(|i| i as f64).collect();
    let fin = Finite::new(support, vec![0.2; 5]).unwrap();
    let dist = ProductDistribution::iid(Component::Finite(fin), 2).unwrap();
    for t in 0..30u64 {
        let mut rng = child(55, t);
        let pts: Vec<AugmentedPoint> = (0..400).map(|_| augment(&sample_point(&dist, &mut rng), &mut rng)).collect();
        let p = induce_augmented_partition(&pts, 8, &mut rng).unwrap();
        let w: Vec<f64> = (0..2).map(|_| rand::Rng::random::<f64>(&mut rng) + 0.1).collect();
        let f = Concept::halfspace(w.clone(), 2.0 * (w[0] + w[1]));
        let c = augmented_nonconstant(&f, &p, &dist, 1000).unwrap();
        assert!(c.count as f64 <= bbs_bound(&ClassId::Halfspace, 8, 2, 1).unwrap().max_nonconstant);
        assert!(c.count as f64 <= bbs_bound(&ClassId::Monotone, 8, 2, 1).unwrap().max_nonconstant);
    }
}

#[test]
fn ptf_resolution() {
    // 3 sqrt(24) d k / r at d = 2, k = 2, r = 588 is just under 0.1
    let b = bbs_bound(&ClassId::Ptf, 588, 2, 2).unwrap();
    assert!((b.epsilon - 0.099_979_173_174_824).abs() < 1e-9);
    assert!(b.epsilon <= 0.1);
    assert!(bbs_bound(&ClassId::Ptf, 587, 2, 2).unwrap().epsilon > 0.1);
    // the learner's rule 9dk/eps is coarser
    assert_eq!(min_r_for_epsilon(ResolutionRule::Ptf, 2, 2, 0.1).unwrap(), 360);
}

#[test]
fn halfspace_unit_cell_counts() {
    // x = 0.5 on r = 4 lands on a cut: no cell is straddled
    assert_eq!(halfspace_cells_unit(&[1.0, 0.0], 0.5, 4), 0);
    assert_eq!(halfspace_cells_unit(&[1.0, 0.0], 0.4, 4), 4);
    assert_eq!(halfspace_cells_unit(&[1.0, 1.0], 1.0, 8), 8);
}

#[test]
fn gates_compose_with_any_arity() {
    let h = vec![Concept::halfspace(vec![1.0, 0.0], 0.5), Concept::halfspace(vec![0.0, 1.0], 0.5)];
    let and = Concept::Compose {
        gate: Gate::And,
        inner: h.clone(),
    };
    assert_eq!(and.eval(&[0.7, 0.7]), 1);
    assert_eq!(and.eval(&[0.7, 0.2]), -1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn counts_stay_in_range(seed in any::<u64>(), r in 2usize..10) {
        let mut rng = stream(seed);
        let f = generate::disk(2, &mut rng);
        let p = BlockPartition::uniform_unit(r, 2);
        let c = count_nonconstant_blocks(&f, &p, 16, &mut rng).unwrap();
        prop_assert!(c.count <= r * r);
        prop_assert!(c.cells.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn monotone_probe_within_corner(seed in any::<u64>()) {
        let mut rng = stream(seed);
        let f = generate::monotone_dnf(2, 2, &mut rng);
        let p = BlockPartition::uniform_unit(8, 2);
        let probe = count_nonconstant_blocks(&f, &p, 32, &mut rng).unwrap();
        let corner = corner_oracle_nonconstant(&f, &p).unwrap();
        prop_assert!(probe.count <= corner.count);
    }
}
