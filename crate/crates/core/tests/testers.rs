use downsample::blockgrid::{BlockPartition, Partition};
use downsample::concepts::{generate, BooleanFn, Concept};
use downsample::grid::GridShape;
use downsample::product_dist::*;
use downsample::rng::{child, stream, Stream};
use downsample::testers::*;
use proptest::prelude::*;
use rand::Rng;

const RUNS: u64 = 200;

fn uniform_oracle(f: Concept) -> impl Fn(&mut Stream) -> (Vec<f64>, i8) {
    move |rng: &mut Stream| {
        let x = vec![rng.random::<f64>(), rng.random::<f64>()];
        let y = f.eval(&x);
        (x, y)
    }
}

fn rejections(trials: u64, mut run: impl FnMut(&mut Stream) -> bool) -> u64 {
    (0..trials).filter(|&t| !run(&mut child(0xFA2, t))).count() as u64
}

#[test]
fn diagonal_is_one_sided() {
    let zero = |_: &[usize]| false;
    // one 1 per diagonal: the points with a zero coordinate
    let one_each = |x: &[usize]| x.iter().min() == Some(&0);
    for t in 0..RUNS {
        let mut rng = child(1, t);
        assert!(diagonal_test(&zero, 16, 2, 0.25, &mut rng).unwrap().accept);
        assert!(diagonal_test(&one_each, 16, 2, 0.25, &mut rng).unwrap().accept);
        assert!(diagonal_test(&one_each, 8, 3, 0.3, &mut rng).unwrap().accept);
    }
}

#[test]
fn diagonal_rejects_all_ones() {
    let ones = |_: &[usize]| true;
    let rej = rejections(60, |rng| diagonal_test(&ones, 16, 2, 0.25, rng).unwrap().accept);
    assert!(rej >= 40, "{rej} of 60");
}

#[test]
fn diagonal_query_count_matches_schedule() {
    for eps in [0.05, 0.1, 0.25, 0.5] {
        let v = diagonal_test(&|_: &[usize]| false, 32, 2, eps, &mut stream(2)).unwrap();
        let sched = diagonal_schedule(eps);
        let want: usize = sched.iter().map(|(p, q)| p * q).sum();
        assert_eq!(v.queries, want);
        assert_eq!(v.samples, sched.iter().map(|s| s.0).sum::<usize>());
        // each p_i q_i is at most (k ln 6 / (eps 2^(i-2)) + 1)(2^(i+2) ln 12 + 1), and 2^k < 8 / eps
        let k = sched.len() as f64;
        let (l6, l12) = (6f64.ln(), 12f64.ln());
        let bound = (16.0 * k * k * l6 * l12 + 8.0 * k * l6 + 64.0 * l12) / eps + k;
        assert!((v.queries as f64) <= bound, "{} > {bound}", v.queries);
        let log = (1.0 / eps).log2() + 3.0;
        assert!((v.queries as f64) <= 16.0 * l6 * l12 * 4.0 * log * log / eps);
    }
}

#[test]
fn grid_monotonicity_is_one_sided() {
    let c = TesterConstants::default();
    for t in 0..RUNS {
        let mut rng = child(3, t);
        let a = rng.random_range(1..5);
        let b = rng.random_range(1..5);
        let th = rng.random_range(0..a * 64 + b * 64);
        let f = move |x: &[usize]| a * x[0] + b * x[1] >= th;
        assert!(grid_monotonicity_test(&f, 64, 2, 0.25, &c, &mut rng).unwrap().accept);
        // n not a multiple of r
        assert!(grid_monotonicity_test(&f, 50, 2, 0.25, &c, &mut rng).unwrap().accept);
    }
}

#[test]
fn grid_monotonicity_rejects_far_inputs() {
    let c = TesterConstants::default();
    let anti = |x: &[usize]| x[0] + x[1] < 64;
    let rej = rejections(60, |rng| grid_monotonicity_test(&anti, 64, 2, 0.25, &c, rng).unwrap().accept);
    assert!(rej >= 40, "anti-monotone {rej} of 60");
    let parity = |x: &[usize]| (x[0] + x[1]) % 2 == 1;
    let rej = rejections(60, |rng| grid_monotonicity_test(&parity, 16, 2, 0.25, &c, rng).unwrap().accept);
    assert!(rej >= 40, "parity {rej} of 60");
    let checker = |x: &[usize]| (x[0] / 8 + x[1] / 8) % 2 == 1;
    let rej = rejections(60, |rng| grid_monotonicity_test(&checker, 64, 2, 0.25, &c, rng).unwrap().accept);
    assert!(rej >= 40, "checkerboard {rej} of 60");
}

#[test]
fn df_monotonicity_is_one_sided() {
    let c = TesterConstants::default();
    let gauss = ProductDistribution::gaussian(2);
    for t in 0..40u64 {
        let mut rng = child(4, t);
        let f = generate::monotone_halfspace(2, &mut rng);
        let v = df_monotonicity_test(&f, &gauss, 0.25, Some(20_000), &c, &mut rng).unwrap();
        assert!(v.accept, "{}", v.to_text());
    }
    let cube = ProductDistribution::hypercube(8);
    let maj = Concept::majority(8);
    for t in 0..20u64 {
        let mut rng = child(5, t);
        let v = df_monotonicity_test(&maj, &cube, 0.25, Some(20_000), &c, &mut rng).unwrap();
        assert!(v.accept, "{}", v.to_text());
    }
}

#[test]
fn df_monotonicity_rejects_an_anti_monotone_halfspace() {
    let c = TesterConstants::default();
    let f = Concept::halfspace(vec![-1.0, -1.0], 0.0);
    let gauss = ProductDistribution::gaussian(2);
    let rej = rejections(20, |rng| df_monotonicity_test(&f, &gauss, 0.25, Some(100_000), &c, rng).unwrap().accept);
    assert!(rej >= 14, "{rej} of 20");
}

#[test]
fn convex_is_one_sided() {
    let c = TesterConstants::default();
    for t in 0..60u64 {
        let mut rng = child(6, t);
        let disk = generate::disk(2, &mut rng);
        let v = convex_onesided_test(&uniform_oracle(disk), 2, 0.25, Some(20_000), None, &c, &mut rng).unwrap();
        assert!(v.accept);
        let tri = generate::triangle(&mut rng);
        let v = convex_onesided_test(&uniform_oracle(tri), 2, 0.25, Some(20_000), None, &c, &mut rng).unwrap();
        assert!(v.accept);
        let one = Concept::Constant { value: 1 };
        let v = convex_onesided_test(&uniform_oracle(one), 2, 0.25, Some(20_000), None, &c, &mut rng).unwrap();
        assert!(v.accept);
    }
}

#[test]
fn convex_rejects_two_squares() {
    let c = TesterConstants::default();
    let f = generate::two_squares(0.45);
    let rej = rejections(20, |rng| {
        convex_onesided_test(&uniform_oracle(f.clone()), 2, 0.2, Some(60_000), None, &c, rng)
            .unwrap()
            .accept
    });
    assert!(rej >= 14, "{rej} of 20");
}

#[test]
fn cover_examples() {
    let m = build_cover(CoverClass::Monotone, 2, 2).unwrap();
    assert_eq!(m.members.len(), 6);
    assert!(m.complete);
    assert_eq!(build_cover(CoverClass::KAlternating { k: 2 }, 4, 1).unwrap().members.len(), 14);
    let convex = build_cover(CoverClass::Convex, 3, 2).unwrap();
    for x0 in 0..3 {
        for x1 in x0..3 {
            for y0 in 0..3 {
                for y1 in y0..3 {
                    let rect: Vec<i8> = GridShape::new(3, 2)
                        .cells()
                        .map(|v| if (x0..=x1).contains(&v[0]) && (y0..=y1).contains(&v[1]) { 1 } else { -1 })
                        .collect();
                    assert!(convex.members.contains(&rect));
                }
            }
        }
    }
    for c in [&m, &convex] {
        assert!(c.members.iter().all(|v| is_member(c.class, c.shape, v)));
    }
}

fn uniform_partition(r: usize) -> Partition {
    Partition::Plain(BlockPartition::uniform_unit(r, 2))
}

/// Labeled samples of the coarse function `table` on the uniform `[r]^2` grid of the unit square.
fn table_samples(table: &[i8], r: usize, q: usize, rng: &mut Stream) -> Vec<(Vec<f64>, i8)> {
    (0..q)
        .map(|_| {
            let x = vec![rng.random::<f64>(), rng.random::<f64>()];
            let c = (x[1] * r as f64) as usize * r + (x[0] * r as f64) as usize;
            (x, table[c])
        })
        .collect()
}

#[test]
fn member_of_the_cover_has_distance_zero() {
    let cover = build_cover(CoverClass::Monotone, 4, 2).unwrap();
    let p = uniform_partition(4);
    let mut rng = stream(7);
    for m in cover.members.iter().step_by(7) {
        let s = table_samples(m, 4, 500, &mut rng);
        assert_eq!(distance_approximate(&s, &cover, &p, &mut rng).unwrap().value, 0.0);
    }
}

#[test]
fn negated_member_matches_exact_distance() {
    let cover = build_cover(CoverClass::Monotone, 4, 2).unwrap();
    let p = uniform_partition(4);
    let cell_mass = vec![1.0 / 16.0; 16];
    let q = distance_sample_size(cover.members.len(), 0.1);
    let mut rng = stream(8);
    for m in cover.members.iter().step_by(5) {
        let neg: Vec<i8> = m.iter().map(|v| -v).collect();
        let pos: Vec<f64> = neg.iter().map(|&v| if v > 0 { 1.0 / 16.0 } else { 0.0 }).collect();
        let (exact, _) = exact_distance(&pos, &cell_mass, &cover);
        let est = distance_approximate(&table_samples(&neg, 4, q, &mut rng), &cover, &p, &mut rng).unwrap();
        assert!((est.value - exact).abs() <= 0.1, "{} vs {exact}", est.value);
    }
}

#[test]
fn random_functions_on_a_small_grid() {
    let cover = build_cover(CoverClass::Monotone, 3, 2).unwrap();
    let p = uniform_partition(3);
    let cell_mass = vec![1.0 / 9.0; 9];
    let q = distance_sample_size(cover.members.len(), 0.1);
    let mut good = 0;
    for t in 0..60u64 {
        let mut rng = child(9, t);
        let table: Vec<i8> = (0..9).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let pos: Vec<f64> = table.iter().map(|&v| if v > 0 { 1.0 / 9.0 } else { 0.0 }).collect();
        let (exact, _) = exact_distance(&pos, &cell_mass, &cover);
        let est = distance_approximate(&table_samples(&table, 3, q, &mut rng), &cover, &p, &mut rng).unwrap();
        good += ((est.value - exact).abs() <= 0.1) as usize;
    }
    assert!(good >= 50, "{good} of 60");
}

#[test]
fn tolerant_tester_decisions() {
    let cover = build_cover(CoverClass::KAlternating { k: 2 }, 4, 2).unwrap();
    let p = uniform_partition(4);
    let (e1, e2) = (0.05, 0.25);
    let q = tolerant_sample_size(cover.members.len(), e1, e2);
    let member = cover.members[cover.members.len() / 2].clone();
    // a far input: the 4 x 4 checkerboard alternates too often
    let checker: Vec<i8> = GridShape::new(4, 2).cells().map(|v| if (v[0] + v[1]) % 2 == 0 { 1 } else { -1 }).collect();
    let pos: Vec<f64> = checker.iter().map(|&v| if v > 0 { 1.0 / 16.0 } else { 0.0 }).collect();
    let (far, _) = exact_distance(&pos, &[1.0 / 16.0; 16], &cover);
    assert!(far >= e2, "{far}");
    let (mut acc, mut rej) = (0, 0);
    for t in 0..30u64 {
        let mut rng = child(10, t);
        acc += tolerant_test(&table_samples(&member, 4, q, &mut rng), &cover, &p, e1, e2, &mut rng).unwrap().accept as usize;
        rej += !tolerant_test(&table_samples(&checker, 4, q, &mut rng), &cover, &p, e1, e2, &mut rng).unwrap().accept as usize;
    }
    assert!(acc >= 25 && rej >= 25, "{acc} {rej}");
    // eps1 = 0 keeps rejecting far inputs
    let mut rng = stream(11);
    assert!(!tolerant_test(&table_samples(&checker, 4, q, &mut rng), &cover, &p, 0.0, e2, &mut rng).unwrap().accept);
    assert!(tolerant_test(&[], &cover, &p, 0.2, 0.1, &mut rng).is_err());
}

#[test]
fn transcripts_are_line_oriented() {
    let c = TesterConstants {
        record_queries: true,
        ..TesterConstants::default()
    };
    let mut v = grid_monotonicity_test(&|x: &[usize]| x[0] >= 3, 8, 2, 0.5, &c, &mut stream(12)).unwrap();
    v.seed = Some(12);
    let text = v.to_text();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "seed 12");
    assert_eq!(lines.iter().filter(|l| l.starts_with("query ")).count(), v.log.len());
    assert_eq!(v.log.len(), v.queries);
    assert!(lines.last().unwrap().starts_with("verdict accept"));
    assert_eq!(lines.iter().filter(|l| l.starts_with("subtest ")).count(), v.subtests.len());
}

#[test]
fn testers_replay_from_a_seed() {
    let c = TesterConstants::default();
    let f = |x: &[usize]| (x[0] / 4 + x[1] / 4) % 2 == 1;
    let a = grid_monotonicity_test(&f, 32, 2, 0.25, &c, &mut stream(13)).unwrap();
    let b = grid_monotonicity_test(&f, 32, 2, 0.25, &c, &mut stream(13)).unwrap();
    assert_eq!(a.to_text(), b.to_text());
}

#[test]
fn bad_parameters_are_errors() {
    let c = TesterConstants::default();
    assert!(diagonal_test(&|_: &[usize]| false, 4, 2, 0.0, &mut stream(1)).is_err());
    assert!(grid_monotonicity_test(&|_: &[usize]| false, 4, 2, 1.0, &c, &mut stream(1)).is_err());
    let o = uniform_oracle(Concept::Constant { value: 1 });
    assert!(convex_onesided_test(&o, 4, 0.2, None, None, &c, &mut stream(1)).is_err());
    assert!("k-alternating:x".parse::<CoverClass>().is_err());
    assert_eq!("k-alternating:3".parse::<CoverClass>().unwrap(), CoverClass::KAlternating { k: 3 });
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn monotone_tables_always_pass(seed in any::<u64>(), n in 2usize..20) {
        let mut rng = stream(seed);
        let w: Vec<usize> = (0..2).map(|_| rng.random_range(0..4)).collect();
        let th = rng.random_range(0..4 * n);
        let f = move |x: &[usize]| w[0] * x[0] + w[1] * x[1] >= th;
        prop_assert!(grid_monotonicity_test(&f, n, 2, 0.4, &TesterConstants::default(), &mut rng).unwrap().accept);
    }

    #[test]
    fn exact_distance_of_members_is_zero(seed in any::<u64>()) {
        let cover = build_cover(CoverClass::KAlternating { k: 1 }, 3, 2).unwrap();
        let mut rng = stream(seed);
        let k = rng.random_range(0..cover.members.len());
        let masses: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
        let pos: Vec<f64> = cover.members[k].iter().zip(&masses).map(|(&v, &m)| if v > 0 { m } else { 0.0 }).collect();
        prop_assert_eq!(exact_distance(&pos, &masses, &cover).0, 0.0);
    }
}
