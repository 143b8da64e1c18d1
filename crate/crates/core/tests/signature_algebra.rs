use proptest::prelude::*;
use roughstop::signature::*;

fn path_from_increments(dim: usize, incs: &[f64]) -> AugmentedPath {
    let steps = incs.len() / dim;
    let mut values = vec![0.0; dim];
    for k in 0..steps {
        let prev: Vec<f64> = values[k * dim..(k + 1) * dim].to_vec();
        for c in 0..dim {
            values.push(prev[c] + incs[k * dim + c]);
        }
    }
    let times: Vec<f64> = (0..=steps).map(|i| i as f64).collect();
    augment_path(&values, dim, &times, AugmentMode::None).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

/// Level-2 iterated integrals of a piecewise-linear path by brute-force
/// trapezoid sums over `sub` substeps per segment.
fn brute_level_two(path: &AugmentedPath, sub: usize) -> Vec<f64> {
    let d = path.dim();
    let x0 = path.point(0).to_vec();
    let mut out = vec![0.0; d * d];
    let mut cur = x0.clone();
    for k in 0..path.len() - 1 {
        let a = path.point(k);
        let b = path.point(k + 1);
        for s in 0..sub {
            let next: Vec<f64> = (0..d)
                .map(|c| a[c] + (b[c] - a[c]) * (s + 1) as f64 / sub as f64)
                .collect();
            for i in 0..d {
                let mid = 0.5 * (cur[i] + next[i]) - x0[i];
                for j in 0..d {
                    out[i * d + j] += mid * (next[j] - cur[j]);
                }
            }
            cur = next;
        }
    }
    out
}

#[test]
fn brute_force_two_segment_level_two() {
    let p = path_from_increments(2, &[1.0, 0.0, 0.0, 1.0]);
    let s = segment_signature(&p, 0, 2, 2).unwrap();
    let brute = brute_level_two(&p, 10_000);
    for (a, b) in s.level_block(2).iter().zip(&brute) {
        assert!((a - b).abs() < 1e-6);
    }
    for (a, b) in brute.iter().zip([0.5, 1.0, 0.0, 0.5]) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn chen_identity_cross_checked_against_brute_force() {
    let p = path_from_increments(2, &[0.4, -0.3, 0.1, 0.8, -0.6, 0.2]);
    let left = segment_signature(&p, 0, 1, 4).unwrap();
    let right = segment_signature(&p, 1, 3, 4).unwrap();
    let whole = segment_signature(&p, 0, 3, 4).unwrap();
    assert!(close(
        chen_product(&left, &right).unwrap().coeffs(),
        whole.coeffs(),
        1e-12
    ));
    let brute = brute_level_two(&p, 20_000);
    for (a, b) in whole.level_block(2).iter().zip(&brute) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn level_one_is_increment() {
    let p = path_from_increments(3, &[0.1, 0.2, 0.3, -0.5, 0.0, 0.25]);
    let s = segment_signature(&p, 0, 2, 3).unwrap();
    let inc: Vec<f64> = (0..3).map(|c| p.point(2)[c] - p.point(0)[c]).collect();
    assert!(close(s.level_block(1), &inc, 1e-15));
}

fn increments(dim: usize, steps: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    steps.prop_flat_map(move |n| prop::collection::vec(-1.0f64..1.0, n * dim))
}

fn word(dim: u8, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(1..=dim, 0..=max_len).prop_map(Word::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chen_identity_at_every_split(incs in increments(2, 3..7)) {
        let p = path_from_increments(2, &incs);
        let n = p.len() - 1;
        let whole = segment_signature(&p, 0, n, 4).unwrap();
        for split in 0..=n {
            let a = segment_signature(&p, 0, split, 4).unwrap();
            let b = segment_signature(&p, split, n, 4).unwrap();
            prop_assert!(close(chen_product(&a, &b).unwrap().coeffs(), whole.coeffs(), 1e-12));
        }
    }

    #[test]
    fn unit_is_chen_identity(incs in increments(3, 1..5)) {
        let p = path_from_increments(3, &incs);
        let s = segment_signature(&p, 0, p.len() - 1, 3).unwrap();
        let unit = TruncatedSignature::unit(3, 3);
        prop_assert_eq!(s.chen(&unit).unwrap(), s.clone());
        prop_assert_eq!(unit.chen(&s).unwrap(), s);
    }

    #[test]
    fn shuffle_identity(incs in increments(2, 1..6), w1 in word(2, 3), w2 in word(2, 3),
                        c1 in -2.0f64..2.0, c2 in -2.0f64..2.0) {
        let p = path_from_increments(2, &incs);
        let s = segment_signature(&p, 0, p.len() - 1, 6).unwrap();
        let l1 = LinearFunctional::word(2, w1, c1).unwrap();
        let l2 = LinearFunctional::word(2, w2, c2).unwrap();
        let l3 = shuffle_product(&l1, &l2).unwrap();
        prop_assert!(l3.max_len() <= l1.max_len() + l2.max_len());
        let lhs = apply_functional(&l1, &s).unwrap() * apply_functional(&l2, &s).unwrap();
        let rhs = apply_functional(&l3, &s).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-10, "lhs {} rhs {}", lhs, rhs);
    }

    #[test]
    fn exp_log_roundtrip(incs in increments(2, 5..6)) {
        let p = path_from_increments(2, &incs);
        let s = segment_signature(&p, 0, p.len() - 1, 4).unwrap();
        let l = log_signature(&s).unwrap();
        prop_assert_eq!(l.coeffs()[0], 0.0);
        let back = exp_signature(&l).unwrap();
        let err = back.coeffs().iter().zip(s.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "max abs error {}", err);
        prop_assert!(close(back.coeffs(), s.coeffs(), 1e-12));
    }

    #[test]
    fn single_segment_log_is_level_one(dx in prop::collection::vec(-2.0f64..2.0, 3)) {
        let s = TruncatedSignature::exp_increment(&dx, 5);
        let l = log_signature(&s).unwrap();
        prop_assert!(close(l.level_block(1), &dx, 1e-14));
        for n in 2..=5 {
            prop_assert!(l.level_block(n).iter().all(|c| c.abs() < 1e-13));
        }
    }

    #[test]
    fn dimension_formula(dim in 1usize..5, level in 0usize..6) {
        let expected = if dim == 1 { level + 1 } else { (dim.pow(level as u32 + 1) - 1) / (dim - 1) };
        prop_assert_eq!(tensor_len(dim, level), expected);
        prop_assert_eq!(TruncatedSignature::unit(dim, level).coeffs().len(), expected);
    }

    #[test]
    fn lyndon_view_roundtrip(incs in increments(3, 2..6)) {
        let p = path_from_increments(3, &incs);
        let s = segment_signature(&p, 0, p.len() - 1, 4).unwrap();
        let l = log_signature(&s).unwrap();
        let basis = LyndonBasis::new(3, 4);
        let coords = basis.compress(&l).unwrap();
        prop_assert_eq!(coords.len(), witt_dimension(3, 4));
        let back = basis.expand(&coords).unwrap();
        prop_assert!(close(back.coeffs(), l.coeffs(), 1e-11));
    }
}
