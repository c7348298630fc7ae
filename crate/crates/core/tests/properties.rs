use foliq::bicycle::{bp_decode, build_bicycle, build_foliated_tanner, BpConfig};
use foliq::builtin::c3_seed;
use foliq::code::{code_syndrome, conv_code, expand_aligned_isf, extract_syndrome, foliate, pure_error};
use foliq::delay::{poly_mul, DelayPoly};
use foliq::gf2::{matmul, solve, BitMatrix, BitVector};
use foliq::schedule::{all_faults, colour_schedule, parse_schedule, validate, FrameLayout};
use foliq::specfile::parse_spec;
use foliq::trellis::{build_trellis, min_weight_path};
use foliq::turbo::{Interleaver, InterleaverKind};
use proptest::prelude::*;

fn bitvec(len: usize) -> impl Strategy<Value = BitVector> {
    prop::collection::vec(any::<bool>(), len).prop_map(|b| BitVector::from_bools(&b))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = BitMatrix> {
    prop::collection::vec(bitvec(cols), rows).prop_map(move |r| BitMatrix::from_rows(cols, r))
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn solve_reproduces_image(a in matrix(7, 11), x in bitvec(11)) {
        let s = a.mul_vec(&x);
        let y = solve(&a, &s).unwrap();
        prop_assert_eq!(a.mul_vec(&y), s);
    }

    #[test]
    fn rank_nullity(a in matrix(6, 10)) {
        let ns = a.nullspace();
        prop_assert_eq!(a.rank() + ns.rows(), a.cols());
        prop_assert!(matmul(&a, &ns.transpose()).unwrap().is_zero());
    }

    #[test]
    fn transpose_is_involution(a in matrix(5, 9)) {
        prop_assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn poly_mul_commutes_and_adds_degrees(a in 1u64..1 << 12, b in 1u64..1 << 12) {
        let pa = DelayPoly::from_exps(&(0..12).filter(|i| a >> i & 1 == 1).collect::<Vec<_>>());
        let pb = DelayPoly::from_exps(&(0..12).filter(|i| b >> i & 1 == 1).collect::<Vec<_>>());
        let ab = poly_mul(&pa, &pb).unwrap();
        prop_assert_eq!(&ab, &poly_mul(&pb, &pa).unwrap());
        prop_assert_eq!(ab.degree(), Some(pa.degree().unwrap() + pb.degree().unwrap()));
    }

    #[test]
    fn syndrome_is_linear(a in bitvec(24), b in bitvec(24)) {
        let code = conv_code(&c3_seed(), 8).unwrap();
        let sa = code_syndrome(&code, &a).unwrap();
        let sb = code_syndrome(&code, &b).unwrap();
        prop_assert_eq!(code_syndrome(&code, &a.xor(&b)).unwrap(), sa.xor(&sb));
    }

    #[test]
    fn trellis_correction_matches_syndrome(e in bitvec(24)) {
        let seed = c3_seed();
        let code = conv_code(&seed, 8).unwrap();
        let s = code_syndrome(&code, &e).unwrap();
        let e0 = pure_error(&code, &s, &expand_aligned_isf(&seed, 8)).unwrap();
        prop_assert_eq!(code_syndrome(&code, &e0).unwrap(), s.clone());
        let tr = build_trellis(&seed, 8).unwrap();
        let emin = min_weight_path(&tr, &e0, None).p_min.xor(&e0);
        prop_assert_eq!(code_syndrome(&code, &emin).unwrap(), s);
        prop_assert!(emin.weight() <= e.weight());
    }

    #[test]
    fn foliated_syndrome_is_linear(a in bitvec(128), b in bitvec(128)) {
        let fc = foliate(&conv_code(&c3_seed(), 4).unwrap(), 2);
        let a = a.slice(0, fc.n_qubits);
        let b = b.slice(0, fc.n_qubits);
        let sa = extract_syndrome(&fc, &a).unwrap();
        let sb = extract_syndrome(&fc, &b).unwrap();
        prop_assert_eq!(extract_syndrome(&fc, &a.xor(&b)).unwrap(), sa.xor(&sb));
    }

    #[test]
    fn interleaver_is_bijection(seed in any::<u64>(), len in 1usize..200) {
        let il = Interleaver::new(InterleaverKind::Random { seed }, len).unwrap();
        let x: Vec<usize> = (0..len).collect();
        let mut seen = il.perm.clone();
        seen.sort_unstable();
        prop_assert_eq!(&seen, &x);
        prop_assert_eq!(il.invert(&il.apply(&x)), x);
    }

    #[test]
    fn transpose_interleaver_roundtrip(width in 1usize..6, tau in 1usize..12) {
        let il = Interleaver::new(InterleaverKind::Transpose { width }, width * tau).unwrap();
        let x: Vec<usize> = (0..width * tau).collect();
        prop_assert_eq!(il.invert(&il.apply(&x)), x);
    }

    #[test]
    fn bicycle_checks_commute(row in bitvec(12)) {
        prop_assume!(row.weight() > 0);
        let b = build_bicycle(12, &row, &[]).unwrap();
        prop_assert!(matmul(&b.h, &b.h.transpose()).unwrap().is_zero());
    }

    #[test]
    fn bp_marginals_are_probabilities(e in bitvec(24), p in 0.001f64..0.3) {
        let mut row = BitVector::zeros(6);
        for i in [0, 1, 3] {
            row.set(i, true);
        }
        let b = build_bicycle(6, &row, &[0]).unwrap();
        let fc = foliate(&b.code, 1);
        let mut err = BitVector::zeros(fc.n_qubits);
        for i in 0..fc.n_qubits.min(24) {
            err.set(i, e.get(i));
        }
        let s = extract_syndrome(&fc, &err).unwrap();
        let (primal, _) = build_foliated_tanner(&fc);
        let ids = primal.check_ids.clone();
        let sub = BitVector::from_bools(&ids.iter().map(|&c| s.get(c)).collect::<Vec<_>>());
        let priors = vec![p; primal.n_vars()];
        let r = bp_decode(&primal, &sub, &priors, &BpConfig::default());
        prop_assert!(r.marginals.iter().all(|m| m.is_finite() && (0.0..=1.0).contains(m)));
    }

    #[test]
    fn coloured_schedule_is_valid_and_bounded(
        supports in prop::collection::vec(prop::collection::btree_set(0usize..12, 1..7), 1..8)
    ) {
        let stabs: Vec<Vec<usize>> = supports.into_iter().map(|s| s.into_iter().collect()).collect();
        let rows: Vec<usize> = (0..stabs.len()).collect();
        let layout = FrameLayout { ancillas: stabs.len(), width: 12 };
        let s = colour_schedule("random", layout, 12, stabs, rows);
        prop_assert!(validate(&s).is_valid());
        for f in all_faults(&s) {
            prop_assert!(f.weight() <= f.bound());
        }
        let back = parse_schedule(&s.to_text(), layout).unwrap();
        prop_assert!(validate(&back).is_valid());
        prop_assert_eq!(back.horizon, s.horizon);
    }

    #[test]
    fn spec_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_spec(&text);
    }

    #[test]
    fn schedule_parser_never_panics(text in "[a-zT_0-9, \n#]{0,200}") {
        let _ = parse_schedule(&text, FrameLayout { ancillas: 2, width: 3 });
    }
}
