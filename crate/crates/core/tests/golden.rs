use foliq::builtin::c3_seed;
use foliq::code::{code_syndrome, conv_code, expand_aligned_isf, is_logical_failure, pure_error};
use foliq::gf2::BitVector;
use foliq::trellis::{build_trellis, min_weight_path};

fn frames(v: &BitVector) -> Vec<&'static str> {
    (0..v.len() / 3)
        .map(|t| match v.slice(t * 3, 3).to_string().as_str() {
            "000" => "000",
            "001" => "001",
            "010" => "010",
            "100" => "100",
            "110" => "110",
            other => panic!("unexpected frame {other}"),
        })
        .collect()
}

/// Decodes a weight pattern in frame 4 of terminated C3 with τ=8.
fn run(eps_frame: &str) -> (String, BitVector, BitVector, BitVector, bool) {
    let seed = c3_seed();
    let code = conv_code(&seed, 8).unwrap();
    let mut eps = BitVector::zeros(24);
    for (c, ch) in eps_frame.chars().enumerate() {
        eps.set(12 + c, ch == '1');
    }
    let s = code_syndrome(&code, &eps).unwrap();
    let e0 = pure_error(&code, &s, &expand_aligned_isf(&seed, 8)).unwrap();
    let tr = build_trellis(&seed, 8).unwrap();
    let p = min_weight_path(&tr, &e0, None).p_min;
    let emin = p.xor(&e0);
    let fail = is_logical_failure(&code, &emin.xor(&eps)).0;
    (s.to_string(), e0, p, emin, fail)
}

#[test]
fn c3_trellis_state_counts() {
    let tr = build_trellis(&c3_seed(), 8).unwrap();
    assert_eq!(tr.state_counts(), vec![1, 4, 8, 8, 8, 8, 8, 4, 1]);
}

#[test]
fn blue_path() {
    let (s, e0, p, emin, fail) = run("100");
    assert_eq!(s, "001110");
    assert_eq!(frames(&e0), ["000", "000", "000", "110", "110", "110", "000", "000"]);
    assert_eq!(frames(&p), ["000", "000", "000", "110", "010", "110", "000", "000"]);
    assert_eq!(frames(&emin), ["000", "000", "000", "000", "100", "000", "000", "000"]);
    assert!(!fail);
}

#[test]
fn red_path() {
    let (s, e0, p, emin, fail) = run("110");
    assert_eq!(s, "000100");
    assert_eq!(frames(&e0), ["000", "000", "000", "000", "110", "000", "000", "000"]);
    assert_eq!(frames(&p), ["000", "000", "000", "001", "110", "000", "000", "000"]);
    assert_eq!(frames(&emin), ["000", "000", "000", "001", "000", "000", "000", "000"]);
    assert!(fail);
}
