//! Built-in seed sets.

use crate::delay::{DelayMatrix, SeedSet};

/// G = [D, D, 1], H = [1+D+D², 1+D², 1], ISF = [D, D, 0].
pub fn c3_seed() -> SeedSet {
    SeedSet::self_dual(
        DelayMatrix::from_exps(&[vec![vec![1], vec![1], vec![0]]]),
        DelayMatrix::from_exps(&[vec![vec![0, 1, 2], vec![0, 2], vec![0]]]),
        Some(DelayMatrix::from_exps(&[vec![vec![1], vec![1], vec![]]])),
    )
    .expect("explicit ISF")
}

/// H = [1+D+D²+D³+D⁴, 1+D²+D³+D⁵, 1+D²+D³+D⁴+D⁵] with G = [D², 1+D²+D³, 1+D+D³].
pub fn c5_seed() -> SeedSet {
    SeedSet::self_dual(
        DelayMatrix::from_exps(&[vec![vec![2], vec![0, 2, 3], vec![0, 1, 3]]]),
        DelayMatrix::from_exps(&[vec![
            vec![0, 1, 2, 3, 4],
            vec![0, 2, 3, 5],
            vec![0, 2, 3, 4, 5],
        ]]),
        None,
    )
    .expect("C5 ISF exists")
}

/// Seed set by builtin name (`C3`, `C5`).
pub fn seed_by_name(name: &str) -> Option<SeedSet> {
    match name.to_ascii_uppercase().as_str() {
        "C3" => Some(c3_seed()),
        "C5" => Some(c5_seed()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::verify_orthogonality;

    #[test]
    fn builtin_identities() {
        assert!(verify_orthogonality(&c3_seed()).pass());
        assert!(verify_orthogonality(&c5_seed()).pass());
    }

    #[test]
    fn c5_weights() {
        let s = c5_seed();
        assert_eq!(s.parity.row_weight(0), 14);
        assert_eq!(s.generator.row_weight(0), 7);
    }
}
