//! Token overlap scores shared by reranking, answer extraction, and grading.

use alloc::collections::BTreeMap;
use alloc::string::String;

/// Multiset token F1 between two token sequences.
///
/// Precision is the overlap over `predicted.len()`, recall the overlap over
/// `reference.len()`. Zero when either side is empty or nothing overlaps.
pub fn token_f1<A, B>(predicted: &[A], reference: &[B]) -> f64
where
    A: AsRef<str>,
    B: AsRef<str>,
{
    if predicted.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for t in reference {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    let mut overlap = 0usize;
    for t in predicted {
        if let Some(c) = counts.get_mut(t.as_ref()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / predicted.len() as f64;
    let r = overlap as f64 / reference.len() as f64;
    2.0 * p * r / (p + r)
}

/// Token F1 of two texts under the shared term form.
pub fn text_f1(predicted: &str, reference: &str) -> f64 {
    let a: alloc::vec::Vec<String> = crate::textnorm::terms(predicted);
    let b: alloc::vec::Vec<String> = crate::textnorm::terms(reference);
    token_f1(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_values() {
        assert_eq!(token_f1(&["a", "b"], &["a", "b"]), 1.0);
        assert_eq!(token_f1(&["a"], &["b"]), 0.0);
        let empty: [&str; 0] = [];
        assert_eq!(token_f1(&empty, &["a"]), 0.0);
        // 2 shared of 3 predicted and 4 reference: 2·(2/3)(1/2)/((2/3)+(1/2)) = 4/7
        let f = token_f1(&["x", "y", "q"], &["x", "y", "z", "w"]);
        assert!((f - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_tokens_count_once_each() {
        // predicted a,a against reference a: overlap 1, p = 1/2, r = 1
        let f = token_f1(&["a", "a"], &["a"]);
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
    }
}
