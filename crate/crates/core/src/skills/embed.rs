//! Deterministic hashed bag-of-words embedding.

use std::collections::BTreeMap;

pub const EMBED_DIM: usize = 256;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(|t| t.to_lowercase()).collect()
}

/// Token counts hashed into 256 buckets with weight `1 + ln(tf)`, then
/// L2-normalized. Text without tokens maps to the first basis vector.
pub fn embed_text(text: &str) -> Vec<f64> {
    let mut tf: BTreeMap<String, u32> = BTreeMap::new();
    for t in tokenize(text) {
        *tf.entry(t).or_default() += 1;
    }
    let mut v = vec![0.0; EMBED_DIM];
    for (token, count) in &tf {
        v[(fnv1a(token.as_bytes()) % EMBED_DIM as u64) as usize] += 1.0 + (*count as f64).ln();
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_first_basis_vector() {
        let v = embed_text("");
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|&x| x == 0.0));
        assert_eq!(embed_text("  ,; "), v);
    }

    #[test]
    fn unit_norm_and_deterministic() {
        let a = embed_text("kite melee units while focusing fire");
        assert_eq!(a, embed_text("kite melee units while focusing fire"));
        let n: f64 = a.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn whitespace_and_case_do_not_matter() {
        let a = embed_text("Heal wounded allies");
        let b = embed_text("heal   wounded allies \n");
        assert!(cosine(&a, &b) >= 0.99);
    }
}
