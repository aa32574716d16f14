#![allow(dead_code)]

use ubqp_core::QuboInstance;

/// Full symmetric matrix: each stored off-diagonal value on both sides.
pub fn symmetric(q: &QuboInstance) -> Vec<Vec<f64>> {
    let n = q.n();
    let mut m = vec![vec![0.0; n]; n];
    for c in q.entries() {
        m[c.i][c.j] = c.value;
        m[c.j][c.i] = c.value;
    }
    m
}

/// `x^T M x` by the textbook double sum.
pub fn quadratic_form(m: &[Vec<f64>], x: &[u8]) -> f64 {
    let mut total = 0.0;
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            total += v * f64::from(x[i]) * f64::from(x[j]);
        }
    }
    total
}

pub fn bits_of(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

/// Optimum and every maximizing assignment, by scanning all `2^n` vectors.
pub fn brute_force(q: &QuboInstance) -> (f64, Vec<Vec<u8>>) {
    let m = symmetric(q);
    let n = q.n();
    let mut best = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    for mask in 0..(1u64 << n) {
        let x = bits_of(mask, n);
        let v = quadratic_form(&m, &x);
        if v > best {
            best = v;
            argmax.clear();
        }
        if v == best {
            argmax.push(x);
        }
    }
    (best, argmax)
}
