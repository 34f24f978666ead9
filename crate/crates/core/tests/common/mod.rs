#![allow(dead_code)]

use std::collections::HashMap;

use interinfo_core::{Axis, JointTable};
use rand::Rng;

pub fn axes(shape: &[usize]) -> Vec<Axis> {
    const NAMES: [&str; 6] = ["A", "B", "C", "D", "E", "F"];
    shape
        .iter()
        .enumerate()
        .map(|(i, &n)| Axis::with_cardinality(NAMES[i], n))
        .collect()
}

/// Random table with positive cells; roughly one cell in `zero_every` is zeroed.
pub fn random_table<R: Rng>(rng: &mut R, shape: &[usize], zero_every: Option<u32>) -> JointTable {
    let size: usize = shape.iter().product();
    let mut counts: Vec<f64> = (0..size).map(|_| rng.gen_range(0.01..1.0)).collect();
    if let Some(k) = zero_every {
        for c in counts.iter_mut() {
            if rng.gen_ratio(1, k) {
                *c = 0.0;
            }
        }
        if counts.iter().all(|c| *c == 0.0) {
            counts[0] = 1.0;
        }
    }
    JointTable::from_counts(axes(shape), &counts).unwrap()
}

pub fn random_shape<R: Rng>(rng: &mut R, lo: usize, hi: usize) -> Vec<usize> {
    (0..3).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Entropy of the marginal on `keep`, computed by explicit enumeration of
/// multi-indices into a hash map and natural logarithms.
pub fn naive_entropy(table: &JointTable, keep: &[usize]) -> f64 {
    let shape = table.shape();
    let mut index = vec![0usize; shape.len()];
    let mut margin: HashMap<Vec<usize>, f64> = HashMap::new();
    for &p in table.cells() {
        let key: Vec<usize> = keep.iter().map(|&k| index[k]).collect();
        *margin.entry(key).or_insert(0.0) += p;
        for ax in (0..shape.len()).rev() {
            index[ax] += 1;
            if index[ax] < shape[ax] {
                break;
            }
            index[ax] = 0;
        }
    }
    let nats: f64 = margin
        .values()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    nats / std::f64::consts::LN_2
}

/// Brute-force inclusion–exclusion over every non-empty subset of `axes`.
pub fn naive_co_information(table: &JointTable, axes: &[usize]) -> f64 {
    let n = axes.len();
    let mut total = 0.0;
    for mask in 1usize..(1 << n) {
        let keep: Vec<usize> = (0..n)
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| axes[b])
            .collect();
        let sign = if keep.len() % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * naive_entropy(table, &keep);
    }
    total
}

pub fn xor_table() -> JointTable {
    let mut cells = vec![0.0; 8];
    for x in 0..2 {
        for y in 0..2 {
            cells[x * 4 + y * 2 + (x ^ y)] = 0.25;
        }
    }
    JointTable::new(axes(&[2, 2, 2]), cells).unwrap()
}

pub fn copy_table() -> JointTable {
    let mut cells = vec![0.0; 8];
    cells[0] = 0.5;
    cells[7] = 0.5;
    JointTable::new(axes(&[2, 2, 2]), cells).unwrap()
}

/// Marginal cells on `keep` by enumeration, in row-major order of the kept axes.
pub fn naive_margin(table: &JointTable, keep: &[usize]) -> Vec<f64> {
    let shape = table.shape();
    let len: usize = keep.iter().map(|&k| shape[k]).product();
    let mut out = vec![0.0; len];
    let mut index = vec![0usize; shape.len()];
    for &p in table.cells() {
        let flat = keep.iter().fold(0, |acc, &k| acc * shape[k] + index[k]);
        out[flat] += p;
        for ax in (0..shape.len()).rev() {
            index[ax] += 1;
            if index[ax] < shape[ax] {
                break;
            }
            index[ax] = 0;
        }
    }
    out
}
