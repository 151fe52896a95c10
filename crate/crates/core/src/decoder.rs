//! Syndrome sum-product decoding over GF(2^q).
//!
//! Messages are linear-domain probability vectors of length `Q = 2^q`,
//! stored edge by edge in row-major edge order so that every check node
//! reads and writes one contiguous block. Check nodes work in the
//! Walsh–Hadamard domain: each incoming vector is permuted by its edge
//! label, transformed, and the products over all-but-one edge are
//! transformed back. The syndrome symbol enters as an index translation.

use crate::gf::{inverse_wht, wht, GaloisField, Symbol};
use crate::ldpc::SparseParityCheck;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub max_iterations: usize,
    /// Weight of the new check message; `1.0` disables damping.
    pub damping: f64,
    /// Floor applied to check-to-variable probabilities before normalizing.
    pub clip_floor: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self { max_iterations: 50, damping: 1.0, clip_floor: 1e-30 }
    }
}

impl DecoderConfig {
    pub fn with_max_iterations(max_iterations: usize) -> Self {
        Self { max_iterations, ..Self::default() }
    }

    fn validate(&self, order: usize) {
        assert!(self.max_iterations >= 1, "max_iterations must be at least 1");
        assert!(self.damping > 0.0 && self.damping <= 1.0, "damping must lie in (0, 1]");
        assert!(
            self.clip_floor >= 0.0 && self.clip_floor * (order as f64) < 1.0,
            "clip_floor must be nonnegative and below 1/2^q"
        );
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub success: bool,
    /// Number of full flooding iterations run; 0 when the a-priori hard
    /// decision already satisfied the syndrome.
    pub iterations_used: usize,
    pub decoded: Vec<Symbol>,
    pub final_syndrome_match: bool,
}

/// Scratch for one check node of degree up to `k`.
#[derive(Debug, Default)]
struct CheckScratch {
    spectra: Vec<f64>,
    suffix: Vec<f64>,
    prefix: Vec<f64>,
    work: Vec<f64>,
}

impl CheckScratch {
    fn ensure(&mut self, k: usize, order: usize) {
        if self.spectra.len() < k * order {
            self.spectra.resize(k * order, 0.0);
            self.suffix.resize(k * order, 0.0);
        }
        self.prefix.resize(order, 0.0);
        self.work.resize(order, 0.0);
    }
}

/// `out[j]` = message to edge `j` of a check with labels `labels` and
/// syndrome symbol `s`, from the inputs on all other edges.
///
/// `input` and `out` hold `labels.len()` vectors of length `Q` back to back.
#[allow(clippy::too_many_arguments)]
fn check_node(
    order: usize,
    mul: &[Symbol],
    labels: &[Symbol],
    s: Symbol,
    input: &[f64],
    out: &mut [f64],
    clip_floor: f64,
    scratch: &mut CheckScratch,
) {
    let k = labels.len();
    scratch.ensure(k, order);
    let CheckScratch { spectra, suffix, prefix, work } = scratch;

    for (j, &h) in labels.iter().enumerate() {
        let row = &mul[h as usize * order..(h as usize + 1) * order];
        let f = &mut spectra[j * order..(j + 1) * order];
        for (a, &v) in input[j * order..(j + 1) * order].iter().enumerate() {
            f[row[a] as usize] = v;
        }
        wht(f);
    }

    suffix[(k - 1) * order..k * order].fill(1.0);
    for j in (0..k - 1).rev() {
        let (head, tail) = suffix.split_at_mut((j + 1) * order);
        let next = &tail[..order];
        let f = &spectra[(j + 1) * order..(j + 2) * order];
        for ((dst, &a), &b) in head[j * order..].iter_mut().zip(next).zip(f) {
            *dst = a * b;
        }
    }

    prefix.fill(1.0);
    for (t, &h) in labels.iter().enumerate() {
        for ((w, &p), &sfx) in work.iter_mut().zip(prefix.iter()).zip(&suffix[t * order..(t + 1) * order]) {
            *w = p * sfx;
        }
        inverse_wht(work);
        let row = &mul[h as usize * order..(h as usize + 1) * order];
        let dst = &mut out[t * order..(t + 1) * order];
        for (x, d) in dst.iter_mut().enumerate() {
            *d = work[(s ^ row[x]) as usize].max(clip_floor);
        }
        normalize(dst);
        for (p, &f) in prefix.iter_mut().zip(&spectra[t * order..(t + 1) * order]) {
            *p *= f;
        }
    }
}

/// Scales `v` to sum to one; an all-zero or non-finite vector becomes
/// uniform.
#[inline]
fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 && total.is_finite() {
        let inv = 1.0 / total;
        v.iter_mut().for_each(|x| *x *= inv);
    } else {
        let u = 1.0 / v.len() as f64;
        v.fill(u);
    }
}

#[inline]
fn multiply_into(acc: &mut [f64], by: &[f64]) {
    acc.iter_mut().zip(by).for_each(|(a, &b)| *a *= b);
    normalize(acc);
}

/// Lowest index among the maxima.
#[inline]
fn argmax(v: &[f64]) -> Symbol {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best as Symbol
}

fn mul_table(field: &GaloisField) -> Vec<Symbol> {
    (0..field.order()).flat_map(|h| field.mul_row(h as Symbol)).collect()
}

fn check_inputs(field: &GaloisField, messages: &[Vec<f64>], labels: &[Symbol], s: Symbol) {
    assert_eq!(messages.len(), labels.len(), "one label per message");
    assert!(!labels.is_empty(), "check node needs at least one edge");
    assert!(field.contains(s as u32), "syndrome symbol outside the field");
    for (m, &h) in messages.iter().zip(labels) {
        assert_eq!(m.len(), field.order(), "message length must be 2^q");
        assert!(h != 0 && field.contains(h as u32), "labels must be nonzero field elements");
    }
}

/// Check-node update through the Hadamard transform: entry `j` of the
/// result is the message to edge `j` given the other edges' messages under
/// the constraint `Σ labels[j]·x_j = s`.
pub fn check_update(field: &GaloisField, messages: &[Vec<f64>], labels: &[Symbol], s: Symbol) -> Vec<Vec<f64>> {
    check_inputs(field, messages, labels, s);
    let order = field.order();
    let input: Vec<f64> = messages.concat();
    let mut out = vec![0.0; input.len()];
    check_node(order, &mul_table(field), labels, s, &input, &mut out, 0.0, &mut CheckScratch::default());
    out.chunks(order).map(<[f64]>::to_vec).collect()
}

/// Reference check-node update by direct convolution over the field, one
/// edge at a time: `O(k² Q²)`.
pub fn check_update_oracle(field: &GaloisField, messages: &[Vec<f64>], labels: &[Symbol], s: Symbol) -> Vec<Vec<f64>> {
    check_inputs(field, messages, labels, s);
    let order = field.order();
    (0..labels.len())
        .map(|t| {
            // Distribution of Σ_{j≠t} h_j x_j.
            let mut acc = vec![0.0; order];
            acc[0] = 1.0;
            for (j, (m, &h)) in messages.iter().zip(labels).enumerate() {
                if j == t {
                    continue;
                }
                let mut next = vec![0.0; order];
                for (u, &pu) in acc.iter().enumerate() {
                    for (x, &px) in m.iter().enumerate() {
                        next[u ^ field.mul(h, x as Symbol) as usize] += pu * px;
                    }
                }
                acc = next;
            }
            let mut out: Vec<f64> = (0..order).map(|x| acc[(s ^ field.mul(labels[t], x as Symbol)) as usize]).collect();
            normalize(&mut out);
            out
        })
        .collect()
}

/// Decoder bound to one code; owns its message buffers, so one instance
/// per thread.
#[derive(Debug)]
pub struct Decoder<'a> {
    code: &'a SparseParityCheck,
    order: usize,
    mul: Vec<Symbol>,
    /// Start of each check's edge block; length `m + 1`.
    row_start: Vec<usize>,
    edge_label: Vec<Symbol>,
    /// Edge indices per column, flattened with `col_start` offsets.
    col_edges: Vec<usize>,
    col_start: Vec<usize>,
    c2v: Vec<f64>,
    v2c: Vec<f64>,
    fresh: Vec<f64>,
    scratch: CheckScratch,
    suffix: Vec<f64>,
    acc: Vec<f64>,
    syndrome: Vec<Symbol>,
}

impl<'a> Decoder<'a> {
    pub fn new(code: &'a SparseParityCheck) -> Self {
        let order = code.field().order();
        let mut row_start = Vec::with_capacity(code.m() + 1);
        let mut edge_label = Vec::with_capacity(code.edges());
        let mut col_count = vec![0usize; code.n() + 1];
        row_start.push(0);
        for row in code.rows() {
            for &(c, h) in row {
                edge_label.push(h);
                col_count[c as usize + 1] += 1;
            }
            row_start.push(edge_label.len());
        }
        let mut col_start = col_count;
        for j in 1..col_start.len() {
            col_start[j] += col_start[j - 1];
        }
        let mut fill = col_start.clone();
        let mut col_edges = vec![0; edge_label.len()];
        let mut e = 0;
        for row in code.rows() {
            for &(c, _) in row {
                col_edges[fill[c as usize]] = e;
                fill[c as usize] += 1;
                e += 1;
            }
        }
        let edges = edge_label.len();
        let max_col = (0..code.n()).map(|c| col_start[c + 1] - col_start[c]).max().unwrap_or(0);
        Self {
            code,
            order,
            mul: mul_table(code.field()),
            row_start,
            edge_label,
            col_edges,
            col_start,
            c2v: vec![0.0; edges * order],
            v2c: vec![0.0; edges * order],
            fresh: vec![0.0; edges * order],
            scratch: CheckScratch::default(),
            suffix: vec![0.0; max_col * order],
            acc: vec![0.0; order],
            syndrome: vec![0; code.m()],
        }
    }

    pub fn code(&self) -> &SparseParityCheck {
        self.code
    }

    /// Check-to-variable messages after the last `decode`, `Q` per edge in
    /// row-major edge order.
    pub fn check_messages(&self) -> &[f64] {
        &self.c2v
    }

    /// Variable-to-check messages after the last `decode`.
    pub fn variable_messages(&self) -> &[f64] {
        &self.v2c
    }

    /// Decodes the frame whose syndrome is `target`. `apriori` holds `n`
    /// normalized vectors of length `2^q` back to back.
    pub fn decode(&mut self, target: &[Symbol], apriori: &[f64], config: &DecoderConfig) -> DecodeResult {
        let (n, m, order) = (self.code.n(), self.code.m(), self.order);
        assert_eq!(target.len(), m, "syndrome length must equal the number of checks");
        assert_eq!(apriori.len(), n * order, "need one a-priori vector of length 2^q per symbol");
        config.validate(order);

        let mut decoded: Vec<Symbol> = apriori.chunks(order).map(argmax).collect();
        if self.syndrome_matches(&decoded, target) {
            for c in 0..n {
                let prior = &apriori[c * order..(c + 1) * order];
                for &e in &self.col_edges[self.col_start[c]..self.col_start[c + 1]] {
                    self.v2c[e * order..(e + 1) * order].copy_from_slice(prior);
                }
            }
            self.c2v.fill(1.0 / order as f64);
            return DecodeResult { success: true, iterations_used: 0, decoded, final_syndrome_match: true };
        }

        for c in 0..n {
            let prior = &apriori[c * order..(c + 1) * order];
            for &e in &self.col_edges[self.col_start[c]..self.col_start[c + 1]] {
                let dst = &mut self.v2c[e * order..(e + 1) * order];
                dst.copy_from_slice(prior);
                normalize(dst);
            }
        }
        self.c2v.fill(1.0 / order as f64);

        for it in 1..=config.max_iterations {
            self.check_pass(target, config);
            self.variable_pass(apriori, &mut decoded);
            if self.syndrome_matches(&decoded, target) {
                return DecodeResult { success: true, iterations_used: it, decoded, final_syndrome_match: true };
            }
        }
        DecodeResult { success: false, iterations_used: config.max_iterations, decoded, final_syndrome_match: false }
    }

    fn check_pass(&mut self, target: &[Symbol], config: &DecoderConfig) {
        let order = self.order;
        let dst = if config.damping < 1.0 { &mut self.fresh } else { &mut self.c2v };
        for (i, w) in self.row_start.windows(2).enumerate() {
            let (a, b) = (w[0] * order, w[1] * order);
            check_node(
                order,
                &self.mul,
                &self.edge_label[w[0]..w[1]],
                target[i],
                &self.v2c[a..b],
                &mut dst[a..b],
                config.clip_floor,
                &mut self.scratch,
            );
        }
        if config.damping < 1.0 {
            let beta = config.damping;
            for (old, &new) in self.c2v.iter_mut().zip(&self.fresh) {
                *old = beta * new + (1.0 - beta) * *old;
            }
        }
    }

    fn variable_pass(&mut self, apriori: &[f64], decoded: &mut [Symbol]) {
        let order = self.order;
        for (c, z) in decoded.iter_mut().enumerate() {
            let edges = &self.col_edges[self.col_start[c]..self.col_start[c + 1]];
            let k = edges.len();
            // suffix[j] = Π_{i>j} c2v_i
            self.suffix[(k - 1) * order..k * order].fill(1.0);
            for j in (0..k - 1).rev() {
                let (head, tail) = self.suffix.split_at_mut((j + 1) * order);
                let e = edges[j + 1];
                let dst = &mut head[j * order..];
                for ((d, &a), &b) in dst.iter_mut().zip(&tail[..order]).zip(&self.c2v[e * order..(e + 1) * order]) {
                    *d = a * b;
                }
                normalize(dst);
            }
            self.acc.copy_from_slice(&apriori[c * order..(c + 1) * order]);
            for (j, &e) in edges.iter().enumerate() {
                let out = &mut self.v2c[e * order..(e + 1) * order];
                for ((o, &a), &s) in out.iter_mut().zip(&self.acc).zip(&self.suffix[j * order..(j + 1) * order]) {
                    *o = a * s;
                }
                normalize(out);
                multiply_into(&mut self.acc, &self.c2v[e * order..(e + 1) * order]);
            }
            *z = argmax(&self.acc);
        }
    }

    fn syndrome_matches(&mut self, decoded: &[Symbol], target: &[Symbol]) -> bool {
        self.code.syndrome_into(decoded, &mut self.syndrome);
        self.syndrome == target
    }
}

/// One-shot decode; builds a throwaway [`Decoder`].
pub fn decode(code: &SparseParityCheck, target: &[Symbol], apriori: &[f64], config: &DecoderConfig) -> DecodeResult {
    Decoder::new(code).decode(target, apriori, config)
}
