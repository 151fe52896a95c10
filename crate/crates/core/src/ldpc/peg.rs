//! Progressive edge growth.
//!
//! Variable nodes are processed in ascending degree order. Each new edge of
//! a variable goes to the check node that is farthest from it in the
//! current graph (unreachable counts as farthest), ties broken by lowest
//! current check degree and then uniformly at random.
//!
//! Check degrees are kept concentrated: with `E` edges over `m` checks no
//! check may exceed `ceil(E/m)` and at most `E mod m` checks may reach it.
//! On small graphs that cap can corner the greedy search into a 4-cycle, so
//! the construction is repeated with derived seeds (up to [`ATTEMPTS`]
//! times) and the attempt with the fewest repeated check pairs is kept.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{node_degrees_from_lambda, CodeError, Profile};
use crate::source::derive_seed;

/// Constructions tried before settling for one with 4-cycles.
pub const ATTEMPTS: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PegConfig {
    pub seed: u64,
    /// Deepest BFS level explored when looking for a distant check. `None`
    /// expands until every check is reached or the tree stops growing.
    pub max_depth: Option<usize>,
}

impl PegConfig {
    pub fn new(seed: u64) -> Self {
        Self { seed, max_depth: None }
    }
}

/// Binary Tanner graph produced by [`peg_construct`].
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    n: usize,
    rows: Vec<Vec<u32>>,
    profile: Profile,
    seed: u64,
}

impl Skeleton {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Column indices of each check, ascending.
    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn column_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        self.rows.iter().flatten().for_each(|&c| deg[c as usize] += 1);
        deg
    }
}

const UNREACHED: u32 = u32::MAX;

struct Builder {
    var_adj: Vec<Vec<u32>>,
    chk_adj: Vec<Vec<u32>>,
    /// BFS bookkeeping; an entry is valid when its stamp matches `stamp`.
    chk_stamp: Vec<u32>,
    chk_depth: Vec<u32>,
    var_stamp: Vec<u32>,
    stamp: u32,
    frontier: Vec<u32>,
    next: Vec<u32>,
    ties: Vec<u32>,
    base: usize,
    extra: usize,
    at_ceiling: usize,
    max_depth: Option<usize>,
    rng: ChaCha8Rng,
}

impl Builder {
    fn depth(&self, c: usize) -> u32 {
        if self.chk_stamp[c] == self.stamp {
            self.chk_depth[c]
        } else {
            UNREACHED
        }
    }

    fn has_capacity(&self, c: usize) -> bool {
        let deg = self.chk_adj[c].len();
        deg < self.base || (deg == self.base && self.at_ceiling < self.extra)
    }

    /// Whether `c` may receive the next edge of `v`.
    fn is_candidate(&self, v: usize, c: usize, respect_capacity: bool) -> bool {
        !self.var_adj[v].contains(&(c as u32)) && (!respect_capacity || self.has_capacity(c))
    }

    /// Labels checks with their distance from `v` (in check levels). Stops
    /// once all `pending` candidates have been reached, since further levels
    /// cannot change their depths.
    fn expand(&mut self, v: usize, respect_capacity: bool, mut pending: usize) {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.chk_stamp.fill(0);
            self.var_stamp.fill(0);
            self.stamp = 1;
        }
        let stamp = self.stamp;
        self.var_stamp[v] = stamp;
        self.frontier.clear();
        for &c in &self.var_adj[v] {
            self.chk_stamp[c as usize] = stamp;
            self.chk_depth[c as usize] = 0;
            self.frontier.push(c);
        }
        let mut level = 0u32;
        while !self.frontier.is_empty() && pending > 0 {
            if self.max_depth.is_some_and(|d| level as usize >= d) {
                break;
            }
            self.next.clear();
            for i in 0..self.frontier.len() {
                let c = self.frontier[i] as usize;
                for j in 0..self.chk_adj[c].len() {
                    let u = self.chk_adj[c][j] as usize;
                    if self.var_stamp[u] == stamp {
                        continue;
                    }
                    self.var_stamp[u] = stamp;
                    for k in 0..self.var_adj[u].len() {
                        let c2 = self.var_adj[u][k] as usize;
                        if self.chk_stamp[c2] != stamp {
                            self.chk_stamp[c2] = stamp;
                            self.chk_depth[c2] = level + 1;
                            self.next.push(c2 as u32);
                            if self.is_candidate(v, c2, respect_capacity) {
                                pending -= 1;
                            }
                        }
                    }
                }
            }
            level += 1;
            std::mem::swap(&mut self.frontier, &mut self.next);
        }
    }

    /// Picks the check for the next edge of `v`, or `None` if `v` is
    /// already connected to every check.
    fn select(&mut self, v: usize) -> Option<usize> {
        let m = self.chk_adj.len();
        for respect_capacity in [true, false] {
            let pending = (0..m).filter(|&c| self.is_candidate(v, c, respect_capacity)).count();
            if pending == 0 {
                continue;
            }
            self.expand(v, respect_capacity, pending);
            self.ties.clear();
            let mut best: Option<(u32, usize)> = None;
            for c in 0..m {
                if !self.is_candidate(v, c, respect_capacity) {
                    continue;
                }
                let key = (self.depth(c), self.chk_adj[c].len());
                let better = match best {
                    None => true,
                    Some((bd, bdeg)) => key.0 > bd || (key.0 == bd && key.1 < bdeg),
                };
                if better {
                    best = Some(key);
                    self.ties.clear();
                }
                if best == Some(key) {
                    self.ties.push(c as u32);
                }
            }
            let pick = self.rng.random_range(0..self.ties.len());
            return Some(self.ties[pick] as usize);
        }
        None
    }

    fn connect(&mut self, v: usize, c: usize) {
        self.var_adj[v].push(c as u32);
        self.chk_adj[c].push(v as u32);
        if self.chk_adj[c].len() == self.base + 1 {
            self.at_ceiling += 1;
        }
    }
}

/// Grows an `m × n` binary Tanner graph for `profile`.
pub fn peg_construct(n: usize, m: usize, profile: &Profile, config: &PegConfig) -> Result<Skeleton, CodeError> {
    if m == 0 || m >= n {
        return Err(CodeError::Dimensions { n, m });
    }
    let degrees = match profile {
        Profile::Regular { dv } => vec![*dv; n],
        Profile::Irregular(dist) => node_degrees_from_lambda(dist, n),
    };
    if let Some(&bad) = degrees.iter().find(|&&d| d == 0 || d > m) {
        return Err(CodeError::Unrealizable(format!(
            "variable degree {bad} needs between 1 and m = {m} distinct checks"
        )));
    }
    let mut best: Option<(usize, Vec<Vec<u32>>)> = None;
    for attempt in 0..ATTEMPTS {
        let seed = if attempt == 0 { config.seed } else { derive_seed(config.seed, &[attempt]) };
        let rows = grow(&degrees, m, config.max_depth, seed)?;
        let repeats = repeated_check_pairs(&rows, n);
        if best.as_ref().is_none_or(|(r, _)| repeats < *r) {
            best = Some((repeats, rows));
        }
        if repeats == 0 {
            break;
        }
    }
    let (_, rows) = best.expect("at least one attempt");
    Ok(Skeleton { n, rows, profile: profile.clone(), seed: config.seed })
}

fn grow(degrees: &[usize], m: usize, max_depth: Option<usize>, seed: u64) -> Result<Vec<Vec<u32>>, CodeError> {
    let n = degrees.len();
    let total: usize = degrees.iter().sum();
    let mut b = Builder {
        var_adj: degrees.iter().map(|&d| Vec::with_capacity(d)).collect(),
        chk_adj: vec![Vec::new(); m],
        chk_stamp: vec![0; m],
        chk_depth: vec![0; m],
        var_stamp: vec![0; n],
        stamp: 0,
        frontier: Vec::new(),
        next: Vec::new(),
        ties: Vec::new(),
        base: total / m,
        extra: total % m,
        at_ceiling: 0,
        max_depth,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    for (v, &deg) in degrees.iter().enumerate() {
        for _ in 0..deg {
            let c = b.select(v).ok_or_else(|| CodeError::Unrealizable(format!("no free check for variable {v}")))?;
            b.connect(v, c);
        }
    }
    Ok(b.chk_adj
        .into_iter()
        .map(|mut r| {
            r.sort_unstable();
            r
        })
        .collect())
}

/// Number of check pairs shared by more than one variable, counted with
/// multiplicity; zero exactly when the graph has no 4-cycle.
fn repeated_check_pairs(rows: &[Vec<u32>], n: usize) -> usize {
    let mut cols = vec![Vec::new(); n];
    for (r, row) in rows.iter().enumerate() {
        for &c in row {
            cols[c as usize].push(r as u32);
        }
    }
    let mut pairs: Vec<(u32, u32)> = cols
        .iter()
        .flat_map(|col| col.iter().enumerate().flat_map(move |(i, &a)| col[i + 1..].iter().map(move |&b| (a, b))))
        .collect();
    pairs.sort_unstable();
    pairs.windows(2).filter(|w| w[0] == w[1]).count()
}
