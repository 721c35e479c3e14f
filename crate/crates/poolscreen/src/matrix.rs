//! Balanced binary pooling matrices and their combinatorial certificates.
//!
//! A pooling matrix assigns each of `n` items to `c` of the `m` pools, with
//! every pool holding exactly `r` items. On top of the weight constraints,
//! construction enforces that any two rows and any two columns share at most
//! one common `1`. Matrices with these properties are `(c-1)`-disjunct, have
//! mutual coherence 1, and act as adjacency matrices of unbalanced expander
//! graphs, which is what the decoding guarantees rest on.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Restart budget for the randomized construction.
pub const CONSTRUCT_RESTARTS: usize = 10_000;
/// Placement attempts per column before declaring a dead end.
const COLUMN_TRIES: usize = 200;
/// Default budget (examined candidate subsets) for exhaustive disjunctness checking.
pub const DEFAULT_DISJUNCT_BUDGET: u64 = 10_000_000;
/// Default budget (enumerated connected supports) for the expansion-based RIP-1 check.
pub const DEFAULT_RIP1_BUDGET: u64 = 10_000_000;

/// An `m`×`n` binary pooling matrix with row weight `r` and column weight `c`.
///
/// Entries are stored densely (row-major) and as per-row / per-column index
/// lists. The struct itself does not guarantee the balance invariants: a
/// matrix read from a file may be arbitrary, and [`PoolingMatrix::verify_balanced`]
/// is the check. Matrices produced by [`PoolingMatrix::construct_balanced`]
/// always satisfy them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolingMatrix {
    m: usize,
    n: usize,
    r: usize,
    c: usize,
    seed: u64,
    entries: Vec<u8>,
    rows: Vec<Vec<u32>>,
    cols: Vec<Vec<u32>>,
}

impl PoolingMatrix {
    /// Randomized column-by-column construction: each column picks `c` rows
    /// with remaining capacity, rejecting any placement that would reuse a
    /// row pair (which is exactly what pairwise row/column dot products > 1
    /// would require). Dead ends restart the whole matrix; the restart budget
    /// is [`CONSTRUCT_RESTARTS`]. Deterministic for a fixed seed.
    pub fn construct_balanced(n: usize, m: usize, r: usize, c: usize, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 || r == 0 || c == 0 {
            return Err(Error::InfeasibleParameters(
                "n, m, r, c must all be positive".into(),
            ));
        }
        if n * c != m * r {
            return Err(Error::InfeasibleParameters(format!(
                "weight conservation violated: n*c = {} but m*r = {}",
                n * c,
                m * r
            )));
        }
        if r > n || c > m {
            return Err(Error::InfeasibleParameters(format!(
                "row weight r={r} must not exceed n={n}, column weight c={c} must not exceed m={m}"
            )));
        }
        // Pairwise dot products <= 1 mean every row pair is used by at most
        // one column and every column pair by at most one row.
        if n * (c * (c - 1) / 2) > m * (m - 1) / 2 {
            return Err(Error::InfeasibleParameters(format!(
                "pairwise row constraint infeasible: {n} columns need {} distinct row pairs, only {} exist",
                n * (c * (c - 1) / 2),
                m * (m - 1) / 2
            )));
        }
        if m * (r * (r - 1) / 2) > n * (n - 1) / 2 {
            return Err(Error::InfeasibleParameters(format!(
                "pairwise column constraint infeasible: {m} rows need {} distinct column pairs, only {} exist",
                m * (r * (r - 1) / 2),
                n * (n - 1) / 2
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        'restart: for _ in 0..CONSTRUCT_RESTARTS {
            let mut capacity = vec![r as u32; m];
            let mut used_pairs: HashSet<u64> = HashSet::new();
            let mut cols: Vec<Vec<u32>> = Vec::with_capacity(n);
            for _ in 0..n {
                match place_column(&mut rng, m, c, &capacity, &used_pairs) {
                    Some(sel) => {
                        for a in 0..sel.len() {
                            for b in a + 1..sel.len() {
                                used_pairs.insert(pair_key(sel[a], sel[b], m));
                            }
                        }
                        for &q in &sel {
                            capacity[q as usize] -= 1;
                        }
                        cols.push(sel);
                    }
                    None => continue 'restart,
                }
            }
            return Ok(Self::from_columns(n, m, r, c, seed, cols));
        }
        Err(Error::InfeasibleParameters(format!(
            "randomized construction exhausted {CONSTRUCT_RESTARTS} restarts for (n={n}, m={m}, r={r}, c={c})"
        )))
    }

    fn from_columns(
        n: usize,
        m: usize,
        r: usize,
        c: usize,
        seed: u64,
        cols: Vec<Vec<u32>>,
    ) -> Self {
        let mut entries = vec![0u8; m * n];
        let mut rows: Vec<Vec<u32>> = vec![Vec::with_capacity(r); m];
        for (j, col) in cols.iter().enumerate() {
            for &q in col {
                entries[q as usize * n + j] = 1;
                rows[q as usize].push(j as u32);
            }
        }
        Self {
            m,
            n,
            r,
            c,
            seed,
            entries,
            rows,
            cols,
        }
    }

    /// Build from raw 0/1 entries (row-major). Only the shape is validated;
    /// `r` and `c` are taken as claims to be checked by `verify_balanced`.
    pub fn from_entries(
        m: usize,
        n: usize,
        r: usize,
        c: usize,
        seed: u64,
        entries: Vec<u8>,
    ) -> Result<Self> {
        if entries.len() != m * n {
            return Err(Error::DimensionMismatch {
                what: "matrix entries",
                expected: m * n,
                got: entries.len(),
            });
        }
        if entries.iter().any(|&e| e > 1) {
            return Err(Error::Parse("matrix entries must be 0 or 1".into()));
        }
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); m];
        let mut cols: Vec<Vec<u32>> = vec![Vec::new(); n];
        for q in 0..m {
            for j in 0..n {
                if entries[q * n + j] == 1 {
                    rows[q].push(j as u32);
                    cols[j].push(q as u32);
                }
            }
        }
        Ok(Self {
            m,
            n,
            r,
            c,
            seed,
            entries,
            rows,
            cols,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn entry(&self, q: usize, j: usize) -> u8 {
        self.entries[q * self.n + j]
    }

    /// Items tested by pool `q`.
    #[inline]
    pub fn pool_items(&self, q: usize) -> &[u32] {
        &self.rows[q]
    }

    /// Pools that item `j` takes part in.
    #[inline]
    pub fn item_pools(&self, j: usize) -> &[u32] {
        &self.cols[j]
    }

    /// Check every balance invariant: exact row/column weights, weight
    /// conservation, and pairwise row/column dot products at most 1.
    pub fn verify_balanced(&self) -> bool {
        if self.n * self.c != self.m * self.r {
            return false;
        }
        if self.rows.iter().any(|row| row.len() != self.r) {
            return false;
        }
        if self.cols.iter().any(|col| col.len() != self.c) {
            return false;
        }
        // Row dot products: a pair of rows sharing two columns means some
        // column pair co-occurs in both of those rows, and vice versa.
        let mut row_pairs: HashSet<u64> = HashSet::new();
        for col in &self.cols {
            for a in 0..col.len() {
                for b in a + 1..col.len() {
                    if !row_pairs.insert(pair_key(col[a], col[b], self.m)) {
                        return false;
                    }
                }
            }
        }
        let mut col_pairs: HashSet<u64> = HashSet::new();
        for row in &self.rows {
            for a in 0..row.len() {
                for b in a + 1..row.len() {
                    if !col_pairs.insert(pair_key(row[a], row[b], self.n)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Maximum dot product over distinct column pairs (unnormalized count form).
    pub fn mutual_coherence(&self) -> usize {
        let mut counts: std::collections::HashMap<u64, usize> = std::collections::HashMap::new();
        for row in &self.rows {
            for a in 0..row.len() {
                for b in a + 1..row.len() {
                    *counts.entry(pair_key(row[a], row[b], self.n)).or_insert(0) += 1;
                }
            }
        }
        counts.values().copied().max().unwrap_or(0)
    }

    /// Exhaustively decide whether the matrix is `d`-disjunct: no column's
    /// support is contained in the union of `d` other columns' supports.
    ///
    /// The search branches on candidate covering columns rather than blindly
    /// enumerating all `C(n-1, d)` subsets; `budget` caps the number of
    /// candidate subsets examined.
    pub fn check_disjunctness(&self, d: usize, budget: u64) -> Result<bool> {
        if d == 0 {
            return Err(Error::InvalidConfig(
                "disjunctness order must be >= 1".into(),
            ));
        }
        let depth = d.min(self.n.saturating_sub(1));
        let mut work = 0u64;
        for j in 0..self.n {
            if self.column_coverable(j, depth, &mut work, budget)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Can the support of column `j` be covered by at most `d` other columns?
    fn column_coverable(&self, j: usize, d: usize, work: &mut u64, budget: u64) -> Result<bool> {
        let support = &self.cols[j];
        let weight = support.len();
        if weight == 0 {
            // Empty column is covered by anything, including the empty union.
            return Ok(true);
        }
        debug_assert!(weight <= 64, "column weight above 64 not supported");
        // Candidate columns overlapping j, with the subset of j's support they cover.
        let mut cover_mask: std::collections::HashMap<u32, u64> = std::collections::HashMap::new();
        for (local, &q) in support.iter().enumerate() {
            for &i in self.pool_items(q as usize) {
                if i as usize != j {
                    *cover_mask.entry(i).or_insert(0) |= 1u64 << local;
                }
            }
        }
        let masks: Vec<u64> = cover_mask.into_values().collect();
        let mut per_row: Vec<Vec<usize>> = vec![Vec::new(); weight];
        for (ci, &mask) in masks.iter().enumerate() {
            let mut bits = mask;
            while bits != 0 {
                let local = bits.trailing_zeros() as usize;
                per_row[local].push(ci);
                bits &= bits - 1;
            }
        }
        let full = if weight == 64 {
            u64::MAX
        } else {
            (1u64 << weight) - 1
        };
        cover_dfs(full, d, &per_row, &masks, work, budget)
    }

    /// Expansion-based RIP-1 certificate of order `2k`.
    ///
    /// Finds the worst vertex-expansion deficit
    /// `delta = max_S (1 - |N(S)|/(c|S|))` over column subsets `S` with
    /// `|S| <= 2k`, where `N(S)` is the set of rows touched by `S`. A deficit
    /// of `delta` on all such supports certifies the l1 restricted isometry
    /// `(1-2*delta) * c * ||x||_1 <= ||Mx||_1 <= c * ||x||_1` for `2k`-sparse
    /// vectors. `epsilon = (k-1)/(2c)` is the analytic expander parameter
    /// these matrices satisfy whenever `k < 2c+1`.
    ///
    /// The deficit of a subset that splits into row-disjoint parts is a
    /// weighted average of the parts' deficits, so the maximum is attained on
    /// a subset that is connected in the column-overlap graph. Only connected
    /// subsets are enumerated; `budget` caps how many.
    pub fn check_rip1(&self, k: usize, budget: u64) -> Result<Rip1Certificate> {
        if k == 0 {
            return Err(Error::InvalidConfig("sparsity k must be >= 1".into()));
        }
        if k > 2 * self.c {
            return Err(Error::InfeasibleParameters(format!(
                "k = {k} out of range: expander guarantee requires k < 2c+1 = {}",
                2 * self.c + 1
            )));
        }
        let s_max = (2 * k).min(self.n);
        let words = self.m.div_ceil(64);
        let col_masks: Vec<Vec<u64>> = (0..self.n)
            .map(|j| {
                let mut mask = vec![0u64; words];
                for &q in &self.cols[j] {
                    mask[q as usize / 64] |= 1u64 << (q as usize % 64);
                }
                mask
            })
            .collect();
        // Column-overlap adjacency, ascending and deduplicated.
        let adjacency: Vec<Vec<u32>> = (0..self.n)
            .map(|j| {
                let mut nbrs: Vec<u32> = self.cols[j]
                    .iter()
                    .flat_map(|&q| self.rows[q as usize].iter().copied())
                    .filter(|&i| i as usize != j)
                    .collect();
                nbrs.sort_unstable();
                nbrs.dedup();
                nbrs
            })
            .collect();
        let mut walk = RipWalk {
            col_masks: &col_masks,
            adjacency: &adjacency,
            c: self.c,
            words,
            s_max,
            budget,
            visited: 0,
            worst: 0.0,
            acc: vec![0u64; words],
        };
        for root in 0..self.n {
            let mut in_set = vec![false; self.n];
            let mut banned = vec![false; self.n];
            in_set[root] = true;
            let acc: Vec<u64> = col_masks[root].clone();
            walk.acc.copy_from_slice(&acc);
            walk.note(1, &acc)?;
            let frontier: Vec<u32> = adjacency[root]
                .iter()
                .copied()
                .filter(|&i| (i as usize) > root)
                .collect();
            walk.grow(root, &acc, 1, &frontier, &mut in_set, &mut banned)?;
        }
        Ok(Rip1Certificate {
            k,
            delta: Some(walk.worst),
            epsilon: expander_epsilon(self.c, k),
            exhaustive: true,
        })
    }

    /// Canonical text serialization: header `m n r c seed` followed by `m`
    /// lines of `n` characters in `{0,1}`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.m * (self.n + 1) + 32);
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            self.m, self.n, self.r, self.c, self.seed
        );
        for q in 0..self.m {
            for j in 0..self.n {
                out.push(if self.entries[q * self.n + j] == 1 {
                    '1'
                } else {
                    '0'
                });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!(
                "matrix header must be `m n r c seed`, got {} fields",
                fields.len()
            )));
        }
        let parse = |s: &str, name: &str| -> Result<u64> {
            s.parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad {name} in matrix header: {s:?}")))
        };
        let m = parse(fields[0], "m")? as usize;
        let n = parse(fields[1], "n")? as usize;
        let r = parse(fields[2], "r")? as usize;
        let c = parse(fields[3], "c")? as usize;
        let seed = parse(fields[4], "seed")?;
        let mut entries = Vec::with_capacity(m * n);
        for (li, line) in lines.enumerate() {
            if li >= m {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::Parse(format!("matrix file has more than {m} rows")));
            }
            if line.len() != n {
                return Err(Error::Parse(format!(
                    "matrix row {li} has {} characters, expected {n}",
                    line.len()
                )));
            }
            for ch in line.chars() {
                match ch {
                    '0' => entries.push(0),
                    '1' => entries.push(1),
                    other => {
                        return Err(Error::Parse(format!(
                            "matrix row {li} contains {other:?}, expected 0/1"
                        )))
                    }
                }
            }
        }
        if entries.len() != m * n {
            return Err(Error::Parse(format!(
                "matrix file has {} rows, expected {m}",
                entries.len() / n.max(1)
            )));
        }
        Self::from_entries(m, n, r, c, seed, entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Assemble a [`MatrixCertificate`], optionally running the exhaustive
    /// disjunctness and RIP-1 checks.
    pub fn certify(&self, opts: &CertifyOptions) -> Result<MatrixCertificate> {
        let balanced = self.verify_balanced();
        let floor = if balanced {
            self.c.saturating_sub(1)
        } else {
            0
        };
        let mut order = floor;
        if let Some(d) = opts.disjunct {
            // Disjunctness is monotone downward, so scan from the requested
            // order toward the analytic floor.
            let mut probe = d;
            loop {
                if probe <= floor {
                    break;
                }
                if self.check_disjunctness(probe, opts.disjunct_budget)? {
                    order = probe;
                    break;
                }
                probe -= 1;
            }
        }
        let rip1 = match opts.rip1_k {
            Some(k) => match self.check_rip1(k, opts.rip1_budget) {
                Ok(cert) => Some(cert),
                // Enumeration too large: fall back to the analytic expander
                // parameter, leaving delta unverified.
                Err(Error::BudgetExceeded { .. }) => Some(Rip1Certificate {
                    k,
                    delta: None,
                    epsilon: expander_epsilon(self.c, k),
                    exhaustive: false,
                }),
                Err(other) => return Err(other),
            },
            None => None,
        };
        let bound = erdos_cardinality_bound(self.m, self.c, self.c.saturating_sub(1).max(1));
        Ok(MatrixCertificate {
            balanced,
            disjunctness_order: order,
            mutual_coherence: self.mutual_coherence(),
            rip1,
            erdos_bound_ok: (self.n as u64) <= bound,
        })
    }
}

fn cover_dfs(
    uncovered: u64,
    remaining: usize,
    per_row: &[Vec<usize>],
    masks: &[u64],
    work: &mut u64,
    budget: u64,
) -> Result<bool> {
    if uncovered == 0 {
        return Ok(true);
    }
    if remaining == 0 {
        return Ok(false);
    }
    *work += 1;
    if *work > budget {
        return Err(Error::BudgetExceeded {
            budget,
            needed: *work,
        });
    }
    let row = uncovered.trailing_zeros() as usize;
    for &ci in &per_row[row] {
        if cover_dfs(
            uncovered & !masks[ci],
            remaining - 1,
            per_row,
            masks,
            work,
            budget,
        )? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Enumerator for connected column subsets, tracking the worst expansion deficit.
struct RipWalk<'a> {
    col_masks: &'a [Vec<u64>],
    adjacency: &'a [Vec<u32>],
    c: usize,
    words: usize,
    s_max: usize,
    budget: u64,
    visited: u64,
    worst: f64,
    acc: Vec<u64>,
}

impl RipWalk<'_> {
    fn note(&mut self, size: usize, rows: &[u64]) -> Result<()> {
        self.visited += 1;
        if self.visited > self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
                needed: self.visited,
            });
        }
        let touched: u32 = rows.iter().map(|w| w.count_ones()).sum();
        let deficit = 1.0 - touched as f64 / (self.c * size) as f64;
        if deficit > self.worst {
            self.worst = deficit;
        }
        Ok(())
    }

    /// Classic duplicate-free connected-subset enumeration: each frontier
    /// vertex is either taken (extending the set) or banned for the rest of
    /// this subtree. Only vertices above the root are eligible, so every
    /// connected subset is visited exactly once, rooted at its minimum.
    fn grow(
        &mut self,
        root: usize,
        rows: &[u64],
        size: usize,
        frontier: &[u32],
        in_set: &mut [bool],
        banned: &mut [bool],
    ) -> Result<()> {
        if size == self.s_max {
            return Ok(());
        }
        for (pos, &next) in frontier.iter().enumerate() {
            let j = next as usize;
            if banned[j] || in_set[j] {
                continue;
            }
            in_set[j] = true;
            let mut child = vec![0u64; self.words];
            for w in 0..self.words {
                child[w] = rows[w] | self.col_masks[j][w];
            }
            self.note(size + 1, &child)?;
            // New frontier: the untried part of the current one, plus j's
            // neighbours above the root.
            let mut next_frontier: Vec<u32> = frontier[pos + 1..].to_vec();
            for &nb in &self.adjacency[j] {
                let v = nb as usize;
                if v > root && !in_set[v] && !banned[v] {
                    next_frontier.push(nb);
                }
            }
            self.grow(root, &child, size + 1, &next_frontier, in_set, banned)?;
            in_set[j] = false;
            banned[j] = true;
        }
        // Undo the bans on the way out so siblings in the caller see a clean slate.
        for &next in frontier {
            banned[next as usize] = false;
        }
        Ok(())
    }
}

fn place_column(
    rng: &mut ChaCha8Rng,
    m: usize,
    c: usize,
    capacity: &[u32],
    used_pairs: &HashSet<u64>,
) -> Option<Vec<u32>> {
    let avail = capacity.iter().filter(|&&cap| cap > 0).count();
    if avail < c {
        return None;
    }
    'attempt: for _ in 0..COLUMN_TRIES {
        let mut sel: Vec<u32> = Vec::with_capacity(c);
        let mut remaining: i64 = capacity.iter().map(|&x| x as i64).sum();
        let mut taken = vec![false; m];
        for _ in 0..c {
            // Draw a row with probability proportional to remaining capacity.
            let mut x = rng.gen_range(0..remaining);
            let mut pick = usize::MAX;
            for (q, &cap) in capacity.iter().enumerate() {
                if taken[q] || cap == 0 {
                    continue;
                }
                x -= cap as i64;
                if x < 0 {
                    pick = q;
                    break;
                }
            }
            debug_assert!(pick != usize::MAX);
            for &prev in &sel {
                if used_pairs.contains(&pair_key(prev, pick as u32, m)) {
                    continue 'attempt;
                }
            }
            remaining -= capacity[pick] as i64;
            taken[pick] = true;
            sel.push(pick as u32);
        }
        sel.sort_unstable();
        return Some(sel);
    }
    None
}

#[inline]
fn pair_key(a: u32, b: u32, dim: usize) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    lo as u64 * dim as u64 + hi as u64
}

/// Binomial coefficient in u128, saturating on overflow.
fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Upper bound on the number of weight-`k` columns an `n`-row matrix can have
/// while remaining `r`-disjunct: `floor(C(n,t) / C(k-1,t-1))` with
/// `t = ceil(k/r)`.
pub fn erdos_cardinality_bound(n: usize, k: usize, r: usize) -> u64 {
    assert!(r >= 1 && k >= 1 && k <= n, "need 1 <= r and 1 <= k <= n");
    let t = k.div_ceil(r) as u64;
    let num = binomial(n as u64, t);
    let den = binomial(k as u64 - 1, t - 1).max(1);
    (num / den).min(u64::MAX as u128) as u64
}

/// Counting lower bound on the number of pooled tests needed to identify `k`
/// defectives among `n` items: `ceil(k log2(n/k))` for binary outcomes, and
/// that divided by `log2(k+1)` when tests report defective counts.
pub fn qgt_lower_bound(n: usize, k: usize, quantitative: bool) -> u64 {
    assert!(k >= 1 && k <= n, "need 1 <= k <= n");
    let base = k as f64 * (n as f64 / k as f64).log2();
    let value = if quantitative {
        base / ((k + 1) as f64).log2()
    } else {
        base
    };
    // Tiny slack so values that are mathematically integral do not round up.
    (value - 1e-9).ceil().max(0.0) as u64
}

/// Analytic expander parameter `(k-1)/(2c)` for balanced matrices of column
/// weight `c`; valid (below 1) whenever `k < 2c+1`.
pub fn expander_epsilon(c: usize, k: usize) -> f64 {
    (k as f64 - 1.0) / (2.0 * c as f64)
}

/// Result of the expansion-based RIP-1 check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rip1Certificate {
    /// Sparsity the certificate speaks about (supports up to size `2k`).
    pub k: usize,
    /// Worst observed vertex-expansion deficit over supports of size `<= 2k`;
    /// absent when the enumeration exceeded its budget.
    pub delta: Option<f64>,
    /// Analytic expander parameter `(k-1)/(2c)`.
    pub epsilon: f64,
    /// Whether `delta` comes from a completed enumeration.
    pub exhaustive: bool,
}

/// Certified combinatorial properties of a pooling matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixCertificate {
    pub balanced: bool,
    /// Largest verified disjunctness order (analytic floor `c-1` when only
    /// the balance invariants are known).
    pub disjunctness_order: usize,
    pub mutual_coherence: usize,
    pub rip1: Option<Rip1Certificate>,
    /// Whether the column count is consistent with the cardinality bound for
    /// `(c-1)`-disjunct column-weight-`c` matrices.
    pub erdos_bound_ok: bool,
}

impl MatrixCertificate {
    /// True when every checked property holds.
    pub fn passed(&self, requested_disjunct: Option<usize>) -> bool {
        if !self.balanced || !self.erdos_bound_ok {
            return false;
        }
        if let Some(d) = requested_disjunct {
            if self.disjunctness_order < d {
                return false;
            }
        }
        true
    }
}

/// Options for [`PoolingMatrix::certify`].
#[derive(Debug, Clone)]
pub struct CertifyOptions {
    /// Run the exhaustive disjunctness check at this order.
    pub disjunct: Option<usize>,
    /// Run the RIP-1 expansion check at this sparsity.
    pub rip1_k: Option<usize>,
    pub disjunct_budget: u64,
    pub rip1_budget: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            disjunct: None,
            rip1_k: None,
            disjunct_budget: DEFAULT_DISJUNCT_BUDGET,
            rip1_budget: DEFAULT_RIP1_BUDGET,
        }
    }
}
