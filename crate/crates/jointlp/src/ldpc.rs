//! Binary LDPC code representation, random regular construction, syndrome
//! checks, and the alist interchange format.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A binary parity-check code given by its Tanner graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    n: usize,
    m: usize,
    var_neighbors: Vec<Vec<usize>>,
    check_neighbors: Vec<Vec<usize>>,
}

impl LdpcCode {
    /// Builds a code from per-check neighbor lists, validating indices and
    /// rejecting repeated edges.
    pub fn from_checks(n: usize, checks: Vec<Vec<usize>>) -> Result<Self> {
        let m = checks.len();
        let mut var_neighbors = vec![Vec::new(); n];
        for (j, row) in checks.iter().enumerate() {
            let mut seen = HashSet::new();
            for &i in row {
                if i >= n {
                    return Err(Error::InvalidCode(format!(
                        "check {j} references variable {i} out of range (n = {n})"
                    )));
                }
                if !seen.insert(i) {
                    return Err(Error::InvalidCode(format!(
                        "check {j} references variable {i} twice (double edge)"
                    )));
                }
                var_neighbors[i].push(j);
            }
        }
        Ok(Self {
            n,
            m,
            var_neighbors,
            check_neighbors: checks,
        })
    }

    /// Block length `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of parity checks `M`.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Checks adjacent to variable `i`.
    pub fn var_neighbors(&self, i: usize) -> &[usize] {
        &self.var_neighbors[i]
    }

    /// Variables adjacent to check `j`.
    pub fn check_neighbors(&self, j: usize) -> &[usize] {
        &self.check_neighbors[j]
    }

    /// Design rate `R = 1 - M/N`.
    pub fn rate(&self) -> f64 {
        1.0 - self.m as f64 / self.n as f64
    }

    /// Average check degree per bit: the total edge count divided by `N`.
    pub fn avg_check_degree_per_bit(&self) -> f64 {
        let edges: usize = self.check_neighbors.iter().map(|r| r.len()).sum();
        edges as f64 / self.n as f64
    }

    /// True when some check has fewer than 3 neighbors; the cyclic-schedule
    /// convergence guarantee needs every row weight to be at least 3.
    pub fn convergence_warning(&self) -> bool {
        self.check_neighbors.iter().any(|r| r.len() < 3)
    }

    /// True iff every parity check of `word` sums to zero mod 2.
    pub fn syndrome_ok(&self, word: &[u8]) -> bool {
        assert_eq!(word.len(), self.n, "word length must match block length");
        self.check_neighbors
            .iter()
            .all(|row| row.iter().map(|&i| word[i] as u32).sum::<u32>() % 2 == 0)
    }

    /// Shortest cycle length of the Tanner graph, or `None` if acyclic.
    /// Breadth-first search from every variable node; cycles through a
    /// bipartite graph have even length >= 4.
    pub fn girth(&self) -> Option<usize> {
        // Nodes: variables 0..n, checks n..n+m.
        let total = self.n + self.m;
        let neighbors = |v: usize| -> &[usize] {
            if v < self.n {
                &self.var_neighbors[v]
            } else {
                &self.check_neighbors[v - self.n]
            }
        };
        let mut best: Option<usize> = None;
        for root in 0..self.n {
            let mut dist = vec![usize::MAX; total];
            let mut parent = vec![usize::MAX; total];
            let mut queue = std::collections::VecDeque::new();
            dist[root] = 0;
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                let offset = if v < self.n { self.n } else { 0 };
                for &w_rel in neighbors(v) {
                    let w = w_rel + offset;
                    if w == parent[v] {
                        continue;
                    }
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        parent[w] = v;
                        queue.push_back(w);
                    } else {
                        // Closed walk through the BFS tree; its length upper
                        // bounds the girth, and rooting at a vertex on a
                        // shortest cycle attains it.
                        let cycle = dist[v] + dist[w] + 1;
                        best = Some(best.map_or(cycle, |b| b.min(cycle)));
                    }
                }
            }
        }
        best
    }
}

/// Single parity-check code over all `n >= 2` bits.
pub fn spc(n: usize) -> Result<LdpcCode> {
    if n < 2 {
        return Err(Error::InvalidCode("SPC needs n >= 2".into()));
    }
    LdpcCode::from_checks(n, vec![(0..n).collect()])
}

/// A reproducible codeword of weight about `N/2`: Gaussian elimination
/// over GF(2) exposes the free variables, half of which are set from the
/// seeded RNG. Joint-decoder performance depends on the transmitted word
/// (the channel is not symmetric), so experiments fix one.
pub fn random_codeword(code: &LdpcCode, seed: u64) -> Vec<u8> {
    let n = code.n();
    let m = code.m();
    let mut rows: Vec<Vec<u8>> = (0..m)
        .map(|j| {
            let mut row = vec![0u8; n];
            for &i in code.check_neighbors(j) {
                row[i] = 1;
            }
            row
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for c in 0..n {
        if rank >= m {
            break;
        }
        if let Some(pr) = (rank..m).find(|&pr| rows[pr][c] == 1) {
            rows.swap(rank, pr);
            let pivot_row = rows[rank].clone();
            for (idx, row) in rows.iter_mut().enumerate() {
                if idx != rank && row[c] == 1 {
                    for (a, b) in row.iter_mut().zip(&pivot_row) {
                        *a ^= b;
                    }
                }
            }
            pivot_cols.push(c);
            rank += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let mut word = vec![0u8; n];
    free.shuffle(&mut rng);
    let take = free.len() / 2;
    for &c in free.iter().take(take) {
        word[c] = 1;
    }
    for (row_idx, &pc) in pivot_cols.iter().enumerate() {
        let parity = rows[row_idx]
            .iter()
            .zip(&word)
            .enumerate()
            .filter(|(c, (&h, &w))| *c != pc && h == 1 && w == 1)
            .count();
        word[pc] = (parity % 2) as u8;
    }
    debug_assert!(code.syndrome_ok(&word));
    word
}

/// Options for [`random_regular_with`].
#[derive(Debug, Clone, Copy)]
pub struct RegularCodeOptions {
    /// Reject edges that would close a 4-cycle. Some degree combinations
    /// make this impossible by counting (more variable pairs demanded than
    /// exist), in which case it must be disabled.
    pub avoid_four_cycles: bool,
    /// Construction restarts before giving up.
    pub max_retries: usize,
}

impl Default for RegularCodeOptions {
    fn default() -> Self {
        Self {
            avoid_four_cycles: true,
            max_retries: 1000,
        }
    }
}

/// Random `(dv, dc)`-regular code with no double edges and girth >= 6,
/// reproducible from the seed.
pub fn random_regular(n: usize, dv: usize, dc: usize, seed: u64) -> Result<LdpcCode> {
    random_regular_with(n, dv, dc, seed, RegularCodeOptions::default())
}

/// Random regular construction with explicit options; greedy progressive
/// edge placement with bounded restarts.
pub fn random_regular_with(
    n: usize,
    dv: usize,
    dc: usize,
    seed: u64,
    opts: RegularCodeOptions,
) -> Result<LdpcCode> {
    if dv == 0 || dc == 0 || n == 0 {
        return Err(Error::InvalidCode("degrees and length must be positive".into()));
    }
    if (n * dv) % dc != 0 {
        return Err(Error::InvalidCode(format!(
            "n*dv = {} not divisible by dc = {dc}",
            n * dv
        )));
    }
    let m = n * dv / dc;
    if dv > m {
        return Err(Error::InvalidCode(format!(
            "variable degree {dv} exceeds check count {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..opts.max_retries {
        if let Some(checks) = try_build_regular(n, dv, dc, m, opts.avoid_four_cycles, &mut rng) {
            return LdpcCode::from_checks(n, checks);
        }
    }
    Err(Error::CodeConstruction {
        retries: opts.max_retries,
        reason: format!("could not place a ({dv},{dc})-regular graph with the requested girth"),
    })
}

fn try_build_regular<R: Rng>(
    n: usize,
    dv: usize,
    dc: usize,
    m: usize,
    avoid_four_cycles: bool,
    rng: &mut R,
) -> Option<Vec<Vec<usize>>> {
    let mut check_rows: Vec<Vec<usize>> = vec![Vec::with_capacity(dc); m];
    let mut var_rows: Vec<Vec<usize>> = vec![Vec::with_capacity(dv); n];
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut forbidden = vec![false; m];
    for &i in &order {
        for _ in 0..dv {
            // A check j is forbidden when it is already adjacent to i, or
            // when adding (i, j) would close a 4-cycle: some variable of j
            // already shares a check with i. Walking the 2-hop
            // neighborhood of i marks exactly those checks.
            forbidden.iter_mut().for_each(|f| *f = false);
            for &jj in &var_rows[i] {
                forbidden[jj] = true;
                if avoid_four_cycles {
                    for &other in &check_rows[jj] {
                        for &j2 in &var_rows[other] {
                            forbidden[j2] = true;
                        }
                    }
                }
            }
            let mut candidates: Vec<usize> = (0..m)
                .filter(|&j| check_rows[j].len() < dc && !forbidden[j])
                .collect();
            if candidates.is_empty() {
                return None;
            }
            // Prefer the least-filled checks to keep degrees feasible.
            let min_fill = candidates.iter().map(|&j| check_rows[j].len()).min().unwrap();
            candidates.retain(|&j| check_rows[j].len() == min_fill);
            let j = candidates[rng.random_range(0..candidates.len())];
            check_rows[j].push(i);
            var_rows[i].push(j);
        }
    }
    for row in &mut check_rows {
        row.sort_unstable();
    }
    Some(check_rows)
}

/// Valid even-weight configurations `E_j` per check, as bitmasks over the
/// positions of `N(j)`. Materialized only for the exact LP path, where
/// check degrees stay small.
#[derive(Debug, Clone)]
pub struct CheckConfigs {
    configs: Vec<Vec<u32>>,
}

/// Largest check degree for which `E_j` is materialized.
pub const MAX_ENUMERABLE_CHECK_DEGREE: usize = 16;

impl CheckConfigs {
    /// Enumerates `E_j` for every check of the code. Errors when some check
    /// degree exceeds [`MAX_ENUMERABLE_CHECK_DEGREE`].
    pub fn enumerate(code: &LdpcCode) -> Result<Self> {
        let mut configs = Vec::with_capacity(code.m());
        for j in 0..code.m() {
            let d = code.check_neighbors(j).len();
            if d > MAX_ENUMERABLE_CHECK_DEGREE {
                return Err(Error::CheckDegreeTooLarge {
                    degree: d,
                    limit: MAX_ENUMERABLE_CHECK_DEGREE,
                });
            }
            let masks: Vec<u32> = (0..(1u32 << d))
                .filter(|mask| mask.count_ones() % 2 == 0)
                .collect();
            debug_assert_eq!(masks.len(), 1 << (d.max(1) - 1));
            configs.push(masks);
        }
        Ok(Self { configs })
    }

    /// Even-weight configuration masks of check `j`. Bit `t` of a mask
    /// refers to the `t`-th entry of `code.check_neighbors(j)`.
    pub fn of(&self, j: usize) -> &[u32] {
        &self.configs[j]
    }

    /// Total number of configuration variables over all checks.
    pub fn total(&self) -> usize {
        self.configs.iter().map(|c| c.len()).sum()
    }
}

/// Writes a code in MacKay alist format (1-indexed, zero padded).
pub fn save_alist(code: &LdpcCode, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let n = code.n();
    let m = code.m();
    let dv_max = (0..n).map(|i| code.var_neighbors(i).len()).max().unwrap_or(0);
    let dc_max = (0..m).map(|j| code.check_neighbors(j).len()).max().unwrap_or(0);
    writeln!(out, "{n} {m}").unwrap();
    writeln!(out, "{dv_max} {dc_max}").unwrap();
    let joined = |it: Vec<String>| it.join(" ");
    writeln!(
        out,
        "{}",
        joined((0..n).map(|i| code.var_neighbors(i).len().to_string()).collect())
    )
    .unwrap();
    writeln!(
        out,
        "{}",
        joined((0..m).map(|j| code.check_neighbors(j).len().to_string()).collect())
    )
    .unwrap();
    for i in 0..n {
        let mut row: Vec<String> = code.var_neighbors(i).iter().map(|j| (j + 1).to_string()).collect();
        row.resize(dv_max, "0".to_string());
        writeln!(out, "{}", joined(row)).unwrap();
    }
    for j in 0..m {
        let mut row: Vec<String> = code.check_neighbors(j).iter().map(|i| (i + 1).to_string()).collect();
        row.resize(dc_max, "0".to_string());
        writeln!(out, "{}", joined(row)).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Loads a code from MacKay alist format, accepting both padded and
/// unpadded neighbor rows, with line/field diagnostics on malformed input.
pub fn load_alist(path: impl AsRef<Path>) -> Result<LdpcCode> {
    let text = std::fs::read_to_string(path)?;
    parse_alist(&text)
}

/// Parses alist text. See [`load_alist`].
pub fn parse_alist(text: &str) -> Result<LdpcCode> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let mut next_row = |expect: &str| -> Result<(usize, Vec<usize>)> {
        let (idx, line) = lines.next().ok_or_else(|| Error::AlistParse {
            line: 0,
            field: 0,
            msg: format!("unexpected end of file, expected {expect}"),
        })?;
        let mut row = Vec::new();
        for (f, tok) in line.split_whitespace().enumerate() {
            let v: usize = tok.parse().map_err(|_| Error::AlistParse {
                line: idx + 1,
                field: f + 1,
                msg: format!("expected integer, got '{tok}'"),
            })?;
            row.push(v);
        }
        Ok((idx + 1, row))
    };

    let (line_no, header) = next_row("N M header")?;
    if header.len() != 2 {
        return Err(Error::AlistParse {
            line: line_no,
            field: header.len(),
            msg: "header must be 'N M'".into(),
        });
    }
    let (n, m) = (header[0], header[1]);
    let (_, _max_degrees) = next_row("max degree line")?;
    let (dv_line, var_degrees) = next_row("per-column degrees")?;
    if var_degrees.len() != n {
        return Err(Error::AlistParse {
            line: dv_line,
            field: var_degrees.len(),
            msg: format!("expected {n} per-column degrees"),
        });
    }
    let (dc_line, check_degrees) = next_row("per-row degrees")?;
    if check_degrees.len() != m {
        return Err(Error::AlistParse {
            line: dc_line,
            field: check_degrees.len(),
            msg: format!("expected {m} per-row degrees"),
        });
    }

    let mut var_rows = Vec::with_capacity(n);
    for i in 0..n {
        let (line_no, row) = next_row("variable neighbor row")?;
        let entries: Vec<usize> = row.into_iter().filter(|&v| v != 0).collect();
        if entries.len() != var_degrees[i] {
            return Err(Error::AlistParse {
                line: line_no,
                field: entries.len(),
                msg: format!(
                    "column {} has {} nonzero entries, declared degree {}",
                    i + 1,
                    entries.len(),
                    var_degrees[i]
                ),
            });
        }
        for (f, &j) in entries.iter().enumerate() {
            if j > m {
                return Err(Error::AlistParse {
                    line: line_no,
                    field: f + 1,
                    msg: format!("check index {j} out of range (M = {m})"),
                });
            }
        }
        var_rows.push(entries);
    }

    let mut check_rows = Vec::with_capacity(m);
    for j in 0..m {
        let (line_no, row) = next_row("check neighbor row")?;
        let entries: Vec<usize> = row.into_iter().filter(|&v| v != 0).collect();
        if entries.len() != check_degrees[j] {
            return Err(Error::AlistParse {
                line: line_no,
                field: entries.len(),
                msg: format!(
                    "row {} has {} nonzero entries, declared degree {}",
                    j + 1,
                    entries.len(),
                    check_degrees[j]
                ),
            });
        }
        let mut zero_based = Vec::with_capacity(entries.len());
        for (f, &i) in entries.iter().enumerate() {
            if i == 0 || i > n {
                return Err(Error::AlistParse {
                    line: line_no,
                    field: f + 1,
                    msg: format!("variable index {i} out of range (N = {n})"),
                });
            }
            zero_based.push(i - 1);
        }
        zero_based.sort_unstable();
        check_rows.push(zero_based);
    }

    let code = LdpcCode::from_checks(n, check_rows)?;
    // Cross-check the two adjacency views.
    for (i, declared) in var_rows.iter().enumerate() {
        let mut got: Vec<usize> = code.var_neighbors(i).to_vec();
        got.sort_unstable();
        let mut want: Vec<usize> = declared.iter().map(|&j| j - 1).collect();
        want.sort_unstable();
        if got != want {
            return Err(Error::AlistParse {
                line: 5 + i,
                field: 0,
                msg: format!("column {} neighbor list disagrees with rows", i + 1),
            });
        }
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spc3_structure() {
        let code = spc(3).unwrap();
        assert_eq!((code.n(), code.m()), (3, 1));
        assert_eq!(code.check_neighbors(0), &[0, 1, 2]);
        assert!(code.syndrome_ok(&[1, 1, 0]));
        assert!(code.syndrome_ok(&[0, 0, 0]));
        assert!(!code.syndrome_ok(&[1, 0, 0]));
    }

    #[test]
    fn spc_configs_count() {
        let code = spc(4).unwrap();
        let configs = CheckConfigs::enumerate(&code).unwrap();
        assert_eq!(configs.of(0).len(), 8); // 2^(4-1)
        assert!(configs.of(0).iter().all(|m| m.count_ones() % 2 == 0));
        assert!(spc(2).unwrap().convergence_warning());
        assert!(!spc(3).unwrap().convergence_warning());
    }

    #[test]
    fn configs_agree_with_syndrome_exhaustively() {
        // Words whose restriction to each check is an even config are
        // exactly the codewords.
        let code = random_regular(12, 2, 4, 5).unwrap();
        let configs = CheckConfigs::enumerate(&code).unwrap();
        for word in 0..(1u32 << code.n()) {
            let bits: Vec<u8> = (0..code.n()).map(|i| ((word >> i) & 1) as u8).collect();
            let mut all_even = true;
            for j in 0..code.m() {
                let mask: u32 = code
                    .check_neighbors(j)
                    .iter()
                    .enumerate()
                    .map(|(t, &i)| (bits[i] as u32) << t)
                    .sum();
                if !configs.of(j).contains(&mask) {
                    all_even = false;
                    break;
                }
            }
            assert_eq!(all_even, code.syndrome_ok(&bits));
        }
    }

    #[test]
    fn regular_155_3_5() {
        let code = random_regular(155, 3, 5, 42).unwrap();
        assert_eq!((code.n(), code.m()), (155, 93));
        assert_relative_eq!(code.rate(), 0.4, epsilon = 1e-12);
        assert_relative_eq!(code.avg_check_degree_per_bit(), 3.0, epsilon = 1e-12);
        assert!(!code.convergence_warning());
        assert!(code.girth().unwrap() >= 6);
        for j in 0..code.m() {
            assert_eq!(code.check_neighbors(j).len(), 5);
        }
        for i in 0..code.n() {
            assert_eq!(code.var_neighbors(i).len(), 3);
        }
        // Reproducible from the seed.
        let again = random_regular(155, 3, 5, 42).unwrap();
        assert_eq!(code, again);
        let other = random_regular(155, 3, 5, 43).unwrap();
        assert_ne!(code, other);
    }

    #[test]
    fn regular_4923_3_27_shape() {
        let code = random_regular(4923, 3, 27, 7).unwrap();
        assert_eq!((code.n(), code.m()), (4923, 547));
        assert_relative_eq!(code.rate(), 8.0 / 9.0, epsilon = 1e-12);
        assert!(code.girth().unwrap() >= 6);
    }

    #[test]
    fn warning_flag_thresholds() {
        let code = random_regular(10, 2, 4, 3).unwrap();
        assert_eq!(code.m(), 5);
        assert!(!code.convergence_warning());
        let weak = random_regular(6, 1, 2, 3).unwrap();
        assert!(weak.convergence_warning());
    }

    #[test]
    fn infeasible_degrees_rejected() {
        assert!(random_regular(10, 3, 4, 1).is_err()); // 30 % 4 != 0
        // (3,4) at n = 8 demands 36 distinct variable pairs but only 28
        // exist, so girth-6 placement must fail...
        assert!(random_regular_with(
            8,
            3,
            4,
            1,
            RegularCodeOptions { avoid_four_cycles: true, max_retries: 50 }
        )
        .is_err());
        // ...while the relaxed construction succeeds.
        let code = random_regular_with(
            8,
            3,
            4,
            1,
            RegularCodeOptions { avoid_four_cycles: false, max_retries: 1000 },
        )
        .unwrap();
        assert_eq!((code.n(), code.m()), (8, 6));
    }

    #[test]
    fn alist_round_trip() {
        let dir = std::env::temp_dir().join(format!("jointlp-alist-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        for code in [spc(3).unwrap(), random_regular(20, 3, 5, 9).unwrap()] {
            let path = dir.join("code.alist");
            save_alist(&code, &path).unwrap();
            let loaded = load_alist(&path).unwrap();
            assert_eq!(code, loaded);
        }
        let code = load_alist(dir.join("code.alist")).unwrap();
        assert_relative_eq!(code.rate(), 0.4, epsilon = 1e-12);
        assert_relative_eq!(code.avg_check_degree_per_bit(), 3.0, epsilon = 1e-12);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn alist_degree_mismatch_is_diagnosed() {
        let text = "3 1\n1 3\n1 1 1\n3\n1\n1\n1\n1 2\n";
        let err = parse_alist(text).unwrap_err();
        match err {
            Error::AlistParse { line, msg, .. } => {
                assert_eq!(line, 8);
                assert!(msg.contains("declared degree"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn random_codeword_is_a_codeword_with_middling_weight() {
        let code = random_regular(155, 3, 5, 3).unwrap();
        let word = random_codeword(&code, 9);
        assert!(code.syndrome_ok(&word));
        let weight: u32 = word.iter().map(|&b| b as u32).sum();
        assert!((40..=115).contains(&weight), "weight {weight}");
        assert_eq!(word, random_codeword(&code, 9));
        assert_ne!(word, random_codeword(&code, 10));
    }

    #[test]
    fn girth_detects_four_cycles() {
        // Two checks sharing two variables form a 4-cycle.
        let code = LdpcCode::from_checks(4, vec![vec![0, 1], vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(code.girth().unwrap(), 4);
        let tree = LdpcCode::from_checks(4, vec![vec![0, 1], vec![1, 2], vec![2, 3]]).unwrap();
        assert!(tree.girth().is_none());
    }
}
