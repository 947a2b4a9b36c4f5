//! Exact joint LP decoding: the explicit primal problem over the
//! trellis-wise relaxed polytope, solved with the dense simplex method,
//! plus the dynamic-programming oracles it is checked against.
//!
//! The primal has one flow variable per trellis edge and section and one
//! indicator per even-weight check configuration. Its equality rows are,
//! in order: one configuration-normalization row per check, one flow
//! normalization row at the chosen section `p`, one coupling row per
//! `(bit, check)` incidence, and flow conservation per interior time and
//! state. An integral optimum is a trellis-wise codeword and comes with an
//! ML certificate; a fractional one is a joint-decoding trellis-wise
//! pseudo-codeword.

use std::io::Write;

use crate::channel::Trellis;
use crate::ldpc::{CheckConfigs, LdpcCode};
use crate::metrics::BranchMetrics;
use crate::simplex::{self, StandardLp};
use crate::{Error, Result};

/// Integrality tolerance used to classify simplex vertices.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Feasibility tolerance on constraint residuals.
pub const FEASIBILITY_TOL: f64 = 1e-8;

/// The explicit primal LP. Variables are ordered `g` first
/// (section-major), then `w` grouped by check.
#[derive(Debug, Clone)]
pub struct LpProblemP {
    lp: StandardLp,
    n: usize,
    num_edges: usize,
    w_offsets: Vec<usize>,
    configs: CheckConfigs,
    p_index: usize,
}

/// Whether an LP solution is a codeword vertex or a pseudo-codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexKind {
    Integral,
    Fractional,
}

/// Optimal solution of the primal LP.
#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Edge flows, `N x O`.
    pub g: Vec<Vec<f64>>,
    /// Configuration weights per check.
    pub w: Vec<Vec<f64>>,
    /// Optimal objective value.
    pub objective: f64,
    /// Integral within [`INTEGRALITY_TOL`] or fractional.
    pub vertex_kind: VertexKind,
}

impl LpProblemP {
    /// Builds the constraint system for `code` on `trellis` with the given
    /// branch metrics. `p_index` selects the section carrying the flow
    /// normalization row; the optimum does not depend on it.
    pub fn build(
        trellis: &Trellis,
        code: &LdpcCode,
        metrics: &BranchMetrics,
        p_index: usize,
    ) -> Result<Self> {
        let n = trellis.len();
        if code.n() != n || metrics.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "code length {}, metric length {}, trellis length {n}",
                code.n(),
                metrics.len()
            )));
        }
        if p_index >= n {
            return Err(Error::DimensionMismatch(format!(
                "p_index {p_index} out of range for N = {n}"
            )));
        }
        let configs = CheckConfigs::enumerate(code)?;
        let num_edges = trellis.num_edges();
        let num_g = n * num_edges;
        let mut w_offsets = Vec::with_capacity(code.m());
        let mut offset = num_g;
        for j in 0..code.m() {
            w_offsets.push(offset);
            offset += configs.of(j).len();
        }
        let num_vars = offset;
        let g_idx = |i: usize, e: usize| i * num_edges + e;

        let mut rows = Vec::new();
        let mut rhs = Vec::new();

        // (a) configuration normalization per check
        for j in 0..code.m() {
            let mut row = vec![0.0; num_vars];
            for t in 0..configs.of(j).len() {
                row[w_offsets[j] + t] = 1.0;
            }
            rows.push(row);
            rhs.push(1.0);
        }
        // (b) flow normalization at section p
        {
            let mut row = vec![0.0; num_vars];
            for e in 0..num_edges {
                row[g_idx(p_index, e)] = 1.0;
            }
            rows.push(row);
            rhs.push(1.0);
        }
        // (c) coupling: sum of configs containing i equals the x=1 flow
        for i in 0..n {
            for &j in code.var_neighbors(i) {
                let pos = code
                    .check_neighbors(j)
                    .iter()
                    .position(|&v| v == i)
                    .expect("adjacency lists are consistent");
                let mut row = vec![0.0; num_vars];
                for (t, &mask) in configs.of(j).iter().enumerate() {
                    if mask >> pos & 1 == 1 {
                        row[w_offsets[j] + t] = 1.0;
                    }
                }
                for (e, edge) in trellis.section().iter().enumerate() {
                    if edge.input == 1 {
                        row[g_idx(i, e)] -= 1.0;
                    }
                }
                rows.push(row);
                rhs.push(0.0);
            }
        }
        // (d) flow conservation between consecutive sections
        for i in 0..n - 1 {
            for k in 0..trellis.num_states() {
                let mut row = vec![0.0; num_vars];
                for &e in trellis.edges_into(k) {
                    row[g_idx(i, e)] += 1.0;
                }
                for &e in trellis.edges_out_of(k) {
                    row[g_idx(i + 1, e)] -= 1.0;
                }
                rows.push(row);
                rhs.push(0.0);
            }
        }

        let mut objective = vec![0.0; num_vars];
        for i in 0..n {
            for e in 0..num_edges {
                objective[g_idx(i, e)] = metrics.get(i, e);
            }
        }

        Ok(Self {
            lp: StandardLp {
                num_vars,
                rows,
                rhs,
                objective,
            },
            n,
            num_edges,
            w_offsets,
            configs,
            p_index,
        })
    }

    /// Number of LP variables (`g` then `w`).
    pub fn num_vars(&self) -> usize {
        self.lp.num_vars
    }

    /// Number of equality rows.
    pub fn num_rows(&self) -> usize {
        self.lp.rows.len()
    }

    /// Section carrying the flow-normalization row.
    pub fn p_index(&self) -> usize {
        self.p_index
    }

    /// Maximum constraint residual of `(g, w)` against all equality rows,
    /// including negativity of any variable.
    pub fn residual(&self, g: &[Vec<f64>], w: &[Vec<f64>]) -> f64 {
        let x = self.pack(g, w);
        let neg = x.iter().cloned().fold(0.0f64, |acc, v| acc.max(-v));
        self.lp.residual(&x).max(neg)
    }

    fn pack(&self, g: &[Vec<f64>], w: &[Vec<f64>]) -> Vec<f64> {
        let mut x = vec![0.0; self.lp.num_vars];
        for (i, row) in g.iter().enumerate() {
            for (e, &v) in row.iter().enumerate() {
                x[i * self.num_edges + e] = v;
            }
        }
        for (j, row) in w.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                x[self.w_offsets[j] + t] = v;
            }
        }
        x
    }

    fn unpack(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let g = (0..self.n)
            .map(|i| x[i * self.num_edges..(i + 1) * self.num_edges].to_vec())
            .collect();
        let w = (0..self.w_offsets.len())
            .map(|j| {
                let start = self.w_offsets[j];
                x[start..start + self.configs.of(j).len()].to_vec()
            })
            .collect();
        (g, w)
    }

    /// Writes the LP in CPLEX LP text format for cross-checking against
    /// external solvers.
    pub fn export_lp_format<W: Write>(&self, out: &mut W) -> Result<()> {
        let name = |j: usize| -> String {
            if j < self.n * self.num_edges {
                format!("g_{}_{}", j / self.num_edges, j % self.num_edges)
            } else {
                let check = self
                    .w_offsets
                    .iter()
                    .rposition(|&off| off <= j)
                    .expect("offset table covers all w variables");
                format!("w_{}_{}", check, j - self.w_offsets[check])
            }
        };
        writeln!(out, "Minimize")?;
        let terms: Vec<String> = self
            .lp
            .objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| format!("{:+} {}", c, name(j)))
            .collect();
        writeln!(out, " obj: {}", if terms.is_empty() { "0 g_0_0".into() } else { terms.join(" ") })?;
        writeln!(out, "Subject To")?;
        for (r, (row, rhs)) in self.lp.rows.iter().zip(&self.lp.rhs).enumerate() {
            let terms: Vec<String> = row
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(j, &c)| format!("{:+} {}", c, name(j)))
                .collect();
            writeln!(out, " c{}: {} = {}", r, terms.join(" "), rhs)?;
        }
        writeln!(out, "Bounds")?;
        writeln!(out, "End")?;
        Ok(())
    }
}

/// Solves the primal LP and classifies the vertex. Residuals beyond
/// [`FEASIBILITY_TOL`] abort rather than returning a bad solution.
pub fn simplex_solve(problem: &LpProblemP) -> Result<LpSolution> {
    let out = simplex::solve(&problem.lp)?;
    let (g, w) = problem.unpack(&out.x);
    let residual = problem.residual(&g, &w);
    if residual > FEASIBILITY_TOL {
        return Err(Error::NumericalAbort(format!(
            "simplex solution violates constraints by {residual:.3e}"
        )));
    }
    // Every section must carry unit flow (rows (b) + (d) imply it).
    for row in &g {
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > FEASIBILITY_TOL {
            return Err(Error::NumericalAbort(format!(
                "section flow sums to {total}, expected 1"
            )));
        }
    }
    let integral = g
        .iter()
        .flatten()
        .all(|&v| v.abs() < INTEGRALITY_TOL || (v - 1.0).abs() < INTEGRALITY_TOL);
    Ok(LpSolution {
        g,
        w,
        objective: out.objective,
        vertex_kind: if integral {
            VertexKind::Integral
        } else {
            VertexKind::Fractional
        },
    })
}

/// Convenience: build and solve in one call with `p_index = 0`.
pub fn decode_exact(
    trellis: &Trellis,
    code: &LdpcCode,
    metrics: &BranchMetrics,
) -> Result<LpSolution> {
    let problem = LpProblemP::build(trellis, code, metrics, 0)?;
    simplex_solve(&problem)
}

/// Minimum-cost edge path by dynamic programming; ties go to the lower
/// edge index.
pub fn viterbi_ml_edge_path(trellis: &Trellis, metrics: &BranchMetrics) -> (Vec<usize>, f64) {
    let states = trellis.num_states();
    let n = trellis.len();
    let mut cost = vec![0.0f64; states];
    let mut chosen: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut next = vec![f64::INFINITY; states];
        let mut arg = vec![usize::MAX; states];
        for k in 0..states {
            for &e in trellis.edges_into(k) {
                let c = cost[trellis.edge(e).from] + metrics.get(i, e);
                if c < next[k] {
                    next[k] = c;
                    arg[k] = e;
                }
            }
        }
        cost = next;
        chosen.push(arg);
    }
    let (mut state, value) = cost
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(k, &v)| (k, v))
        .expect("at least one state");
    let mut path = vec![0usize; n];
    for i in (0..n).rev() {
        let e = chosen[i][state];
        path[i] = e;
        state = trellis.edge(e).from;
    }
    (path, value)
}

/// Brute-force joint ML over all codewords (block length at most 20).
/// Each codeword is costed at its best starting state; ties go to the
/// lexicographically smallest codeword.
pub fn exhaustive_joint_ml(
    trellis: &Trellis,
    code: &LdpcCode,
    metrics: &BranchMetrics,
) -> Result<(Vec<u8>, f64)> {
    let n = code.n();
    if n > 20 {
        return Err(Error::InvalidCode(format!(
            "exhaustive enumeration guarded at n <= 20, got {n}"
        )));
    }
    let mut best: Option<(Vec<u8>, f64)> = None;
    for word in 0..(1u64 << n) {
        // Lexicographic order: bit 0 is the most significant digit.
        let bits: Vec<u8> = (0..n).map(|i| ((word >> (n - 1 - i)) & 1) as u8).collect();
        if !code.syndrome_ok(&bits) {
            continue;
        }
        let value = codeword_cost(trellis, metrics, &bits)?;
        if best.as_ref().map_or(true, |(_, v)| value < *v) {
            best = Some((bits, value));
        }
    }
    best.ok_or_else(|| Error::InvalidCode("code has no codewords".into()))
}

/// Cost of a codeword: minimum path metric over all starting states.
pub fn codeword_cost(trellis: &Trellis, metrics: &BranchMetrics, bits: &[u8]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for s0 in 0..trellis.num_states() {
        let path = trellis.path_of(bits, s0)?;
        best = best.min(metrics.path_cost(&path));
    }
    Ok(best)
}

/// Unit flows of a codeword along its cheapest edge path, usable as the
/// reference `g` in pairwise-error comparisons.
pub fn codeword_flows(
    trellis: &Trellis,
    metrics: &BranchMetrics,
    bits: &[u8],
) -> Result<Vec<Vec<f64>>> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for s0 in 0..trellis.num_states() {
        let path = trellis.path_of(bits, s0)?;
        let cost = metrics.path_cost(&path);
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, path));
        }
    }
    let (_, path) = best.expect("at least one start state");
    Ok(flows_of_path(trellis, &path))
}

/// Unit flows of an explicit edge path.
pub fn flows_of_path(trellis: &Trellis, path: &[usize]) -> Vec<Vec<f64>> {
    path.iter()
        .map(|&e| {
            let mut row = vec![0.0; trellis.num_edges()];
            row[e] = 1.0;
            row
        })
        .collect()
}

/// Hard min-sum forward/backward values and the resulting dual objective
/// term at section `p_index`.
#[derive(Debug, Clone)]
pub struct HardMinValues {
    /// `cost_to_reach[t][k]`: cheapest cost of any partial path ending in
    /// state `k` after `t` sections. The dual forward value is its
    /// negation.
    pub cost_to_reach: Vec<Vec<f64>>,
    /// `cost_to_go[t][k]`: cheapest completion cost from state `k` at time
    /// `t` to the end. Equals the dual backward value.
    pub cost_to_go: Vec<Vec<f64>>,
    /// `min_e Gamma_{p,e} + cost_to_reach[p-1][s(e)] + cost_to_go[p][s'(e)]`.
    pub objective: f64,
}

/// Viterbi recursions on `Gamma = b - 1[x=1] * m_sums`, exactly the hard
/// dual after eliminating the `n` variables. With `m_sums = 0` the
/// objective equals the ML edge-path value.
pub fn hard_min_recursions(
    trellis: &Trellis,
    metrics: &BranchMetrics,
    m_sums: &[f64],
    p_index: usize,
) -> Result<HardMinValues> {
    let n = trellis.len();
    if m_sums.len() != n {
        return Err(Error::DimensionMismatch(
            "message sums must have one entry per section".into(),
        ));
    }
    if p_index >= n {
        return Err(Error::DimensionMismatch(format!(
            "p_index {p_index} out of range"
        )));
    }
    let states = trellis.num_states();
    let gamma = |i: usize, e: usize| {
        let edge = trellis.edge(e);
        metrics.get(i, e) - if edge.input == 1 { m_sums[i] } else { 0.0 }
    };
    let mut reach = vec![vec![0.0f64; states]];
    for i in 0..n {
        let mut next = vec![f64::INFINITY; states];
        for k in 0..states {
            for &e in trellis.edges_into(k) {
                let c = reach[i][trellis.edge(e).from] + gamma(i, e);
                if c < next[k] {
                    next[k] = c;
                }
            }
        }
        reach.push(next);
    }
    let mut go = vec![vec![0.0f64; states]; n + 1];
    for i in (0..n).rev() {
        for k in 0..states {
            let mut best = f64::INFINITY;
            for &e in trellis.edges_out_of(k) {
                let c = go[i + 1][trellis.edge(e).to] + gamma(i, e);
                if c < best {
                    best = c;
                }
            }
            go[i][k] = best;
        }
    }
    let objective = (0..trellis.num_edges())
        .map(|e| {
            let edge = trellis.edge(e);
            gamma(p_index, e) + reach[p_index][edge.from] + go[p_index + 1][edge.to]
        })
        .fold(f64::INFINITY, f64::min);
    Ok(HardMinValues {
        cost_to_reach: reach,
        cost_to_go: go,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_dicode, build_trellis, simulate, StartState};
    use crate::ldpc::spc;
    use crate::metrics::awgn_metrics;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spc3_dic(y: &[f64]) -> (Trellis, LdpcCode, BranchMetrics) {
        let trellis = build_trellis(&build_dicode(), 3).unwrap();
        let code = spc(3).unwrap();
        let metrics = awgn_metrics(&trellis, y, false).unwrap();
        (trellis, code, metrics)
    }

    #[test]
    fn problem_shape_matches_counting() {
        let (trellis, code, metrics) = spc3_dic(&[1.0, 0.0, -1.0]);
        let p = LpProblemP::build(&trellis, &code, &metrics, 0).unwrap();
        // 12 g-variables + 4 w-variables; rows (a)=1, (b)=1, (c)=3,
        // (d)=(N-1)|S|=4, total 9.
        assert_eq!(p.num_vars(), 16);
        assert_eq!(p.num_rows(), 9);
    }

    #[test]
    fn noiseless_decoding_is_integral_with_zero_objective() {
        let (trellis, code, metrics) = spc3_dic(&[1.0, 0.0, -1.0]);
        let sol = decode_exact(&trellis, &code, &metrics).unwrap();
        assert_eq!(sol.vertex_kind, VertexKind::Integral);
        assert!(sol.objective.abs() < 1e-9);
        // The optimal flows follow the true path (0,1), (1,1), (1,0).
        assert_relative_eq!(sol.g[0][1], 1.0, epsilon = 1e-6);
        assert_relative_eq!(sol.g[1][3], 1.0, epsilon = 1e-6);
        assert_relative_eq!(sol.g[2][2], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn optimum_does_not_depend_on_p_index() {
        let (trellis, code, metrics) = spc3_dic(&[0.9, 0.4, -0.2]);
        let mut values = Vec::new();
        for p in 0..3 {
            let problem = LpProblemP::build(&trellis, &code, &metrics, p).unwrap();
            values.push(simplex_solve(&problem).unwrap().objective);
        }
        assert_relative_eq!(values[0], values[1], epsilon = 1e-9);
        assert_relative_eq!(values[0], values[2], epsilon = 1e-9);
    }

    #[test]
    fn equal_metrics_give_degenerate_objective() {
        let trellis = build_trellis(&build_dicode(), 3).unwrap();
        let code = spc(3).unwrap();
        let b = vec![vec![0.7; 4]; 3];
        let metrics = BranchMetrics::from_raw(&trellis, b).unwrap();
        let sol = decode_exact(&trellis, &code, &metrics).unwrap();
        assert_relative_eq!(sol.objective, 3.0 * 0.7, epsilon = 1e-9);
    }

    #[test]
    fn trellis_only_lp_equals_viterbi() {
        // No checks: LP over the trellis polytope alone must match the DP.
        let trellis = build_trellis(&build_dicode(), 4).unwrap();
        let code = LdpcCode::from_checks(4, vec![]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let out = simulate(
                &build_dicode(),
                &[1, 0, 1, 1],
                0.7,
                StartState::Fixed(0),
                &mut rng,
            )
            .unwrap();
            let metrics = awgn_metrics(&trellis, &out.y, false).unwrap();
            let sol = decode_exact(&trellis, &code, &metrics).unwrap();
            let (_, value) = viterbi_ml_edge_path(&trellis, &metrics);
            assert_relative_eq!(sol.objective, value, epsilon = 1e-9);
        }
    }

    #[test]
    fn viterbi_recovers_noiseless_path() {
        let trellis = build_trellis(&build_dicode(), 3).unwrap();
        let metrics = awgn_metrics(&trellis, &[1.0, 0.0, -1.0], false).unwrap();
        let (path, value) = viterbi_ml_edge_path(&trellis, &metrics);
        assert_eq!(path, vec![1, 3, 2]);
        assert_eq!(value, 0.0);
        // With the uniform initial-state term the value shifts by ln 2.
        let with_p0 = awgn_metrics(&trellis, &[1.0, 0.0, -1.0], true).unwrap();
        let (path, value) = viterbi_ml_edge_path(&trellis, &with_p0);
        assert_eq!(path, vec![1, 3, 2]);
        assert_relative_eq!(value, 2.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn exhaustive_ml_agrees_with_integral_lp() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let spec = build_dicode();
        let code = spc(3).unwrap();
        let trellis = build_trellis(&spec, 3).unwrap();
        let mut integral_seen = 0;
        for _ in 0..400 {
            let out = simulate(&spec, &[1, 1, 0], 0.6, StartState::Fixed(0), &mut rng).unwrap();
            let metrics = awgn_metrics(&trellis, &out.y, false).unwrap();
            let sol = decode_exact(&trellis, &code, &metrics).unwrap();
            let (ml_word, ml_value) = exhaustive_joint_ml(&trellis, &code, &metrics).unwrap();
            // Relaxation ordering always holds.
            assert!(sol.objective <= ml_value + 1e-9);
            if sol.vertex_kind == VertexKind::Integral {
                integral_seen += 1;
                let decoded: Vec<u8> = (0..3)
                    .map(|i| {
                        let f: f64 = trellis
                            .section()
                            .iter()
                            .enumerate()
                            .filter(|(_, e)| e.input == 1)
                            .map(|(idx, _)| sol.g[i][idx])
                            .sum();
                        u8::from(f > 0.5)
                    })
                    .collect();
                assert_eq!(decoded, ml_word);
                assert_relative_eq!(sol.objective, ml_value, epsilon = 1e-9);
            }
        }
        assert!(integral_seen > 300, "integral vertices should dominate");
    }

    #[test]
    fn noiseless_exhaustive_ml_is_the_transmitted_word() {
        let (trellis, code, metrics) = spc3_dic(&[1.0, 0.0, -1.0]);
        let (word, value) = exhaustive_joint_ml(&trellis, &code, &metrics).unwrap();
        assert_eq!(word, vec![1, 1, 0]);
        assert_eq!(value, 0.0);
    }

    #[test]
    fn hard_min_reduces_to_viterbi_without_messages() {
        let trellis = build_trellis(&build_dicode(), 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let out = simulate(
            &build_dicode(),
            &[1, 0, 0, 1, 1],
            0.9,
            StartState::Fixed(0),
            &mut rng,
        )
        .unwrap();
        let metrics = awgn_metrics(&trellis, &out.y, false).unwrap();
        let (_, viterbi_value) = viterbi_ml_edge_path(&trellis, &metrics);
        for p in 0..5 {
            let hard = hard_min_recursions(&trellis, &metrics, &[0.0; 5], p).unwrap();
            assert_relative_eq!(hard.objective, viterbi_value, epsilon = 1e-12);
        }
    }

    #[test]
    fn hard_min_single_section() {
        let trellis = build_trellis(&build_dicode(), 1).unwrap();
        let metrics = awgn_metrics(&trellis, &[0.4], false).unwrap();
        let hard = hard_min_recursions(&trellis, &metrics, &[0.0], 0).unwrap();
        let want = (0..4).map(|e| metrics.get(0, e)).fold(f64::INFINITY, f64::min);
        assert_eq!(hard.objective, want);
    }

    #[test]
    fn lp_export_is_parseable_text() {
        let (trellis, code, metrics) = spc3_dic(&[1.0, 0.0, -1.0]);
        let p = LpProblemP::build(&trellis, &code, &metrics, 0).unwrap();
        let mut buf = Vec::new();
        p.export_lp_format(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("Minimize"));
        assert!(text.contains("Subject To"));
        assert!(text.contains("w_0_0"));
        assert!(text.trim_end().ends_with("End"));
    }
}
