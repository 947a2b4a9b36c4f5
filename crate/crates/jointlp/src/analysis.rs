//! Pseudo-codeword analysis: projections, the generalized Euclidean
//! distance, pairwise error probabilities, distance spectra with their
//! union bound, duality-gap certificates, and the feasible-primal
//! construction from converged dual messages.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::channel::Trellis;
use crate::ijlp::{self, DecoderParams, MessageState};
use crate::ldpc::{CheckConfigs, LdpcCode};
use crate::metrics::BranchMetrics;
use crate::numerics::{entropy, q_function};
use crate::simplex::{self, StandardLp};
use crate::{Error, Result};

/// Classification of a feasible flow vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcwKind {
    /// Integral flows: a trellis-wise codeword.
    Codeword,
    /// Fractional flows: a joint-decoding trellis-wise pseudo-codeword.
    PseudoCodeword,
}

/// A feasible flow vector together with its symbol and signal-space
/// projections.
#[derive(Debug, Clone)]
pub struct PseudoCodeword {
    /// Edge flows, `N x O`.
    pub g: Vec<Vec<f64>>,
    /// Symbol projection `f_i = sum_{x(e)=1} g_{i,e}`.
    pub f: Vec<f64>,
    /// Signal-space projection `p_i = sum_e g_{i,e} a(e)`.
    pub p: Vec<f64>,
    /// Codeword or pseudo-codeword.
    pub kind: PcwKind,
}

impl PseudoCodeword {
    /// Projects and classifies flows at the given integrality tolerance.
    pub fn from_flows(trellis: &Trellis, g: Vec<Vec<f64>>, tol: f64) -> Self {
        let f = project_symbolwise(trellis, &g);
        let p = project_signal_space(trellis, &g);
        let kind = classify(&g, tol);
        Self { g, f, p, kind }
    }
}

/// Symbol projection: per-section mass on input-1 edges.
pub fn project_symbolwise(trellis: &Trellis, g: &[Vec<f64>]) -> Vec<f64> {
    g.iter()
        .map(|row| {
            row.iter()
                .zip(trellis.section())
                .filter(|(_, e)| e.input == 1)
                .map(|(&v, _)| v)
                .sum()
        })
        .collect()
}

/// Signal-space projection: flow-weighted noiseless outputs.
pub fn project_signal_space(trellis: &Trellis, g: &[Vec<f64>]) -> Vec<f64> {
    g.iter()
        .map(|row| {
            row.iter()
                .zip(trellis.section())
                .map(|(&v, e)| v * e.output)
                .sum()
        })
        .collect()
}

/// Integral within `tol` is a codeword, otherwise a pseudo-codeword.
pub fn classify(g: &[Vec<f64>], tol: f64) -> PcwKind {
    let integral = g
        .iter()
        .flatten()
        .all(|&v| v.abs() < tol || (v - 1.0).abs() < tol);
    if integral {
        PcwKind::Codeword
    } else {
        PcwKind::PseudoCodeword
    }
}

/// Generalized squared-distance machinery:
/// `d_gen^2 = (||d||^2 + sigma_p^2)^2 / ||d||^2` with
/// `||d||^2 = sum (c_i - p_i)^2` and
/// `sigma_p^2 = sum_i sum_e g a^2 - sum_i p_i^2`.
///
/// Returns the (positive) distance `d_gen`; errors when `p == c`, where
/// the pairwise event is undefined.
pub fn d_gen(c: &[f64], p: &[f64], g: &[Vec<f64>], trellis: &Trellis) -> Result<f64> {
    if c.len() != p.len() || g.len() != c.len() {
        return Err(Error::DimensionMismatch(
            "reference, projection and flows must share a length".into(),
        ));
    }
    let dist_sq: f64 = c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
    if dist_sq <= 0.0 {
        return Err(Error::MalformedInput(
            "signal-space projections coincide; exclude the transmitted word".into(),
        ));
    }
    let second_moment: f64 = g
        .iter()
        .map(|row| {
            row.iter()
                .zip(trellis.section())
                .map(|(&v, e)| v * e.output * e.output)
                .sum::<f64>()
        })
        .sum();
    let p_sq: f64 = p.iter().map(|v| v * v).sum();
    let sigma_p_sq = second_moment - p_sq;
    let gen_sq = (dist_sq + sigma_p_sq).powi(2) / dist_sq;
    Ok(gen_sq.sqrt())
}

/// Pairwise error probability `Q(d_gen / (2 sigma))`.
pub fn pairwise_error_prob(d_gen: f64, sigma: f64) -> Result<f64> {
    if d_gen <= 0.0 || sigma <= 0.0 {
        return Err(Error::MalformedInput(
            "pairwise error needs d_gen > 0 and sigma > 0".into(),
        ));
    }
    Ok(q_function(d_gen / (2.0 * sigma)))
}

/// Largest violation of the local-codeword-polytope inequalities over all
/// checks: for every check and every odd subset `S` of its neighbors,
/// `sum_{i in S} f_i - sum_{i in L\S} f_i <= |S| - 1`. Also counts range
/// violations of `f` itself. Nonpositive means membership.
pub fn lcp_max_violation(code: &LdpcCode, f: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for &v in f {
        worst = worst.max(-v).max(v - 1.0);
    }
    for j in 0..code.m() {
        let members = code.check_neighbors(j);
        let d = members.len();
        for mask in 0..(1u32 << d) {
            if mask.count_ones() % 2 == 0 {
                continue;
            }
            let mut lhs = 0.0;
            for (t, &i) in members.iter().enumerate() {
                if mask >> t & 1 == 1 {
                    lhs += f[i];
                } else {
                    lhs -= f[i];
                }
            }
            worst = worst.max(lhs - (mask.count_ones() as f64 - 1.0));
        }
    }
    worst
}

/// One aggregated competitor population at a fixed distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub d_gen: f64,
    /// Number of distinct competitors at this distance.
    pub multiplicity: u64,
    /// Symbol projection of the first competitor seen here.
    pub example_f: Vec<f64>,
    /// Set when the competitor flows were reconstructed from iterative
    /// messages rather than LP vertices.
    pub approximate: bool,
}

/// Distances are binned at 1e-4 and competitors deduplicated by their
/// symbol projection on the same grid.
const SPECTRUM_GRID: f64 = 1e-4;

/// Harvested generalized-distance spectrum relative to one transmitted
/// signal-space codeword.
#[derive(Debug, Clone, Default)]
pub struct DistanceSpectrum {
    reference: Vec<f64>,
    entries: BTreeMap<i64, SpectrumEntry>,
    seen: HashSet<Vec<i64>>,
}

impl DistanceSpectrum {
    /// Empty spectrum for a transmitted signal-space codeword.
    pub fn new(reference: Vec<f64>) -> Self {
        Self {
            reference,
            entries: BTreeMap::new(),
            seen: HashSet::new(),
        }
    }

    /// The transmitted signal-space codeword.
    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// Records a competitor. Returns `true` when it is a new distinct
    /// competitor (by symbol projection on the grid).
    pub fn record(&mut self, d_gen: f64, f: &[f64], approximate: bool) -> bool {
        assert!(d_gen > 0.0, "distances must be positive");
        let key: Vec<i64> = f.iter().map(|&v| quantize(v)).collect();
        if !self.seen.insert(key) {
            return false;
        }
        let bin = quantize(d_gen);
        self.entries
            .entry(bin)
            .and_modify(|e| {
                e.multiplicity += 1;
                e.approximate |= approximate;
            })
            .or_insert(SpectrumEntry {
                d_gen,
                multiplicity: 1,
                example_f: f.to_vec(),
                approximate,
            });
        true
    }

    /// Entries ordered by distance.
    pub fn entries(&self) -> impl Iterator<Item = &SpectrumEntry> {
        self.entries.values()
    }

    /// Number of distinct distances.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// True when nothing has been harvested.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The `k` smallest distances.
    pub fn smallest(&self, k: usize) -> Vec<f64> {
        self.entries.values().take(k).map(|e| e.d_gen).collect()
    }

    /// Truncated union bound `sum_d K_d Q(d / (2 sigma))`.
    pub fn union_bound(&self, sigma: f64) -> f64 {
        self.entries
            .values()
            .map(|e| e.multiplicity as f64 * q_function(e.d_gen / (2.0 * sigma)))
            .sum()
    }

    /// Text serialization: a `reference` line then one `entry` line per
    /// distance.
    pub fn to_text(&self) -> String {
        let fmt_vec = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::from("# generalized Euclidean distance spectrum\n");
        writeln!(out, "reference {}", fmt_vec(&self.reference)).unwrap();
        for e in self.entries.values() {
            writeln!(
                out,
                "entry {} {} {} {}",
                e.d_gen,
                e.multiplicity,
                if e.approximate { "approx" } else { "exact" },
                fmt_vec(&e.example_f)
            )
            .unwrap();
        }
        out
    }

    /// Writes [`Self::to_text`] to a file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Parses the text form produced by [`Self::to_text`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut reference: Option<Vec<f64>> = None;
        let mut spectrum: Option<DistanceSpectrum> = None;
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("reference") => {
                    let vals = parse_floats(parts, idx + 1)?;
                    spectrum = Some(DistanceSpectrum::new(vals.clone()));
                    reference = Some(vals);
                }
                Some("entry") => {
                    let s = spectrum.as_mut().ok_or_else(|| Error::MalformedInput(
                        format!("line {}: entry before reference", idx + 1),
                    ))?;
                    let d: f64 = parse_token(parts.next(), idx + 1, "distance")?;
                    let count: u64 = parse_token(parts.next(), idx + 1, "multiplicity")?;
                    let kind = parts.next().ok_or_else(|| Error::MalformedInput(
                        format!("line {}: missing exact/approx tag", idx + 1),
                    ))?;
                    let approximate = match kind {
                        "exact" => false,
                        "approx" => true,
                        other => {
                            return Err(Error::MalformedInput(format!(
                                "line {}: unknown tag '{other}'",
                                idx + 1
                            )))
                        }
                    };
                    let f = parse_floats(parts, idx + 1)?;
                    s.entries.insert(
                        quantize(d),
                        SpectrumEntry {
                            d_gen: d,
                            multiplicity: count,
                            example_f: f,
                            approximate,
                        },
                    );
                }
                Some(other) => {
                    return Err(Error::MalformedInput(format!(
                        "line {}: unknown record '{other}'",
                        idx + 1
                    )))
                }
                None => {}
            }
        }
        let _ = reference;
        spectrum.ok_or_else(|| Error::MalformedInput("spectrum has no reference line".into()))
    }

    /// Loads a spectrum from a file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn quantize(v: f64) -> i64 {
    (v / SPECTRUM_GRID).round() as i64
}

fn parse_floats<'a>(parts: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<f64>> {
    parts
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| {
                Error::MalformedInput(format!("line {line}: expected number, got '{tok}'"))
            })
        })
        .collect()
}

fn parse_token<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::MalformedInput(format!("line {line}: missing {what}")))?
        .parse::<T>()
        .map_err(|_| Error::MalformedInput(format!("line {line}: bad {what}")))
}

/// Duality-gap certificate for the softened problems.
#[derive(Debug, Clone, Copy)]
pub struct GapBound {
    /// `(1 - R + Nbar) ln 2 / K1`.
    pub code_term: f64,
    /// `ln O / (K2 N)`.
    pub trellis_term: f64,
    /// `eps (3/N sum|b| + C)`, zero when no residual is supplied.
    pub eps_term: f64,
}

impl GapBound {
    /// Per-symbol gap `delta`; the objective gap bound is `delta * N`.
    pub fn delta(&self) -> f64 {
        self.code_term + self.trellis_term + self.eps_term
    }
}

/// The ideal-convergence gap bound from the code and trellis geometry.
pub fn gap_delta(code: &LdpcCode, trellis: &Trellis, k1: f64, k2: f64) -> GapBound {
    let n = code.n() as f64;
    let code_term =
        (1.0 - code.rate() + code.avg_check_degree_per_bit()) * 2.0f64.ln() / k1;
    let trellis_term = (trellis.num_edges() as f64).ln() / (k2 * n);
    GapBound {
        code_term,
        trellis_term,
        eps_term: 0.0,
    }
}

/// Gap bound including the finite-iteration term: `eps` is the message
/// residual, `metric_abs_sum` is `sum |b|` over all sections and edges,
/// and `c_const` bounds the mean absolute message sum (measured as
/// `sum_{i,j} |m_{i,j}| / N` at the final state).
pub fn gap_delta_with_eps(
    code: &LdpcCode,
    trellis: &Trellis,
    k1: f64,
    k2: f64,
    eps: f64,
    metric_abs_sum: f64,
    c_const: f64,
) -> GapBound {
    let n = code.n() as f64;
    let mut bound = gap_delta(code, trellis, k1, k2);
    bound.eps_term = eps * (3.0 / n * metric_abs_sum + c_const);
    bound
}

/// A feasible primal point reconstructed from dual messages.
#[derive(Debug, Clone)]
pub struct PrimalFeasible {
    /// Smoothed edge flows, feasible for the trellis polytope.
    pub g: Vec<Vec<f64>>,
    /// Per-check configuration weights matching the flow marginals.
    pub w: Vec<Vec<f64>>,
    /// Linear objective `sum b g` of the point.
    pub value: f64,
    /// Entropy-regularized objective
    /// `value - sum_j H(w_j)/K1 - H(g_p)/K2` at `p = 0`.
    pub value_ps: f64,
    /// Message residual (largest gap between a per-check marginal and its
    /// bit average).
    pub epsilon: f64,
    /// Residual against the trellis-side marginals.
    pub epsilon_trellis: f64,
    /// Mixing weight actually used for the uniform smoothing.
    pub smoothing: f64,
}

/// Builds a Problem-P-feasible `(g, w)` from a message state.
///
/// The flows are the posterior edge marginals mixed with the uniform flow
/// at weight `6 eps`, which pushes the symbol projection into every local
/// codeword polytope once `eps <= 1/6`. Configuration weights are then
/// solved per check to match the flow marginals exactly, so all coupling
/// constraints hold to solver precision even away from convergence.
/// Refused when the residual exceeds `1/6`.
pub fn primal_from_dual(
    state: &MessageState,
    code: &LdpcCode,
    trellis: &Trellis,
    metrics: &BranchMetrics,
    params: &DecoderParams,
) -> Result<PrimalFeasible> {
    // Work on a refreshed copy so the caller's state is untouched.
    let mut fresh = state.clone();
    fresh.bit_to_trellis(trellis, metrics, params);
    fresh.forward_backward(trellis, params)?;
    let residual = ijlp::message_residual(&fresh, code, trellis, params);
    if residual.epsilon_avg > 1.0 / 6.0 {
        return Err(Error::EpsilonTooLarge {
            epsilon: residual.epsilon_avg,
        });
    }
    let smoothing = residual
        .epsilon_avg
        .max(residual.epsilon_trellis)
        .min(1.0 / 6.0);
    let marginals = fresh.edge_marginals(trellis);
    let o = trellis.num_edges() as f64;
    let g: Vec<Vec<f64>> = marginals
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| (1.0 - 6.0 * smoothing) * v + 6.0 * smoothing / o)
                .collect()
        })
        .collect();
    let f = project_symbolwise(trellis, &g);
    let configs = CheckConfigs::enumerate(code)?;
    let mut w = Vec::with_capacity(code.m());
    for j in 0..code.m() {
        w.push(solve_check_weights(code, &configs, j, &f)?);
    }
    let value: f64 = g
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(e, &v)| metrics.get(i, e) * v)
                .sum::<f64>()
        })
        .sum();
    let entropy_w: f64 = w.iter().map(|row| entropy(row)).sum();
    let value_ps = value - entropy_w / params.k1 - entropy(&g[0]) / params.k2;
    Ok(PrimalFeasible {
        g,
        w,
        value,
        value_ps,
        epsilon: residual.epsilon_avg,
        epsilon_trellis: residual.epsilon_trellis,
        smoothing,
    })
}

/// Finds nonnegative configuration weights for check `j` whose bit
/// marginals equal `f` on the check's neighbors. Feasible exactly when
/// the restriction of `f` lies in the local codeword polytope.
fn solve_check_weights(
    code: &LdpcCode,
    configs: &CheckConfigs,
    j: usize,
    f: &[f64],
) -> Result<Vec<f64>> {
    let members = code.check_neighbors(j);
    let masks = configs.of(j);
    let num = masks.len();
    let mut rows = vec![vec![1.0; num]];
    let mut rhs = vec![1.0];
    for (t, &i) in members.iter().enumerate() {
        let row: Vec<f64> = masks
            .iter()
            .map(|&mask| if mask >> t & 1 == 1 { 1.0 } else { 0.0 })
            .collect();
        rows.push(row);
        rhs.push(f[i]);
    }
    let lp = StandardLp {
        num_vars: num,
        rows,
        rhs,
        objective: vec![0.0; num],
    };
    match simplex::solve(&lp) {
        Ok(out) => Ok(out.x),
        Err(Error::LpInfeasible) => Err(Error::NumericalAbort(format!(
            "no configuration weights match the marginals of check {j}"
        ))),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_dicode, build_trellis};
    use approx::assert_relative_eq;

    fn fig2_tcw() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ]
    }

    fn fig2_pcw() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.5, 0.0, 0.5, 0.0],
        ]
    }

    #[test]
    fn projections_of_reference_vectors() {
        let trellis = build_trellis(&build_dicode(), 3).unwrap();
        let tcw = fig2_tcw();
        assert_eq!(project_symbolwise(&trellis, &tcw), vec![1.0, 1.0, 0.0]);
        assert_eq!(project_signal_space(&trellis, &tcw), vec![1.0, 0.0, -1.0]);
        assert_eq!(classify(&tcw, 1e-6), PcwKind::Codeword);

        let pcw = fig2_pcw();
        assert_eq!(project_symbolwise(&trellis, &pcw), vec![1.0, 0.5, 0.0]);
        assert_eq!(project_signal_space(&trellis, &pcw), vec![1.0, -0.5, -0.5]);
        assert_eq!(classify(&pcw, 1e-6), PcwKind::PseudoCodeword);

        // Near-integral flows classify by tolerance.
        let mut near = fig2_tcw();
        near[0][1] = 1.0 - 1e-9;
        near[0][0] = 1e-9;
        assert_eq!(classify(&near, 1e-6), PcwKind::Codeword);

        let zeros = vec![vec![1.0, 0.0, 0.0, 0.0]; 3];
        assert_eq!(project_symbolwise(&trellis, &zeros), vec![0.0; 3]);
        assert_eq!(project_signal_space(&trellis, &zeros), vec![0.0; 3]);
    }

    #[test]
    fn projection_is_linear_in_the_flows() {
        let trellis = build_trellis(&build_dicode(), 3).unwrap();
        let a = fig2_tcw();
        let b = fig2_pcw();
        for &alpha in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            let mix: Vec<Vec<f64>> = a
                .iter()
                .zip(&b)
                .map(|(ra, rb)| {
                    ra.iter()
                        .zip(rb)
                        .map(|(&va, &vb)| alpha * va + (1.0 - alpha) * vb)
                        .collect()
                })
                .collect();
            let fa = project_symbolwise(&trellis, &a);
            let fb = project_symbolwise(&trellis, &b);
            let fmix = project_symbolwise(&trellis, &mix);
            for i in 0..3 {
                assert_relative_eq!(
                    fmix[i],
                    alpha * fa[i] + (1.0 - alpha) * fb[i],
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn generalized_distance_of_reference_pair() {
        let trellis = build_trellis(&build_dicode(), 3).unwrap();
        let c = vec![1.0, 0.0, -1.0];
        let pcw = fig2_pcw();
        let p = project_signal_space(&trellis, &pcw);
        let d = d_gen(&c, &p, &pcw, &trellis).unwrap();
        assert_relative_eq!(d, 2.0f64.sqrt(), epsilon = 1e-12);
        // Integral competitor: plain Euclidean distance between outputs.
        let tcw = fig2_tcw();
        let zero_word = vec![vec![1.0, 0.0, 0.0, 0.0]; 3];
        let pz = project_signal_space(&trellis, &zero_word);
        let d = d_gen(&project_signal_space(&trellis, &tcw), &pz, &zero_word, &trellis).unwrap();
        assert_relative_eq!(d, 2.0f64.sqrt(), epsilon = 1e-12);
        // p == c is rejected.
        assert!(d_gen(&c, &c, &fig2_tcw(), &trellis).is_err());
    }

    #[test]
    fn distance_scales_with_the_output_alphabet() {
        // Doubling all channel outputs doubles integral distances.
        let spec = build_dicode();
        let doubled = crate::channel::FscSpec::new(
            "dic2x",
            2,
            spec.edges()
                .iter()
                .map(|e| crate::channel::FscEdge {
                    from: e.from,
                    input: e.input,
                    to: e.to,
                    output: 2.0 * e.output,
                })
                .collect(),
            vec![0.5, 0.5],
        )
        .unwrap();
        let t1 = build_trellis(&spec, 3).unwrap();
        let t2 = build_trellis(&doubled, 3).unwrap();
        let tcw = fig2_tcw();
        let zero = vec![vec![1.0, 0.0, 0.0, 0.0]; 3];
        let d1 = d_gen(
            &project_signal_space(&t1, &tcw),
            &project_signal_space(&t1, &zero),
            &zero,
            &t1,
        )
        .unwrap();
        let d2 = d_gen(
            &project_signal_space(&t2, &tcw),
            &project_signal_space(&t2, &zero),
            &zero,
            &t2,
        )
        .unwrap();
        assert_relative_eq!(d2, 2.0 * d1, epsilon = 1e-12);
    }

    #[test]
    fn pairwise_error_reference_value() {
        let p = pairwise_error_prob(2.0f64.sqrt(), 1.0).unwrap();
        assert_relative_eq!(p, 0.23975, epsilon = 5e-6);
        // Zero-distance limit approaches 1/2.
        let p = pairwise_error_prob(1e-12, 1.0).unwrap();
        assert_relative_eq!(p, 0.5, epsilon = 1e-9);
        assert!(pairwise_error_prob(0.0, 1.0).is_err());
    }

    #[test]
    fn union_bound_values() {
        let mut s = DistanceSpectrum::new(vec![1.0, 0.0, -1.0]);
        assert_eq!(s.union_bound(1.0), 0.0);
        s.record(2.0f64.sqrt(), &[1.0, 0.5, 0.0], false);
        assert_relative_eq!(s.union_bound(1.0), 0.23975, epsilon = 5e-6);
        // Recording the same projection again does not double count.
        assert!(!s.record(2.0f64.sqrt(), &[1.0, 0.5, 0.0], false));
        assert_eq!(s.entries().next().unwrap().multiplicity, 1);
        // A second distinct competitor at the same distance does.
        assert!(s.record(2.0f64.sqrt(), &[0.0, 1.0, 1.0], false));
        assert_eq!(s.entries().next().unwrap().multiplicity, 2);
    }

    #[test]
    fn spectrum_text_round_trip() {
        let mut s = DistanceSpectrum::new(vec![1.0, 0.0, -1.0]);
        s.record(2.0f64.sqrt(), &[1.0, 0.5, 0.0], false);
        s.record(3.0f64.sqrt(), &[0.0, 1.0, 1.0], true);
        let text = s.to_text();
        let parsed = DistanceSpectrum::parse(&text).unwrap();
        assert_eq!(parsed.reference(), s.reference());
        assert_eq!(parsed.len(), 2);
        let entries: Vec<_> = parsed.entries().collect();
        assert_relative_eq!(entries[0].d_gen, 2.0f64.sqrt(), epsilon = 1e-12);
        assert!(!entries[0].approximate);
        assert!(entries[1].approximate);
        assert!(DistanceSpectrum::parse("entry 1 1 exact 0").is_err());
        assert!(DistanceSpectrum::parse("reference 1 0\nentry nope 1 exact 0 0").is_err());
    }

    #[test]
    fn gap_bound_reference_values() {
        // (3,5)-regular, N = 155, dicode: delta ~ 2.5846e-3.
        let code = crate::ldpc::random_regular(155, 3, 5, 1).unwrap();
        let trellis = build_trellis(&build_dicode(), 155).unwrap();
        let bound = gap_delta(&code, &trellis, 1000.0, 100.0);
        assert_relative_eq!(
            bound.delta(),
            3.6 * 2.0f64.ln() / 1000.0 + 4.0f64.ln() / (100.0 * 155.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(bound.delta(), 2.5846e-3, epsilon = 2e-7);

        // SPC(3,2): R = 2/3, Nbar = 1 -> delta = (4/3) ln2/K1 + ln4/(3 K2).
        let code = crate::ldpc::spc(3).unwrap();
        let trellis = build_trellis(&build_dicode(), 3).unwrap();
        let bound = gap_delta(&code, &trellis, 10.0, 10.0);
        assert_relative_eq!(
            bound.delta(),
            (4.0 / 3.0) * 2.0f64.ln() / 10.0 + 4.0f64.ln() / 30.0,
            epsilon = 1e-12
        );
        // Temperatures to infinity drive the bound to zero.
        let tiny = gap_delta(&code, &trellis, 1e12, 1e12);
        assert!(tiny.delta() < 1e-11);
    }

    #[test]
    fn lcp_violation_detects_nonmembers() {
        let code = crate::ldpc::spc(3).unwrap();
        assert!(lcp_max_violation(&code, &[1.0, 1.0, 0.0]) <= 0.0);
        // Midpoint of two even-weight words is a member.
        assert!(lcp_max_violation(&code, &[1.0, 0.5, 0.5]) <= 1e-12);
        // Odd-weight corner violates its LCP, and so does the projection
        // (1, .5, 0): the subset {bit 0} gives 1 - .5 - 0 > 0.
        assert!(lcp_max_violation(&code, &[1.0, 0.0, 0.0]) > 0.5);
        assert_relative_eq!(
            lcp_max_violation(&code, &[1.0, 0.5, 0.0]),
            0.5,
            epsilon = 1e-12
        );
        assert!(lcp_max_violation(&code, &[1.2, 0.0, 0.0]) > 0.0);
    }
}
