//! Shared helpers for the integration suites: an independently written
//! linear-domain turbo equalizer used as the message-level oracle, plus
//! small instance generators.

use jointlp::channel::Trellis;
use jointlp::ldpc::LdpcCode;
use jointlp::metrics::BranchMetrics;

/// Messages of one outer iteration of the reference equalizer.
#[derive(Debug, Clone)]
pub struct RefIteration {
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub m: Vec<Vec<f64>>,
    pub big_m: Vec<Vec<f64>>,
    pub word: Vec<u8>,
}

/// A BCJR + sum-product turbo equalizer written independently of the
/// production decoder: probability-domain recursions with explicit
/// normalization (no logs, no max subtraction) and the atanh form of the
/// check rule. The bit update is `m = M + gamma` with the fixed sign
/// mapping `M = -(textbook check-to-bit message)`, i.e. the unit
/// temperature case of the decoder it checks.
pub struct ReferenceTurboEqualizer<'a> {
    trellis: &'a Trellis,
    code: &'a LdpcCode,
    metrics: &'a BranchMetrics,
    m: Vec<Vec<f64>>,
    big_m: Vec<Vec<f64>>,
    inner_rounds: usize,
}

impl<'a> ReferenceTurboEqualizer<'a> {
    pub fn new(
        trellis: &'a Trellis,
        code: &'a LdpcCode,
        metrics: &'a BranchMetrics,
        inner_rounds: usize,
    ) -> Self {
        let m = (0..code.n())
            .map(|i| vec![0.0; code.var_neighbors(i).len()])
            .collect();
        let big_m = (0..code.n())
            .map(|i| vec![0.0; code.var_neighbors(i).len()])
            .collect();
        Self {
            trellis,
            code,
            metrics,
            m,
            big_m,
            inner_rounds,
        }
    }

    /// Runs one outer iteration and returns every message it produced.
    pub fn step(&mut self) -> RefIteration {
        let n = self.trellis.len();
        let states = self.trellis.num_states();
        // Edge weights exp(-Gamma) in the probability domain.
        let weight = |i: usize, e: usize, m: &[Vec<f64>]| -> f64 {
            let edge = self.trellis.edge(e);
            let sum: f64 = if edge.input == 1 { m[i].iter().sum() } else { 0.0 };
            (-(self.metrics.get(i, e) - sum)).exp()
        };
        // Forward pass, normalized to sum 1 at each step.
        let mut alpha = vec![vec![1.0 / states as f64; states]];
        for i in 0..n {
            let mut next = vec![0.0; states];
            for e in 0..self.trellis.num_edges() {
                let edge = self.trellis.edge(e);
                next[edge.to] += alpha[i][edge.from] * weight(i, e, &self.m);
            }
            let z: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= z);
            alpha.push(next);
        }
        // Backward pass.
        let mut beta = vec![vec![0.0; states]; n + 1];
        beta[n] = vec![1.0 / states as f64; states];
        for i in (0..n).rev() {
            let mut cur = vec![0.0; states];
            for e in 0..self.trellis.num_edges() {
                let edge = self.trellis.edge(e);
                cur[edge.from] += beta[i + 1][edge.to] * weight(i, e, &self.m);
            }
            let z: f64 = cur.iter().sum();
            cur.iter_mut().for_each(|v| *v /= z);
            beta[i] = cur;
        }
        // Posterior log ratios.
        let mut gamma = vec![0.0; n];
        for i in 0..n {
            let mut zero = 0.0;
            let mut one = 0.0;
            for e in 0..self.trellis.num_edges() {
                let edge = self.trellis.edge(e);
                let v = alpha[i][edge.from] * weight(i, e, &self.m) * beta[i + 1][edge.to];
                if edge.input == 0 {
                    zero += v;
                } else {
                    one += v;
                }
            }
            gamma[i] = (zero / one).ln();
        }
        // Inner rounds: textbook sum-product check rule, negated, then
        // m = M + gamma.
        for _ in 0..self.inner_rounds {
            for j in 0..self.code.m() {
                let members = self.code.check_neighbors(j);
                for (t, &i) in members.iter().enumerate() {
                    let mut product = 1.0f64;
                    for (r, &other) in members.iter().enumerate() {
                        if r == t {
                            continue;
                        }
                        let slot = self
                            .code
                            .var_neighbors(other)
                            .iter()
                            .position(|&jj| jj == j)
                            .unwrap();
                        product *= (self.m[other][slot] / 2.0).tanh();
                    }
                    let slot = self
                        .code
                        .var_neighbors(i)
                        .iter()
                        .position(|&jj| jj == j)
                        .unwrap();
                    let clamped = product.clamp(-(1.0 - 1e-15), 1.0 - 1e-15);
                    self.big_m[i][slot] = -2.0 * clamped.atanh();
                }
            }
            for i in 0..n {
                for a in 0..self.m[i].len() {
                    self.m[i][a] = self.big_m[i][a] + gamma[i];
                }
            }
        }
        let word = gamma.iter().map(|&g| u8::from(g < 0.0)).collect();
        RefIteration {
            alpha,
            beta,
            gamma,
            m: self.m.clone(),
            big_m: self.big_m.clone(),
            word,
        }
    }
}

/// Log-space SNR interpolation: the SNR at which a WER curve crosses
/// `target`, linear in (snr, ln wer) between bracketing grid points.
pub fn snr_at_wer(rows: &[(f64, f64)], target: f64) -> Option<f64> {
    for pair in rows.windows(2) {
        let (s0, w0) = pair[0];
        let (s1, w1) = pair[1];
        if w0 >= target && w1 <= target && w1 > 0.0 {
            let t = (target.ln() - w0.ln()) / (w1.ln() - w0.ln());
            return Some(s0 + t * (s1 - s0));
        }
    }
    None
}
