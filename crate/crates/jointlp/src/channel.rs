//! Finite-state channel models, trellis construction and AWGN simulation.
//!
//! A [`FscSpec`] describes one trellis section of a finite-state channel as
//! a list of labeled edges `(from_state, input_bit, to_state, output)`.
//! For the intersymbol-interference channels built here the next state is a
//! deterministic function of `(state, input)`, so a bit sequence selects a
//! unique edge path. [`Trellis`] unrolls a spec over `n` sections with a
//! fixed canonical edge order (ascending `(state, input)`), which pins down
//! the meaning of every flow vector used by the LP decoders.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// One labeled channel transition within a trellis section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FscEdge {
    /// Originating state.
    pub from: usize,
    /// Input bit on this transition.
    pub input: u8,
    /// Successor state.
    pub to: usize,
    /// Noiseless output symbol.
    pub output: f64,
}

/// A finite-state channel given by its per-section edge set, the initial
/// state distribution, and the noiseless output alphabet.
#[derive(Debug, Clone)]
pub struct FscSpec {
    name: String,
    num_states: usize,
    edges: Vec<FscEdge>,
    initial_dist: Vec<f64>,
    output_alphabet: Vec<f64>,
}

impl FscSpec {
    /// Builds a spec from raw edges, validating state indices, the output
    /// alphabet and the initial distribution. Edges are re-sorted into the
    /// canonical `(from, input)` order.
    pub fn new(
        name: impl Into<String>,
        num_states: usize,
        mut edges: Vec<FscEdge>,
        initial_dist: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || edges.is_empty() {
            return Err(Error::InvalidChannel(
                "channel needs at least one state and one edge".into(),
            ));
        }
        if initial_dist.len() != num_states {
            return Err(Error::InvalidChannel(format!(
                "initial distribution has {} entries for {} states",
                initial_dist.len(),
                num_states
            )));
        }
        if initial_dist.iter().any(|&p| p < 0.0) {
            return Err(Error::InvalidChannel(
                "initial distribution has a negative entry".into(),
            ));
        }
        let total: f64 = initial_dist.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidChannel(format!(
                "initial distribution sums to {total}, expected 1"
            )));
        }
        for e in &edges {
            if e.from >= num_states || e.to >= num_states {
                return Err(Error::InvalidChannel(format!(
                    "edge ({}, {}) -> {} references a state out of range",
                    e.from, e.input, e.to
                )));
            }
            if e.input > 1 {
                return Err(Error::InvalidChannel("inputs must be bits".into()));
            }
        }
        edges.sort_by_key(|e| (e.from, e.input));
        let mut alphabet: Vec<f64> = edges.iter().map(|e| e.output).collect();
        alphabet.sort_by(|a, b| a.partial_cmp(b).unwrap());
        alphabet.dedup();
        Ok(Self {
            name: name.into(),
            num_states,
            edges,
            initial_dist,
            output_alphabet: alphabet,
        })
    }

    /// Channel name as used in configuration files ("dic", "pdic", "pr2").
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of channel states `|S|`.
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Edges of one trellis section in canonical `(state, input)` order.
    pub fn edges(&self) -> &[FscEdge] {
        &self.edges
    }

    /// Initial state distribution.
    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    /// Distinct noiseless output symbols, ascending.
    pub fn output_alphabet(&self) -> &[f64] {
        &self.output_alphabet
    }

    /// True when every `(state, input)` pair has exactly one outgoing edge,
    /// i.e. the channel is a FSISIC and bit sequences map to unique paths.
    pub fn is_deterministic(&self) -> bool {
        self.check_deterministic().is_ok()
    }

    fn check_deterministic(&self) -> Result<()> {
        for s in 0..self.num_states {
            for x in 0..2u8 {
                let count = self
                    .edges
                    .iter()
                    .filter(|e| e.from == s && e.input == x)
                    .count();
                if count != 1 {
                    return Err(Error::NonDeterministicChannel {
                        state: s,
                        input: x,
                        count,
                    });
                }
            }
        }
        Ok(())
    }

    /// The unique edge leaving `state` under `input`. Requires determinism.
    pub fn step(&self, state: usize, input: u8) -> Result<&FscEdge> {
        self.check_deterministic()?;
        Ok(self
            .edges
            .iter()
            .find(|e| e.from == state && e.input == input)
            .expect("deterministic spec covers every (state, input)"))
    }

    /// Replaces the initial distribution with a point mass on `state`.
    pub fn with_start_state(mut self, state: usize) -> Result<Self> {
        if state >= self.num_states {
            return Err(Error::InvalidChannel(format!(
                "start state {state} out of range"
            )));
        }
        self.initial_dist = vec![0.0; self.num_states];
        self.initial_dist[state] = 1.0;
        Ok(self)
    }

    /// Replaces the initial distribution with the uniform one.
    pub fn with_uniform_start(mut self) -> Self {
        self.initial_dist = vec![1.0 / self.num_states as f64; self.num_states];
        self
    }

    /// Mean squared noiseless output under i.i.d. uniform input bits at the
    /// stationary state distribution.
    pub fn output_power(&self) -> Result<f64> {
        self.check_deterministic()?;
        let n = self.num_states;
        // Stationary distribution of the uniform-input state chain, found by
        // solving pi (P - I) = 0 with the normalization sum(pi) = 1.
        let mut p = vec![vec![0.0f64; n]; n];
        for e in &self.edges {
            p[e.from][e.to] += 0.5;
        }
        let mut a = vec![vec![0.0f64; n + 1]; n];
        for col in 0..n {
            for row in 0..n {
                a[col][row] = p[row][col] - if row == col { 1.0 } else { 0.0 };
            }
        }
        // Overwrite the last equation with sum(pi) = 1.
        for row in 0..n {
            a[n - 1][row] = 1.0;
        }
        a[n - 1][n] = 1.0;
        let pi = solve_dense(&mut a)?;
        let mut power = 0.0;
        for e in &self.edges {
            power += pi[e.from] * 0.5 * e.output * e.output;
        }
        Ok(power)
    }

    /// Noise standard deviation for a given SNR in dB, with SNR defined as
    /// output power divided by the noise variance. SNR is capped at 100 dB
    /// so very clean channels stay representable.
    pub fn sigma_for_snr_db(&self, snr_db: f64) -> Result<f64> {
        let power = self.output_power()?;
        let snr = snr_db.min(100.0);
        Ok((power * 10f64.powf(-snr / 10.0)).sqrt())
    }
}

/// Gaussian elimination with partial pivoting on an augmented system given
/// as rows of length `n + 1`.
fn solve_dense(a: &mut [Vec<f64>]) -> Result<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::NumericalAbort(
                "singular system while computing stationary distribution".into(),
            ));
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let factor = a[row][col] / a[col][col];
                for k in col..=n {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

/// Dicode channel: impulse response `1 - z^-1` on bit inputs. The state is
/// the previous input bit and the output is `x - s`, so the alphabet is
/// `{-1, 0, 1}`.
pub fn build_dicode() -> FscSpec {
    let mut edges = Vec::new();
    for s in 0..2usize {
        for x in 0..2u8 {
            edges.push(FscEdge {
                from: s,
                input: x,
                to: x as usize,
                output: x as f64 - s as f64,
            });
        }
    }
    FscSpec::new("dic", 2, edges, vec![0.5, 0.5]).expect("static construction")
}

/// Precoded dicode channel: the input is differentially encoded
/// (`b' = x xor b`) before the dicode filter, so the state is the current
/// precoder output and the section output is `b' - b`.
pub fn build_precoded_dicode() -> FscSpec {
    let mut edges = Vec::new();
    for b in 0..2usize {
        for x in 0..2u8 {
            let b_next = (x as usize) ^ b;
            edges.push(FscEdge {
                from: b,
                input: x,
                to: b_next,
                output: b_next as f64 - b as f64,
            });
        }
    }
    FscSpec::new("pdic", 2, edges, vec![0.5, 0.5]).expect("static construction")
}

/// Class-II partial response channel: impulse response `1 + 2 z^-1 + z^-2`
/// on bit inputs. The state holds the last two input bits `(x1, x2)`
/// encoded as `2 x1 + x2`, giving outputs in `{0, 1, 2, 3, 4}`.
pub fn build_pr2() -> FscSpec {
    let mut edges = Vec::new();
    for s in 0..4usize {
        let x1 = s >> 1; // previous bit
        let x2 = s & 1; // bit before that
        for x in 0..2u8 {
            edges.push(FscEdge {
                from: s,
                input: x,
                to: ((x as usize) << 1) | x1,
                output: x as f64 + 2.0 * x1 as f64 + x2 as f64,
            });
        }
    }
    FscSpec::new("pr2", 4, edges, vec![0.25; 4]).expect("static construction")
}

/// Looks up a built-in channel by its configuration name.
pub fn by_name(name: &str) -> Result<FscSpec> {
    match name {
        "dic" => Ok(build_dicode()),
        "pdic" => Ok(build_precoded_dicode()),
        "pr2" => Ok(build_pr2()),
        other => Err(Error::InvalidChannel(format!(
            "unknown channel '{other}' (expected dic | pdic | pr2)"
        ))),
    }
}

/// Names of the built-in channels.
pub const BUILTIN_CHANNELS: [&str; 3] = ["dic", "pdic", "pr2"];

/// A length-`n` trellis over a channel spec. Every section shares the same
/// edge structure (time-invariant channel); only the branch metrics vary
/// with time.
#[derive(Debug, Clone)]
pub struct Trellis {
    spec: FscSpec,
    len: usize,
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
}

impl Trellis {
    /// Number of sections `N`.
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when the trellis has no sections (never produced by
    /// [`build_trellis`], which requires `n >= 1`).
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of edges per section, `O`.
    pub fn num_edges(&self) -> usize {
        self.spec.edges().len()
    }

    /// Number of states `|S|`.
    pub fn num_states(&self) -> usize {
        self.spec.num_states()
    }

    /// The per-section edge list in canonical order. Identical for every
    /// section, so no section index is needed.
    pub fn section(&self) -> &[FscEdge] {
        self.spec.edges()
    }

    /// Edge by its canonical index within a section.
    pub fn edge(&self, e: usize) -> &FscEdge {
        &self.spec.edges()[e]
    }

    /// Edge indices entering state `k`.
    pub fn edges_into(&self, k: usize) -> &[usize] {
        &self.in_edges[k]
    }

    /// Edge indices leaving state `k`.
    pub fn edges_out_of(&self, k: usize) -> &[usize] {
        &self.out_edges[k]
    }

    /// The underlying channel spec.
    pub fn spec(&self) -> &FscSpec {
        &self.spec
    }

    /// Initial state distribution carried over from the spec.
    pub fn initial_dist(&self) -> &[f64] {
        self.spec.initial_dist()
    }

    /// The unique edge path of a bit sequence from `start_state`.
    /// Requires a deterministic spec and `bits.len() == self.len()`.
    pub fn path_of(&self, bits: &[u8], start_state: usize) -> Result<Vec<usize>> {
        if bits.len() != self.len {
            return Err(Error::DimensionMismatch(format!(
                "bit sequence of length {} on a length-{} trellis",
                bits.len(),
                self.len
            )));
        }
        self.spec.check_deterministic()?;
        let mut state = start_state;
        let mut path = Vec::with_capacity(bits.len());
        for &x in bits {
            let e = self
                .spec
                .edges()
                .iter()
                .position(|ed| ed.from == state && ed.input == x)
                .expect("deterministic spec covers every (state, input)");
            state = self.spec.edges()[e].to;
            path.push(e);
        }
        Ok(path)
    }

    /// Noiseless outputs along an edge path.
    pub fn outputs_along(&self, path: &[usize]) -> Vec<f64> {
        path.iter().map(|&e| self.edge(e).output).collect()
    }
}

/// Unrolls a spec over `n >= 1` sections.
pub fn build_trellis(spec: &FscSpec, n: usize) -> Result<Trellis> {
    if n == 0 {
        return Err(Error::InvalidChannel("trellis length must be >= 1".into()));
    }
    let states = spec.num_states();
    let mut in_edges = vec![Vec::new(); states];
    let mut out_edges = vec![Vec::new(); states];
    for (idx, e) in spec.edges().iter().enumerate() {
        in_edges[e.to].push(idx);
        out_edges[e.from].push(idx);
    }
    Ok(Trellis {
        spec: spec.clone(),
        len: n,
        in_edges,
        out_edges,
    })
}

/// Where a simulated transmission starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartState {
    /// Fixed start state (e.g. the zero state).
    Fixed(usize),
    /// Drawn from the spec's initial distribution.
    Sampled,
}

/// Output of [`simulate`]: the noisy observation and the edge path taken.
#[derive(Debug, Clone)]
pub struct SimOutput {
    /// Received values `y_i = a(path_i) + v_i`.
    pub y: Vec<f64>,
    /// Edge index per section.
    pub path: Vec<usize>,
    /// The realized start state.
    pub start_state: usize,
}

/// Sends `bits` through the channel with AWGN, returning the received
/// vector and the edge path. Rejects non-deterministic specs.
pub fn simulate<R: Rng + ?Sized>(
    spec: &FscSpec,
    bits: &[u8],
    sigma: f64,
    start: StartState,
    rng: &mut R,
) -> Result<SimOutput> {
    spec.check_deterministic()?;
    if sigma < 0.0 {
        return Err(Error::MalformedInput("sigma must be nonnegative".into()));
    }
    let start_state = match start {
        StartState::Fixed(s) => {
            if s >= spec.num_states() {
                return Err(Error::InvalidChannel(format!("start state {s} out of range")));
            }
            s
        }
        StartState::Sampled => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = spec.num_states() - 1;
            for (k, &p) in spec.initial_dist().iter().enumerate() {
                acc += p;
                if u < acc {
                    chosen = k;
                    break;
                }
            }
            chosen
        }
    };
    let trellis = build_trellis(spec, bits.len().max(1))?;
    let path = if bits.is_empty() {
        Vec::new()
    } else {
        trellis.path_of(bits, start_state)?
    };
    let y = path
        .iter()
        .map(|&e| {
            let noise: f64 = if sigma > 0.0 {
                let v: f64 = StandardNormal.sample(rng);
                sigma * v
            } else {
                0.0
            };
            trellis.edge(e).output + noise
        })
        .collect();
    Ok(SimOutput {
        y,
        path,
        start_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct convolution of a bit stream with an impulse response, used as
    /// the oracle for the trellis builders.
    fn convolve(bits: &[u8], taps: &[f64], history: &[u8]) -> Vec<f64> {
        let mut full: Vec<f64> = history.iter().rev().map(|&b| b as f64).collect();
        full.reverse();
        let offset = full.len();
        full.extend(bits.iter().map(|&b| b as f64));
        (0..bits.len())
            .map(|i| {
                taps.iter()
                    .enumerate()
                    .map(|(d, &t)| {
                        let idx = offset + i;
                        if idx >= d {
                            t * full[idx - d]
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn dicode_edges_match_spec() {
        let spec = build_dicode();
        assert_eq!(spec.num_states(), 2);
        assert_eq!(spec.edges().len(), 4);
        assert_eq!(spec.output_alphabet(), &[-1.0, 0.0, 1.0]);
        let e = spec.step(0, 1).unwrap();
        assert_eq!((e.to, e.output), (1, 1.0));
        let e = spec.step(0, 0).unwrap();
        assert_eq!((e.to, e.output), (0, 0.0));
        let e = spec.step(1, 0).unwrap();
        assert_eq!((e.to, e.output), (0, -1.0));
    }

    #[test]
    fn precoded_dicode_edges_match_spec() {
        let spec = build_precoded_dicode();
        let e = spec.step(0, 1).unwrap();
        assert_eq!((e.to, e.output), (1, 1.0));
        let e = spec.step(1, 1).unwrap();
        assert_eq!((e.to, e.output), (0, -1.0));
        let e = spec.step(1, 0).unwrap();
        assert_eq!((e.to, e.output), (1, 0.0));
    }

    #[test]
    fn pr2_edges_match_spec() {
        let spec = build_pr2();
        assert_eq!(spec.num_states(), 4);
        assert_eq!(spec.edges().len(), 8);
        // state (x1=1, x2=1) = 3 with input 1 emits 4
        let e = spec.step(3, 1).unwrap();
        assert_eq!(e.output, 4.0);
        let e = spec.step(0, 0).unwrap();
        assert_eq!(e.output, 0.0);
        // state (x1=0, x2=1) = 1 with input 1: a = 1 + 0 + 1 = 2, next (1,0) = 2
        let e = spec.step(1, 1).unwrap();
        assert_eq!((e.to, e.output), (2, 2.0));
    }

    #[test]
    fn canonical_order_is_state_then_input() {
        let trellis = build_trellis(&build_dicode(), 3).unwrap();
        assert_eq!(trellis.len(), 3);
        assert_eq!(trellis.num_edges(), 4);
        let order: Vec<(usize, u8)> = trellis.section().iter().map(|e| (e.from, e.input)).collect();
        assert_eq!(order, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
        let pr2 = build_trellis(&build_pr2(), 5).unwrap();
        assert_eq!((pr2.len(), pr2.num_edges()), (5, 8));
    }

    #[test]
    fn trellis_outputs_match_direct_convolution_exhaustively() {
        // All 2^n inputs for n up to 8, for all binary-history channels.
        for (spec, taps) in [(build_dicode(), vec![1.0, -1.0]), (build_pr2(), vec![1.0, 2.0, 1.0])]
        {
            for n in 1..=8usize {
                let trellis = build_trellis(&spec, n).unwrap();
                for word in 0..(1u32 << n) {
                    let bits: Vec<u8> = (0..n).map(|i| ((word >> i) & 1) as u8).collect();
                    let path = trellis.path_of(&bits, 0).unwrap();
                    let got = trellis.outputs_along(&path);
                    let want = convolve(&bits, &taps, &[0, 0]);
                    for (g, w) in got.iter().zip(&want) {
                        assert_eq!(g, w, "spec {} bits {bits:?}", spec.name());
                    }
                }
            }
        }
    }

    #[test]
    fn precoded_dicode_matches_precode_then_filter() {
        let spec = build_precoded_dicode();
        let trellis = build_trellis(&spec, 6).unwrap();
        for word in 0..(1u32 << 6) {
            let bits: Vec<u8> = (0..6).map(|i| ((word >> i) & 1) as u8).collect();
            // Differentially encode from b0 = 0, then dicode filter.
            let mut b = 0u8;
            let mut precoded = Vec::new();
            for &x in &bits {
                b ^= x;
                precoded.push(b);
            }
            let want = convolve(&precoded, &[1.0, -1.0], &[0]);
            let path = trellis.path_of(&bits, 0).unwrap();
            let got = trellis.outputs_along(&path);
            assert_eq!(got, want);
        }
    }

    #[test]
    fn every_state_has_one_edge_per_input() {
        for spec in [build_dicode(), build_precoded_dicode(), build_pr2()] {
            assert!(spec.is_deterministic());
            for s in 0..spec.num_states() {
                for x in 0..2u8 {
                    assert_eq!(
                        spec.edges()
                            .iter()
                            .filter(|e| e.from == s && e.input == x)
                            .count(),
                        1
                    );
                }
            }
        }
    }

    #[test]
    fn simulate_noiseless_is_the_filter_output() {
        let spec = build_dicode();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let out = simulate(&spec, &[1, 1, 0], 0.0, StartState::Fixed(0), &mut rng).unwrap();
        assert_eq!(out.y, vec![1.0, 0.0, -1.0]);
        let out = simulate(&spec, &[1, 0], 0.0, StartState::Fixed(0), &mut rng).unwrap();
        assert_eq!(out.y, vec![1.0, -1.0]);
        let out = simulate(&spec, &[0; 5], 0.0, StartState::Fixed(0), &mut rng).unwrap();
        assert_eq!(out.y, vec![0.0; 5]);
    }

    #[test]
    fn simulate_rejects_nondeterministic_spec() {
        let edges = vec![
            FscEdge { from: 0, input: 0, to: 0, output: 0.0 },
            FscEdge { from: 0, input: 0, to: 1, output: 1.0 },
            FscEdge { from: 0, input: 1, to: 1, output: 1.0 },
            FscEdge { from: 1, input: 0, to: 0, output: 0.0 },
            FscEdge { from: 1, input: 1, to: 1, output: 1.0 },
        ];
        let spec = FscSpec::new("fsc", 2, edges, vec![1.0, 0.0]).unwrap();
        assert!(!spec.is_deterministic());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = simulate(&spec, &[0, 1], 0.1, StartState::Fixed(0), &mut rng);
        assert!(matches!(err, Err(Error::NonDeterministicChannel { .. })));
    }

    #[test]
    fn output_power_analytic_values() {
        assert_relative_eq!(build_dicode().output_power().unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(
            build_precoded_dicode().output_power().unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(build_pr2().output_power().unwrap(), 5.5, epsilon = 1e-12);
    }

    #[test]
    fn output_power_confirmed_by_simulation() {
        let spec = build_pr2();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000usize;
        let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        let out = simulate(&spec, &bits, 0.0, StartState::Sampled, &mut rng).unwrap();
        let mean_sq = out.y.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((mean_sq - 5.5).abs() < 0.02, "measured {mean_sq}");
    }

    #[test]
    fn snr_conversion_round_trip() {
        let spec = build_dicode();
        let sigma = spec.sigma_for_snr_db(3.0).unwrap();
        assert_relative_eq!(
            10.0 * (0.5 / (sigma * sigma)).log10(),
            3.0,
            epsilon = 1e-12
        );
        // +infinity dB guard: capped at 100 dB
        let tiny = spec.sigma_for_snr_db(f64::INFINITY).unwrap();
        assert_relative_eq!(tiny, spec.sigma_for_snr_db(100.0).unwrap(), epsilon = 0.0);
    }

    #[test]
    fn by_name_round_trip() {
        for name in BUILTIN_CHANNELS {
            assert_eq!(by_name(name).unwrap().name(), name);
        }
        assert!(by_name("epr4").is_err());
    }
}
