//! Probe the closed-form cyclic block solve against brute-force
//! evaluation of the softened dual objective (path enumeration).

use jointlp::channel::{build_dicode, build_trellis, Trellis};
use jointlp::ijlp::{DecoderParams, MessageState};
use jointlp::ldpc::{spc, CheckConfigs, LdpcCode};
use jointlp::metrics::{awgn_metrics, BranchMetrics};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent evaluation of f(m) = (1/K1) sum_j ln sum_B exp(-K1 sum m 1_B)
/// + (1/K2) ln sum_paths exp(-K2 sum Gamma), by explicit enumeration.
fn f_direct(
    trellis: &Trellis,
    code: &LdpcCode,
    metrics: &BranchMetrics,
    configs: &CheckConfigs,
    m: &[Vec<f64>],
    k1: f64,
    k2: f64,
) -> f64 {
    let n = trellis.len();
    let mut code_term = 0.0;
    for j in 0..code.m() {
        let members = code.check_neighbors(j);
        let mut terms = Vec::new();
        for &mask in configs.of(j) {
            let mut s = 0.0;
            for (t, &i) in members.iter().enumerate() {
                if mask >> t & 1 == 1 {
                    let slot = code.var_neighbors(i).iter().position(|&jj| jj == j).unwrap();
                    s += m[i][slot];
                }
            }
            terms.push(-k1 * s);
        }
        code_term += jointlp::numerics::log_sum_exp(&terms) / k1;
    }
    // Path enumeration.
    let sums: Vec<f64> = m.iter().map(|row| row.iter().sum()).collect();
    let gamma_cap = |i: usize, e: usize| {
        let edge = trellis.edge(e);
        metrics.get(i, e) - if edge.input == 1 { sums[i] } else { 0.0 }
    };
    let mut terms = Vec::new();
    for start in 0..trellis.num_states() {
        // enumerate all edge paths from `start`
        let mut stack = vec![(0usize, start, 0.0f64)];
        while let Some((i, s, cost)) = stack.pop() {
            if i == n {
                terms.push(-k2 * cost);
                continue;
            }
            for &e in trellis.edges_out_of(s) {
                stack.push((i + 1, trellis.edge(e).to, cost + gamma_cap(i, e)));
            }
        }
    }
    code_term + jointlp::numerics::log_sum_exp(&terms) / k2
}

fn main() {
    let spec = build_dicode();
    let code = spc(6).unwrap();
    let n = 6;
    let trellis = build_trellis(&spec, n).unwrap();
    let configs = CheckConfigs::enumerate(&code).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
    let metrics = awgn_metrics(&trellis, &y, false).unwrap();
    let params = DecoderParams::new(100.0, 100.0, 1, 1).unwrap();

    // Drive a few cyclic sweeps manually via decode's cyclic machinery:
    // instead, replicate by calling the public ops: run simultaneous
    // iterations to move messages somewhere non-trivial.
    let mut state = MessageState::new(&code, &trellis);
    for _ in 0..3 {
        state.bit_to_trellis(&trellis, &metrics, &params);
        state.forward_backward(&trellis, &params).unwrap();
        state.trellis_to_bit(&trellis, &params).unwrap();
        state.check_update(&code, &params);
    }
    // Now check: does one cyclic block update on bit p decrease f?
    // Use the library's cyclic_decode from this exact message state is
    // not exposed; instead verify the dual objective identity and probe
    // around the current m for the claimed block optimality of a fresh
    // cyclic run.
    state.bit_to_trellis(&trellis, &metrics, &params);
    state.forward_backward(&trellis, &params).unwrap();
    let lib = jointlp::ijlp::dual_objective(&state, &params, &code, &trellis, 0).unwrap();
    let direct = -f_direct(&trellis, &code, &metrics, &configs, state.m(), params.k1, params.k2);
    println!("objective: library {lib:.12} direct {direct:.12} diff {:.3e}", lib - direct);

    // Full cyclic run; then probe every block for improvability.
    let run = jointlp::ijlp::cyclic_decode(
        &metrics,
        &code,
        &trellis,
        &params,
        jointlp::ijlp::CyclicOptions { eps_stop: 1e-12, max_sweeps: 3000 },
    )
    .unwrap();
    let mut worst_drop = 0.0f64;
    for pair in run.dual_trace.windows(2) {
        worst_drop = worst_drop.max(pair[0] - pair[1]);
    }
    println!("cyclic run: sweeps {} worst drop {:.3e}", run.sweeps, worst_drop);
    let m_final = run.state.m().to_vec();
    let f0 = f_direct(&trellis, &code, &metrics, &configs, &m_final, params.k1, params.k2);
    let mut best_gain = 0.0f64;
    for p in 0..n {
        for slot in 0..m_final[p].len() {
            for delta in [-1e-3, -1e-4, -1e-5, 1e-5, 1e-4, 1e-3] {
                let mut m2 = m_final.clone();
                m2[p][slot] += delta;
                let f2 = f_direct(&trellis, &code, &metrics, &configs, &m2, params.k1, params.k2);
                if f0 - f2 > best_gain {
                    best_gain = f0 - f2;
                    println!("  improvable: bit {p} slot {slot} delta {delta:+.0e} gains {:.3e}", f0 - f2);
                }
            }
        }
    }
    println!("best single-coordinate gain at exit: {best_gain:.3e}");
}
