//! Scratch driver: exercise the cyclic solver + primal reconstruction
//! against the simplex optimum on small instances (gap sandwich).

use jointlp::analysis::{gap_delta_with_eps, primal_from_dual};
use jointlp::channel::{build_dicode, build_trellis, simulate, StartState};
use jointlp::ijlp::{cyclic_decode, CyclicOptions, DecoderParams};
use jointlp::ldpc::{random_regular_with, spc, RegularCodeOptions};
use jointlp::lpexact::{decode_exact, LpProblemP};
use jointlp::metrics::awgn_metrics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let spec = build_dicode();
    for (name, code, bits) in [
        ("spc3", spc(3).unwrap(), vec![1u8, 1, 0]),
        (
            "rand(3,4)n8",
            random_regular_with(
                8,
                3,
                4,
                1,
                RegularCodeOptions {
                    avoid_four_cycles: false,
                    max_retries: 1000,
                },
            )
            .unwrap(),
            vec![0u8; 8],
        ),
    ] {
        let n = code.n();
        let trellis = build_trellis(&spec, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let out = simulate(&spec, &bits, 0.8, StartState::Fixed(0), &mut rng).unwrap();
        let metrics = awgn_metrics(&trellis, &out.y, false).unwrap();
        let p_star = decode_exact(&trellis, &code, &metrics).unwrap().objective;
        let mut prev_gap = f64::INFINITY;
        for (k1, k2) in [(10.0, 10.0), (100.0, 100.0), (1000.0, 100.0)] {
            let params = DecoderParams::new(k1, k2, 1, 1).unwrap();
            let t0 = std::time::Instant::now();
            let outcome = cyclic_decode(
                &metrics,
                &code,
                &trellis,
                &params,
                CyclicOptions {
                    eps_stop: 1e-15,
                    max_sweeps: 200000,
                },
            )
            .unwrap();
            let feas = primal_from_dual(&outcome.state, &code, &trellis, &metrics, &params).unwrap();
            let problem = LpProblemP::build(&trellis, &code, &metrics, 0).unwrap();
            let resid = problem.residual(&feas.g, &feas.w);
            let c_const: f64 = outcome
                .state
                .m()
                .iter()
                .flatten()
                .map(|m| m.abs())
                .sum::<f64>()
                / n as f64;
            let bound = gap_delta_with_eps(
                &code,
                &trellis,
                k1,
                k2,
                feas.epsilon,
                metrics.abs_sum(),
                c_const,
            );
            let gap = feas.value - p_star;
            let dual_exit = *outcome.dual_trace.last().unwrap();
            println!(
                "    primal-dual slack (value_ps - dual) = {:.3e}",
                feas.value_ps - dual_exit
            );
            println!(
                "{name} K=({k1},{k2}): sweeps={} conv={} eps={:.2e} gap={:.6e} deltaN={:.6e} resid={:.2e} mono_ok={} t={:?}",
                outcome.sweeps,
                outcome.converged,
                feas.epsilon,
                gap,
                bound.delta() * n as f64,
                resid,
                outcome
                    .dual_trace
                    .windows(2)
                    .all(|w| w[1] >= w[0] - 1e-10),
                t0.elapsed(),
            );
            assert!(gap >= -1e-9, "feasible value below optimum!");
            let ok = gap <= bound.delta() * n as f64;
            println!("    sandwich ok = {ok}, gap shrinks = {}", gap <= prev_gap + 1e-12);
            prev_gap = gap;
        }
    }
}
