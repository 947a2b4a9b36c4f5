//! Diagnose: (a) the spc3 seed-61 gap inversion between (10,10) and
//! (100,100); (b) the slow-converging criterion-5 instance 10.

use jointlp::analysis::primal_from_dual;
use jointlp::channel::{build_dicode, build_trellis, simulate, StartState};
use jointlp::ijlp::{cyclic_decode, CyclicOptions, DecoderParams};
use jointlp::ldpc::{random_regular, spc};
use jointlp::lpexact::decode_exact;
use jointlp::metrics::awgn_metrics;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    // (a) spc3 with the acceptance draw.
    let spec = build_dicode();
    let code = spc(3).unwrap();
    let trellis = build_trellis(&spec, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let tx = simulate(&spec, &[1, 1, 0], 0.8, StartState::Fixed(0), &mut rng).unwrap();
    let metrics = awgn_metrics(&trellis, &tx.y, false).unwrap();
    let sol = decode_exact(&trellis, &code, &metrics).unwrap();
    println!(
        "spc3 draw: vertex {:?}, P* = {:.9}, f = {:?}",
        sol.vertex_kind,
        sol.objective,
        jointlp::analysis::project_symbolwise(&trellis, &sol.g)
    );
    for (k1, k2) in [(10.0, 10.0), (100.0, 100.0), (1000.0, 100.0)] {
        let params = DecoderParams::new(k1, k2, 1, 1).unwrap();
        for max_sweeps in [30_000usize, 300_000] {
            let run = cyclic_decode(
                &metrics,
                &code,
                &trellis,
                &params,
                CyclicOptions { eps_stop: 1e-15, max_sweeps },
            )
            .unwrap();
            let feas = primal_from_dual(&run.state, &code, &trellis, &metrics, &params).unwrap();
            println!(
                "  K=({k1},{k2}) sweeps={} (cap {max_sweeps}) conv={} dual_exit={:.10} value={:.10} gap={:.4e}",
                run.sweeps,
                run.converged,
                run.dual_trace.last().unwrap(),
                feas.value,
                feas.value - sol.objective
            );
        }
    }

    // (b) criterion-5 instance 10: reconstruct its exact inputs.
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for instance in 0..=10 {
        let _code = match instance % 3 {
            0 => spc(3 + instance % 4).unwrap(),
            1 => random_regular(9, 2, 3, instance as u64).unwrap(),
            _ => jointlp::ldpc::random_regular_with(
                8,
                3,
                4,
                instance as u64,
                jointlp::ldpc::RegularCodeOptions {
                    avoid_four_cycles: false,
                    max_retries: 1000,
                },
            )
            .unwrap(),
        };
        let n = _code.n();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        if instance == 10 {
            let spec = build_dicode();
            let trellis = build_trellis(&spec, n).unwrap();
            let metrics = awgn_metrics(&trellis, &y, false).unwrap();
            let params = DecoderParams::new(100.0, 100.0, 1, 1).unwrap();
            let run = cyclic_decode(
                &metrics,
                &_code,
                &trellis,
                &params,
                CyclicOptions { eps_stop: 1e-9, max_sweeps: 100_000 },
            )
            .unwrap();
            println!(
                "instance 10 (n={n}): sweeps={} converged={}",
                run.sweeps, run.converged
            );
            let t = &run.dual_trace;
            let per_sweep: Vec<f64> = t
                .chunks(n)
                .map(|c| *c.last().unwrap())
                .collect();
            let tail: Vec<f64> = per_sweep
                .windows(2)
                .rev()
                .take(5)
                .map(|w| w[1] - w[0])
                .collect();
            println!("  last per-sweep improvements: {tail:?}");
        }
    }
}
