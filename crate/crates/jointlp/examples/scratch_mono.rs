//! Reproduce the cyclic-descent monotonicity violation from acceptance
//! criterion 5 (instance 2) and locate the offending block update.

use jointlp::channel::{build_dicode, build_precoded_dicode, build_trellis};
use jointlp::ijlp::{cyclic_decode, CyclicOptions, DecoderParams};
use jointlp::ldpc::{random_regular, random_regular_with, spc, RegularCodeOptions};
use jointlp::metrics::awgn_metrics;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for instance in 0..50 {
        let code = match instance % 3 {
            0 => spc(3 + instance % 4).unwrap(),
            1 => random_regular(9, 2, 3, instance as u64).unwrap(),
            _ => random_regular_with(
                8,
                3,
                4,
                instance as u64,
                RegularCodeOptions { avoid_four_cycles: false, max_retries: 1000 },
            )
            .unwrap(),
        };
        let spec = match instance % 2 {
            0 => build_dicode(),
            _ => build_precoded_dicode(),
        };
        let n = code.n();
        let trellis = build_trellis(&spec, n).unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        let metrics = awgn_metrics(&trellis, &y, false).unwrap();
        let params = DecoderParams::new(100.0, 100.0, 1, 1).unwrap();
        let run = cyclic_decode(
            &metrics,
            &code,
            &trellis,
            &params,
            CyclicOptions { eps_stop: 1e-9, max_sweeps: 5000 },
        )
        .unwrap();
        let mut worst = 0.0f64;
        let mut worst_idx = 0;
        for (idx, pair) in run.dual_trace.windows(2).enumerate() {
            let drop = pair[0] - pair[1];
            if drop > worst {
                worst = drop;
                worst_idx = idx;
            }
        }
        if worst > 1e-10 {
            let block = worst_idx % n;
            println!(
                "instance {instance}: worst drop {worst:.3e} at update {worst_idx} (bit {block}, sweep {}), n={n}, checks on bit: {:?}",
                worst_idx / n,
                code.var_neighbors(block),
            );
            println!("  obj before {:.12}, after {:.12}", run.dual_trace[worst_idx], run.dual_trace[worst_idx + 1]);
            println!("  y = {y:?}");
        }
    }
    println!("done");
}
