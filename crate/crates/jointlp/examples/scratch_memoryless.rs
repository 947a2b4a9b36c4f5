//! Compare decoders on a memoryless BPSK channel (1-state FSC), where
//! turbo equalization degenerates to plain LDPC sum-product decoding.

use jointlp::channel::{build_trellis, simulate, FscEdge, FscSpec, StartState};
use jointlp::ijlp::{classic_turbo_equalize, decode, DecodeStatus, DecoderParams};
use jointlp::ldpc::random_regular;
use jointlp::metrics::awgn_metrics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let bpsk = FscSpec::new(
        "bpsk",
        1,
        vec![
            FscEdge { from: 0, input: 0, to: 0, output: 1.0 },
            FscEdge { from: 0, input: 1, to: 0, output: -1.0 },
        ],
        vec![1.0],
    )
    .unwrap();
    let code = random_regular(155, 3, 5, 20250).unwrap();
    let trellis = build_trellis(&bpsk, 155).unwrap();
    println!("power = {}", bpsk.output_power().unwrap());
    for snr_db in [1.0f64, 2.0, 3.0] {
        let sigma = bpsk.sigma_for_snr_db(snr_db).unwrap();
        let trials = 400;
        let mut err_cte = 0;
        let mut err_ijlp = 0;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = simulate(&bpsk, &vec![0u8; 155], sigma, StartState::Fixed(0), &mut rng).unwrap();
            let metrics = awgn_metrics(&trellis, &out.y, false).unwrap();
            let a = classic_turbo_equalize(&metrics, &code, &trellis, 100).unwrap();
            if a.status != DecodeStatus::ParityOk || a.word != vec![0u8; 155] {
                err_cte += 1;
            }
            let b = decode(&metrics, &code, &trellis, &DecoderParams::reference()).unwrap();
            if b.status != DecodeStatus::ParityOk || b.word != vec![0u8; 155] {
                err_ijlp += 1;
            }
        }
        println!("snr={snr_db} sigma={sigma:.3}: cte={err_cte} ijlp={err_ijlp} / {trials}");
    }
}
