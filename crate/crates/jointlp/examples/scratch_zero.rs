//! Debug the all-zero-codeword failure on pDIC at N = 155.

use jointlp::channel::{build_precoded_dicode, build_trellis, simulate, StartState};
use jointlp::ijlp::{decode, DecoderParams};
use jointlp::ldpc::random_regular;
use jointlp::metrics::awgn_metrics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let code = random_regular(155, 3, 5, 20250).unwrap();
    let pdic = build_precoded_dicode();
    let trellis = build_trellis(&pdic, 155).unwrap();
    let sigma = pdic.sigma_for_snr_db(4.0).unwrap();
    println!("sigma at 4 dB: {sigma}");
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let out = simulate(&pdic, &vec![0u8; 155], sigma, StartState::Fixed(0), &mut rng).unwrap();
    println!("y[0..6] = {:?}", &out.y[..6]);
    let metrics = awgn_metrics(&trellis, &out.y, false).unwrap();
    let res = decode(&metrics, &code, &trellis, &DecoderParams::reference()).unwrap();
    let weight: u32 = res.word.iter().map(|&b| b as u32).sum();
    println!(
        "status {:?} iters {} decoded weight {} gamma[0..6] {:?}",
        res.status,
        res.iterations,
        weight,
        &res.soft[..6]
    );
    let nonzero: Vec<usize> = res.word.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect();
    println!("nonzero positions: {:?}", &nonzero[..nonzero.len().min(20)]);
    // Is the decoded word a codeword?
    println!("syndrome ok: {}", code.syndrome_ok(&res.word));
    // Distance structure: what's the noiseless output of the decoded word?
    let path = trellis.path_of(&res.word, 0).unwrap();
    let outputs = trellis.outputs_along(&path);
    let energy: f64 = outputs.iter().map(|a| a * a).sum();
    println!("decoded-word output energy: {energy}");
}
