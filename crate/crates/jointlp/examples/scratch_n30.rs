//! Exact LP vs iterative LP vs classic TE on a (3,5) code small enough to
//! solve the LP directly. Validates that the iterative decoder tracks the
//! LP and measures the LP-to-BP gap at moderate SNR.

use jointlp::analysis::project_symbolwise;
use jointlp::channel::{build_precoded_dicode, build_trellis, simulate, StartState};
use jointlp::ijlp::{classic_turbo_equalize, decode, DecodeStatus, DecoderParams};
use jointlp::ldpc::{random_codeword, random_regular};
use jointlp::lpexact::{decode_exact, VertexKind};
use jointlp::metrics::{awgn_metrics, awgn_metrics_loglik};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn main() {
    let code = random_regular(20, 3, 5, 11).unwrap();
    let pdic = build_precoded_dicode();
    let trellis = build_trellis(&pdic, 20).unwrap();
    let word = random_codeword(&code, 5);
    let w: u32 = word.iter().map(|&b| b as u32).sum();
    eprintln!("weight {w}");
    for snr in [3.0f64, 4.0, 5.0, 6.0] {
        let sigma = pdic.sigma_for_snr_db(snr).unwrap();
        let trials: u64 = 3000;
        let counts = (0..trials)
            .into_par_iter()
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(31000 + seed);
                let out =
                    simulate(&pdic, &word, sigma, StartState::Fixed(0), &mut rng).unwrap();
                let plain = awgn_metrics(&trellis, &out.y, false).unwrap();
                let scaled = awgn_metrics_loglik(&trellis, &out.y, false, sigma).unwrap();
                let lp = decode_exact(&trellis, &code, &plain).unwrap();
                let lp_err = lp.vertex_kind == VertexKind::Fractional
                    || project_symbolwise(&trellis, &lp.g)
                        .iter()
                        .map(|&f| u8::from(f > 0.5))
                        .collect::<Vec<u8>>()
                        != word;
                let it = decode(&plain, &code, &trellis, &DecoderParams::reference()).unwrap();
                let it_err = it.status != DecodeStatus::ParityOk || it.word != word;
                let te = classic_turbo_equalize(&scaled, &code, &trellis, 100).unwrap();
                let te_err = te.status != DecodeStatus::ParityOk || te.word != word;
                let agree = lp_err == it_err;
                [lp_err as u64, it_err as u64, te_err as u64, agree as u64]
            })
            .reduce(
                || [0u64; 4],
                |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]],
            );
        eprintln!(
            "snr={snr}: lp={} ijlp={} cte={} lp/ijlp-agree={}/{} ",
            counts[0], counts[1], counts[2], counts[3], trials
        );
    }
}
