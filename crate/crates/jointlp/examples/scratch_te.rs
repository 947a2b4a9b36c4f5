//! Scratch driver: diagnose the K1 = K2 = 1 case. Compares the
//! simultaneous and cyclic schedules at unit temperatures, and checks the
//! small-code WER of each against the exact LP decoder.

use jointlp::channel::{build_dicode, build_precoded_dicode, build_trellis, simulate, StartState};
use jointlp::ijlp::{decode, DecodeStatus, DecoderParams, Schedule};
use jointlp::ldpc::{random_regular, spc};
use jointlp::lpexact::decode_exact;
use jointlp::lpexact::VertexKind;
use jointlp::metrics::awgn_metrics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    // Small-code sanity: SPC(3,2)+DIC at sigma in {0.5, 0.8}.
    let spec = build_dicode();
    let trellis = build_trellis(&spec, 3).unwrap();
    let code = spc(3).unwrap();
    for sigma in [0.5, 0.8] {
        let mut err_te = 0;
        let mut err_te2 = 0;
        let mut err_ref = 0;
        let mut err_lp = 0;
        let trials = 3000;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = simulate(&spec, &[1, 1, 0], sigma, StartState::Fixed(0), &mut rng).unwrap();
            let metrics = awgn_metrics(&trellis, &out.y, false).unwrap();
            let te = decode(&metrics, &code, &trellis, &DecoderParams::turbo(100)).unwrap();
            if te.status != DecodeStatus::ParityOk || te.word != vec![1, 1, 0] {
                err_te += 1;
            }
            let mut p2 = DecoderParams::turbo(100);
            p2.inner_rounds = 2;
            let te2 = decode(&metrics, &code, &trellis, &p2).unwrap();
            if te2.status != DecodeStatus::ParityOk || te2.word != vec![1, 1, 0] {
                err_te2 += 1;
            }
            let r = decode(&metrics, &code, &trellis, &DecoderParams::reference()).unwrap();
            if r.status != DecodeStatus::ParityOk || r.word != vec![1, 1, 0] {
                err_ref += 1;
            }
            let lp = decode_exact(&trellis, &code, &metrics).unwrap();
            let f: Vec<u8> = jointlp::analysis::project_symbolwise(&trellis, &lp.g)
                .iter()
                .map(|&v| u8::from(v > 0.5))
                .collect();
            if lp.vertex_kind == VertexKind::Fractional || f != vec![1, 1, 0] {
                err_lp += 1;
            }
        }
        println!(
            "spc3 sigma={sigma}: te(1,1)x1={err_te} te(1,1)x2={err_te2} ijlp(1000,100)={err_ref} exactlp={err_lp} / {trials}"
        );
    }

    // N = 155 pDIC, weight-76 codeword: classic TE with calibrated
    // (log-likelihood) metrics vs unscaled, vs ijlp.
    let code = random_regular(155, 3, 5, 20250).unwrap();
    let pdic = build_precoded_dicode();
    let trellis = build_trellis(&pdic, 155).unwrap();
    let word = scratch_codeword(&code, 77);
    for snr in [4.0f64, 5.0, 5.5] {
        let sigma = pdic.sigma_for_snr_db(snr).unwrap();
        let mut errors = [0usize; 3];
        let trials = 400;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let out = simulate(&pdic, &word, sigma, StartState::Fixed(0), &mut rng).unwrap();
            let plain = awgn_metrics(&trellis, &out.y, false).unwrap();
            let scaled =
                jointlp::metrics::awgn_metrics_loglik(&trellis, &out.y, false, sigma).unwrap();
            let a = jointlp::ijlp::classic_turbo_equalize(&plain, &code, &trellis, 100).unwrap();
            let b = jointlp::ijlp::classic_turbo_equalize(&scaled, &code, &trellis, 100).unwrap();
            let c = decode(&plain, &code, &trellis, &DecoderParams::reference()).unwrap();
            for (i, r) in [a, b, c].iter().enumerate() {
                if r.status != DecodeStatus::ParityOk || r.word != word {
                    errors[i] += 1;
                }
            }
        }
        println!(
            "n155 {snr}dB w76: cte-plain={} cte-scaled={} ijlp={} / {trials}",
            errors[0], errors[1], errors[2]
        );
    }
}

fn scratch_codeword(code: &jointlp::ldpc::LdpcCode, seed: u64) -> Vec<u8> {
    // Same construction as scratch_wer.
    use rand::seq::SliceRandom;
    let n = code.n();
    let m = code.m();
    let mut rows: Vec<Vec<u8>> = (0..m)
        .map(|j| {
            let mut row = vec![0u8; n];
            for &i in code.check_neighbors(j) {
                row[i] = 1;
            }
            row
        })
        .collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r >= m {
            break;
        }
        if let Some(pr) = (r..m).find(|&pr| rows[pr][c] == 1) {
            rows.swap(r, pr);
            let pivot_row = rows[r].clone();
            for (idx, row) in rows.iter_mut().enumerate() {
                if idx != r && row[c] == 1 {
                    for (a, b) in row.iter_mut().zip(&pivot_row) {
                        *a ^= b;
                    }
                }
            }
            pivot_cols.push(c);
            r += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let free: Vec<usize> = (0..n).filter(|c| !pivot_cols.contains(c)).collect();
    let mut word = vec![0u8; n];
    let mut chosen = free.clone();
    chosen.shuffle(&mut rng);
    for &c in chosen.iter().take(free.len() / 2) {
        word[c] = 1;
    }
    for (row_idx, &pc) in pivot_cols.iter().enumerate() {
        let parity = rows[row_idx]
            .iter()
            .zip(&word)
            .enumerate()
            .filter(|(c, (&h, &w))| *c != pc && h == 1 && w == 1)
            .count();
        word[pc] = (parity % 2) as u8;
    }
    word
}
