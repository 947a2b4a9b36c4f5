//! Which metric convention should the iterative LP decoder run on?
//! Compares unscaled vs log-likelihood metrics at the reference
//! temperatures, and times one exact LP solve at N = 155 for a ground
//! truth.

use jointlp::channel::{build_precoded_dicode, build_trellis, simulate, StartState};
use jointlp::ijlp::{decode, DecodeStatus, DecoderParams};
use jointlp::ldpc::random_regular;
use jointlp::lpexact::{decode_exact, VertexKind};
use jointlp::metrics::{awgn_metrics, awgn_metrics_loglik};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let code = random_regular(155, 3, 5, 20250).unwrap();
    let pdic = build_precoded_dicode();
    let trellis = build_trellis(&pdic, 155).unwrap();
    let word = codeword(&code, 77);

    for snr in [4.0f64, 4.5, 5.0] {
        let sigma = pdic.sigma_for_snr_db(snr).unwrap();
        let trials = 400;
        let mut errs = [0usize; 2];
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(7777 + seed);
            let out = simulate(&pdic, &word, sigma, StartState::Fixed(0), &mut rng).unwrap();
            let plain = awgn_metrics(&trellis, &out.y, false).unwrap();
            let scaled = awgn_metrics_loglik(&trellis, &out.y, false, sigma).unwrap();
            let a = decode(&plain, &code, &trellis, &DecoderParams::reference()).unwrap();
            let b = decode(&scaled, &code, &trellis, &DecoderParams::reference()).unwrap();
            for (i, r) in [a, b].iter().enumerate() {
                if r.status != DecodeStatus::ParityOk || r.word != word {
                    errs[i] += 1;
                }
            }
        }
        eprintln!(
            "{snr} dB: ijlp-plain={} ijlp-scaled={} / {trials}",
            errs[0], errs[1]
        );
    }

    if std::env::args().any(|a| a == "--with-lp") {
        // One exact LP solve at 4 dB for timing.
        let sigma = pdic.sigma_for_snr_db(4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = simulate(&pdic, &word, sigma, StartState::Fixed(0), &mut rng).unwrap();
        let metrics = awgn_metrics(&trellis, &out.y, false).unwrap();
        let t0 = std::time::Instant::now();
        let sol = decode_exact(&trellis, &code, &metrics).unwrap();
        eprintln!(
            "exact LP N=155: {:?} obj={:.3} in {:?}",
            sol.vertex_kind,
            sol.objective,
            t0.elapsed()
        );
        let correct = sol.vertex_kind == VertexKind::Integral
            && jointlp::analysis::project_symbolwise(&trellis, &sol.g)
                .iter()
                .map(|&f| u8::from(f > 0.5))
                .collect::<Vec<u8>>()
                == word;
        eprintln!("LP decoded correctly: {correct}");
    }
}

fn codeword(code: &jointlp::ldpc::LdpcCode, seed: u64) -> Vec<u8> {
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
