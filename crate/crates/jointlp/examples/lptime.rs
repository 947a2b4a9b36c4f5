use jointlp::channel::{build_precoded_dicode, build_trellis, simulate, StartState};
use jointlp::ldpc::{random_codeword, random_regular};
use jointlp::lpexact::{decode_exact, LpProblemP};
use jointlp::metrics::awgn_metrics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let pdic = build_precoded_dicode();
    for n in [20usize, 30] {
        let code = random_regular(n, 3, 5, 11).unwrap();
        let trellis = build_trellis(&pdic, n).unwrap();
        let word = random_codeword(&code, 5);
        let sigma = pdic.sigma_for_snr_db(4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tx = simulate(&pdic, &word, sigma, StartState::Fixed(0), &mut rng).unwrap();
        let metrics = awgn_metrics(&trellis, &tx.y, false).unwrap();
        let p = LpProblemP::build(&trellis, &code, &metrics, 0).unwrap();
        println!("n={n}: {} vars x {} rows", p.num_vars(), p.num_rows());
        let t0 = std::time::Instant::now();
        let sol = decode_exact(&trellis, &code, &metrics).unwrap();
        println!(
            "  solve: {:?} kind {:?} obj {:.3}",
            t0.elapsed(),
            sol.vertex_kind,
            sol.objective
        );
    }
}
