//! Scratch driver: explore fractional vertices of SPC(3,2)+DIC and stalls
//! of the iterative decoder, to pin seeds for the randomized-search tests.

use jointlp::analysis::{project_signal_space, project_symbolwise};
use jointlp::channel::{build_dicode, build_trellis, simulate, StartState};
use jointlp::ijlp::{decode, DecodeStatus, DecoderParams};
use jointlp::ldpc::spc;
use jointlp::lpexact::{decode_exact, VertexKind};
use jointlp::metrics::awgn_metrics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let spec = build_dicode();
    let trellis = build_trellis(&spec, 3).unwrap();
    let code = spc(3).unwrap();

    // Direct look: what does the LP do at y = (1, -0.55, -0.45)?
    let metrics = awgn_metrics(&trellis, &[1.0, -0.55, -0.45], false).unwrap();
    let sol = decode_exact(&trellis, &code, &metrics).unwrap();
    println!(
        "fixed y: kind={:?} obj={:.4} f={:?} g={:?}",
        sol.vertex_kind,
        sol.objective,
        project_symbolwise(&trellis, &sol.g),
        sol.g
    );

    // Randomized search for fractional vertices around sigma = 0.8.
    let mut frac_count = 0;
    let mut hist: std::collections::HashMap<String, (usize, u64)> = Default::default();
    for seed in 0..30000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = simulate(&spec, &[1, 1, 0], 0.8, StartState::Fixed(0), &mut rng).unwrap();
        let metrics = awgn_metrics(&trellis, &out.y, false).unwrap();
        let sol = decode_exact(&trellis, &code, &metrics).unwrap();
        if sol.vertex_kind == VertexKind::Fractional {
            frac_count += 1;
            let f = project_symbolwise(&trellis, &sol.g);
            let p = project_signal_space(&trellis, &sol.g);
            let key = format!(
                "f=({:.2},{:.2},{:.2}) p=({:.2},{:.2},{:.2})",
                f[0], f[1], f[2], p[0], p[1], p[2]
            );
            let e = hist.entry(key).or_insert((0, seed));
            e.0 += 1;
        }
    }
    println!("fractional in 30000 draws: {frac_count}");
    let mut rows: Vec<_> = hist.into_iter().collect();
    rows.sort_by_key(|(_, (c, _))| std::cmp::Reverse(*c));
    for (k, (c, seed)) in rows.iter().take(12) {
        println!("  {c:6}  first_seed={seed:6}  {k}");
    }

    // Randomized search for iterative-decoder stalls.
    let params = DecoderParams::reference();
    let mut stalls = 0;
    for seed in 0..5000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = simulate(&spec, &[1, 1, 0], 0.8, StartState::Fixed(0), &mut rng).unwrap();
        let metrics = awgn_metrics(&trellis, &out.y, false).unwrap();
        let res = decode(&metrics, &code, &trellis, &params).unwrap();
        if res.status == DecodeStatus::MaxIter {
            stalls += 1;
            if stalls <= 8 {
                let post: Vec<f64> = res.soft.iter().map(|g| 1.0 / (1.0 + g.exp())).collect();
                println!(
                    "stall seed={seed} post=({:.3},{:.3},{:.3}) y={:?}",
                    post[0], post[1], post[2], out.y
                );
            }
        }
    }
    println!("stalls in 5000 draws: {stalls}");
}
