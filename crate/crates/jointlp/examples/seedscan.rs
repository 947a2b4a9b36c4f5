use jointlp::channel::{build_dicode, build_trellis, simulate, StartState};
use jointlp::ldpc::{random_regular_with, spc, RegularCodeOptions};
use jointlp::lpexact::{decode_exact, VertexKind};
use jointlp::metrics::awgn_metrics;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let spec = build_dicode();
    let spc3 = spc(3).unwrap();
    let t3 = build_trellis(&spec, 3).unwrap();
    let n8 = random_regular_with(8, 3, 4, 1, RegularCodeOptions { avoid_four_cycles: false, max_retries: 1000 }).unwrap();
    let t8 = build_trellis(&spec, 8).unwrap();
    for seed in 100..130u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = simulate(&spec, &[1, 1, 0], 0.8, StartState::Fixed(0), &mut rng).unwrap();
        let ma = awgn_metrics(&t3, &a.y, false).unwrap();
        let ka = decode_exact(&t3, &spc3, &ma).unwrap().vertex_kind;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = simulate(&spec, &[0u8; 8], 0.8, StartState::Fixed(0), &mut rng).unwrap();
        let mb = awgn_metrics(&t8, &b.y, false).unwrap();
        let kb = decode_exact(&t8, &n8, &mb).unwrap().vertex_kind;
        if ka == VertexKind::Integral && kb == VertexKind::Integral {
            println!("seed {seed}: both integral");
        }
    }
}
