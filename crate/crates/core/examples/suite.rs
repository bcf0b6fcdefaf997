//! Runs the pipeline over generated models and prints summary statistics.
//!
//! `cargo run --release --example suite -- [models] [strategy]`; set
//! `SUITE_DUMP=<dir>` to write each trace and sequence there.

use recad_core::metrics::chamfer;
use recad_core::pipeline::{generate_synthetic, run, PipelineConfig};
use recad_core::selection::Strategy;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let strategy: Strategy = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(Strategy::Geo);
    let cfg = PipelineConfig { strategy, ..Default::default() };
    let start = Instant::now();
    let (mut good_cd, mut same_steps, mut invalid, mut sum_cd) = (0, 0, 0, 0.0);
    for i in 0..n {
        let steps = 1 + (i % 3) as usize;
        let (gt, pc) = generate_synthetic(1000 + i, steps, cfg.n_points);
        match run(&pc, &cfg) {
            Ok(r) => {
                let cd = chamfer(&pc, &recad_core::geometry::sample_surface(&recad_core::Solid::from_sequence(&r.sequence).unwrap(), 8192, 7).unwrap());
                sum_cd += cd;
                good_cd += (cd * 100.0 <= 1.0) as u32;
                same_steps += (r.sequence.len() == gt.len()) as u32;
                let ops: String = r.sequence.steps.iter().map(|s| if s.boolean.token() == 1 { '+' } else { '-' }).collect();
                let gops: String = gt.steps.iter().map(|s| if s.boolean.token() == 1 { '+' } else { '-' }).collect();
                println!("{i:3} gt {gops:4} got {ops:6} cd {:.5} stop {:?}", cd * 100.0, r.trace.stop_reason);
                if let Ok(dir) = std::env::var("SUITE_DUMP") {
                    std::fs::write(format!("{dir}/{i}_trace.json"), r.trace.to_json()).unwrap();
                    std::fs::write(format!("{dir}/{i}_gt.json"), gt.to_json()).unwrap();
                    std::fs::write(format!("{dir}/{i}_pred.json"), r.sequence.to_json()).unwrap();
                }
            }
            Err(e) => {
                invalid += 1;
                println!("{i:3} invalid: {e}");
            }
        }
    }
    println!(
        "models {n} cd<=1: {good_cd} steps==: {same_steps} invalid: {invalid} mean cd x100 {:.4} time {:.1}s",
        sum_cd * 100.0 / (n - invalid) as f64,
        start.elapsed().as_secs_f64()
    );
}
