use recad_core::metrics::{evaluate_pair, EvalConfig, GtSource};
use recad_core::pipeline::{generate_synthetic, run, PipelineConfig};
use recad_core::selection::Strategy;

#[test]
fn generated_models_reconstruct_closely() {
    let cfg = PipelineConfig::default();
    let eval = EvalConfig { samples: 8192, ..EvalConfig::default() };
    for (i, seed) in [5u64, 6, 7].into_iter().enumerate() {
        let (gt, cloud) = generate_synthetic(seed, 1 + i, cfg.n_points);
        let rec = run(&cloud, &cfg).unwrap();
        let r = evaluate_pair("m", &GtSource::Sequence(gt.clone()), &rec.sequence, &eval);
        assert!(r.valid);
        assert!(r.cd_x100.unwrap() <= 1.0, "model {seed}: {r:?}");
        assert!(rec.sequence.len() <= gt.len() + 2);
    }
}

#[test]
fn strategies_all_produce_executable_sequences() {
    let (_, cloud) = generate_synthetic(21, 2, 4096);
    for strategy in [Strategy::Geo, Strategy::Heur, Strategy::Rand] {
        let cfg = PipelineConfig { strategy, n_points: 4096, max_steps: 4, ..PipelineConfig::default() };
        let rec = run(&cloud, &cfg).unwrap();
        assert!(!rec.sequence.is_empty(), "{strategy:?}");
        assert!(recad_core::Solid::from_sequence(&rec.sequence).is_ok());
        assert_eq!(rec.trace.steps, rec.sequence.len());
    }
}
