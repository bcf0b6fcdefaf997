use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recad_core::dsl::{dequantize, parse, parse_text, quantize, random_sequence, tokenize, ParamRange, TokenAlphabet};
use recad_core::CadSequence;

fn extrusion_values(s: &CadSequence) -> Vec<f64> {
    s.steps
        .iter()
        .flat_map(|st| {
            let e = &st.extrusion;
            [e.d_plus, e.d_minus, e.translation[0], e.translation[1], e.translation[2], e.orientation[0], e.orientation[1], e.orientation[2], e.scale]
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn quantization_error_below_one_bin(v in -1.0f64..1.0) {
        let r = ParamRange::new("x", -1.0, 1.0, 64);
        let back = dequantize(quantize(v, &r).unwrap(), &r).unwrap();
        prop_assert!(back <= v + 1e-12);
        prop_assert!(v - back < r.bin_width() + 1e-12);
    }

    #[test]
    fn token_round_trip(seed in any::<u64>(), steps in 1usize..=4) {
        let alphabet = TokenAlphabet::default();
        let s = random_sequence(&mut ChaCha8Rng::seed_from_u64(seed), steps);
        let tokens = tokenize(&s, &alphabet).unwrap();
        let back = parse(&tokens, &alphabet).unwrap();
        prop_assert_eq!(back.len(), s.len());
        let widths = [2.0, 2.0, 2.0, 2.0, 2.0, 2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI, 2.0].map(|w| w / 64.0);
        for (i, (a, b)) in extrusion_values(&s).iter().zip(extrusion_values(&back)).enumerate() {
            prop_assert!((a - b).abs() <= widths[i % 9], "param {} moved {} -> {}", i % 9, a, b);
        }
        for (x, y) in s.steps.iter().zip(&back.steps) {
            prop_assert_eq!(x.boolean, y.boolean);
            prop_assert_eq!(&x.sketch, &y.sketch);
        }
        let again = tokenize(&back, &alphabet).unwrap();
        prop_assert_eq!(&again, &tokens);
        prop_assert_eq!(parse_text(&tokens.to_text().unwrap(), &alphabet).unwrap(), back);
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>(), steps in 1usize..=4) {
        let s = random_sequence(&mut ChaCha8Rng::seed_from_u64(seed), steps);
        prop_assert_eq!(CadSequence::from_json(&s.to_json()).unwrap(), s);
    }
}
