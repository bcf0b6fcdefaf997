use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Continuous range and bin count of one DSL parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
    pub bins: u32,
}

impl ParamRange {
    pub const fn new(name: &'static str, min: f64, max: f64, bins: u32) -> Self {
        ParamRange { name, min, max, bins }
    }

    pub fn bin_width(&self) -> f64 {
        (self.max - self.min) / self.bins as f64
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantizeError {
    #[error("{param} = {value} outside [{min}, {max}]")]
    OutOfRange { param: &'static str, value: f64, min: f64, max: f64 },
    #[error("{param} bin {bin} outside [0, {bins})")]
    BinOutOfRange { param: &'static str, bin: u32, bins: u32 },
}

// Values within this fraction of the span past either end are clamped
// rather than rejected, absorbing round-off from normalization.
const RANGE_SLACK: f64 = 1e-9;
// Guards the floor against products that land a hair below an exact bin.
const FLOOR_GUARD: f64 = 1e-9;

/// `floor((v - min) / (max - min) * Q)`, clamped to `[0, Q - 1]`.
pub fn quantize(v: f64, range: &ParamRange) -> Result<u32, QuantizeError> {
    let span = range.max - range.min;
    let slack = RANGE_SLACK * span.abs();
    if !v.is_finite() || v < range.min - slack || v > range.max + slack {
        return Err(QuantizeError::OutOfRange { param: range.name, value: v, min: range.min, max: range.max });
    }
    let x = (v - range.min) / span * range.bins as f64;
    let bin = (x + FLOOR_GUARD).floor().max(0.0) as u32;
    Ok(bin.min(range.bins - 1))
}

/// `min + V * (max - min) / Q`.
pub fn dequantize(bin: u32, range: &ParamRange) -> Result<f64, QuantizeError> {
    if bin >= range.bins {
        return Err(QuantizeError::BinOutOfRange { param: range.name, bin, bins: range.bins });
    }
    Ok(range.min + bin as f64 * range.bin_width())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SYM: ParamRange = ParamRange::new("v", -1.0, 1.0, 64);

    #[test]
    fn lower_bound_is_bin_zero() {
        assert_eq!(quantize(-1.0, &SYM), Ok(0));
        assert_eq!(quantize(0.0, &ParamRange::new("u", 0.0, 1.0, 64)), Ok(0));
    }

    #[test]
    fn half_maps_to_48() {
        assert_eq!(quantize(0.5, &SYM), Ok(48));
        assert_eq!(dequantize(48, &SYM), Ok(0.5));
    }

    #[test]
    fn upper_bound_clamps_to_last_bin() {
        assert_eq!(quantize(1.0, &SYM), Ok(63));
    }

    #[test]
    fn bin_zero_dequantizes_to_min() {
        assert_eq!(dequantize(0, &SYM), Ok(-1.0));
    }

    #[test]
    fn out_of_range_is_named() {
        match quantize(1.5, &SYM) {
            Err(QuantizeError::OutOfRange { param, .. }) => assert_eq!(param, "v"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(dequantize(64, &SYM).is_err());
        assert!(quantize(f64::NAN, &SYM).is_err());
    }

    #[test]
    fn round_trip_error_below_one_bin() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let v: f64 = rng.random_range(-1.0..1.0);
            let back = dequantize(quantize(v, &SYM).unwrap(), &SYM).unwrap();
            assert!((back - v).abs() < 2.0 / 64.0, "{v} -> {back}");
        }
    }
}
