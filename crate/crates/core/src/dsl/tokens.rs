//! Quantized token codec.
//!
//! Per step the stream holds the sketch block (coordinate tokens per curve
//! followed by end-of-curve, end-of-loop, end-of-face and end-of-sketch
//! markers), the nine extrusion parameters closed by end-of-extrude, and the
//! Boolean token. Steps are concatenated without a global terminator.

use super::quant::{dequantize, quantize, ParamRange, QuantizeError};
use super::validate::{validate, Violation};
use super::{BooleanOp, CadSequence, Curve, CurveKind, Extrusion, Face, Loop, ModelingStep, Sketch};
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

pub const END_SKETCH: u32 = 1;
pub const END_FACE: u32 = 2;
pub const END_LOOP: u32 = 3;
pub const END_CURVE: u32 = 4;
/// Sketch coordinate bins are shifted past the four sketch markers.
pub const COORD_OFFSET: u32 = 5;
pub const END_EXTRUDE: u32 = 1;
/// Extrusion bins are shifted past the end-of-extrude marker.
pub const EXTRUDE_OFFSET: u32 = 2;
pub const BOOL_UNION: u32 = 1;
pub const BOOL_SUBTRACTION: u32 = 0;

const EXTRUDE_PARAMS: usize = 9;

/// Continuous ranges and bin counts for every parameter family.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenAlphabet {
    pub coord: ParamRange,
    pub d_plus: ParamRange,
    pub d_minus: ParamRange,
    pub translation: ParamRange,
    pub angle: ParamRange,
    pub scale: ParamRange,
}

impl Default for TokenAlphabet {
    fn default() -> Self {
        TokenAlphabet {
            coord: ParamRange::new("sketch coordinate", 0.0, 1.0, 64),
            d_plus: ParamRange::new("d_plus", -1.0, 1.0, 64),
            d_minus: ParamRange::new("d_minus", -1.0, 1.0, 64),
            translation: ParamRange::new("translation", -1.0, 1.0, 64),
            angle: ParamRange::new("orientation", -PI, PI, 64),
            scale: ParamRange::new("scale", 0.0, 2.0, 64),
        }
    }
}

impl TokenAlphabet {
    /// Largest sketch token value.
    pub fn max_coord_token(&self) -> u32 {
        COORD_OFFSET + self.coord.bins - 1
    }

    pub fn max_extrude_token(&self) -> u32 {
        EXTRUDE_OFFSET + self.d_plus.bins.max(self.d_minus.bins).max(self.translation.bins).max(self.angle.bins).max(self.scale.bins) - 1
    }

    /// Loop-closure and circle tolerance in sketch units (1.5 coordinate bins).
    pub fn closure_tolerance(&self) -> f64 {
        1.5 * self.coord.bin_width()
    }

    fn extrude_ranges(&self) -> [&ParamRange; EXTRUDE_PARAMS] {
        [
            &self.d_plus,
            &self.d_minus,
            &self.translation,
            &self.translation,
            &self.translation,
            &self.angle,
            &self.angle,
            &self.angle,
            &self.scale,
        ]
    }
}

/// Flat token list; step boundaries are implied by the grammar.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenStream {
    pub tokens: Vec<u32>,
}

impl TokenStream {
    pub fn new(tokens: Vec<u32>) -> Self {
        TokenStream { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Whitespace-separated integers, one step per line.
    pub fn to_text(&self) -> Result<String, ParseError> {
        let bounds = step_bounds(&self.tokens)?;
        let mut out = String::new();
        for (a, b) in bounds {
            let line: Vec<String> = self.tokens[a..b].iter().map(u32::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        Ok(out)
    }

    /// Reads whitespace-separated integers; line breaks are not significant.
    pub fn from_text(text: &str) -> Result<Self, ParseError> {
        let tokens = text
            .split_whitespace()
            .enumerate()
            .map(|(i, t)| t.parse::<u32>().map_err(|_| ParseError::BadInteger { index: i, text: t.to_string() }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TokenStream { tokens })
    }
}

impl fmt::Display for TokenStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.tokens.iter().map(u32::to_string).collect();
        f.write_str(&s.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TokenizeError {
    #[error("cannot tokenize an empty sequence")]
    Empty,
    #[error("step {step}: {source}")]
    Range { step: usize, source: QuantizeError },
    #[error("sequence is invalid: {0:?}")]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty token stream")]
    Empty,
    #[error("token stream truncated after index {index}")]
    Truncated { index: usize },
    #[error("unexpected token {token} at index {index}: expected {expected}")]
    Unexpected { index: usize, token: u32, expected: &'static str },
    #[error("curve ending at index {index} has {coords} coordinate tokens")]
    WrongPointCount { index: usize, coords: usize },
    #[error("unknown token {token} at index {index}")]
    UnknownToken { index: usize, token: u32 },
    #[error("token {index} ({text:?}) is not a non-negative integer")]
    BadInteger { index: usize, text: String },
    #[error("parsed sequence fails validation: {0:?}")]
    Invalid(Vec<Violation>),
}

/// Encodes a valid sequence.
pub fn tokenize(seq: &CadSequence, alphabet: &TokenAlphabet) -> Result<TokenStream, TokenizeError> {
    if seq.is_empty() {
        return Err(TokenizeError::Empty);
    }
    let violations = validate(seq);
    if !violations.is_empty() {
        return Err(TokenizeError::Invalid(violations));
    }
    let mut out = Vec::new();
    for (si, step) in seq.steps.iter().enumerate() {
        let q = |v: f64, r: &ParamRange| quantize(v, r).map_err(|source| TokenizeError::Range { step: si, source });
        for face in &step.sketch.faces {
            for lp in face.loops() {
                for curve in &lp.curves {
                    for p in &curve.points {
                        out.push(q(p[0], &alphabet.coord)? + COORD_OFFSET);
                        out.push(q(p[1], &alphabet.coord)? + COORD_OFFSET);
                    }
                    out.push(END_CURVE);
                }
                out.push(END_LOOP);
            }
            out.push(END_FACE);
        }
        out.push(END_SKETCH);
        for (v, r) in extrude_values(&step.extrusion).iter().zip(alphabet.extrude_ranges()) {
            out.push(q(*v, r)? + EXTRUDE_OFFSET);
        }
        out.push(END_EXTRUDE);
        out.push(step.boolean.token());
    }
    Ok(TokenStream { tokens: out })
}

fn extrude_values(e: &Extrusion) -> [f64; EXTRUDE_PARAMS] {
    let [tx, ty, tz] = e.translation;
    let [th, ph, rh] = e.orientation;
    [e.d_plus, e.d_minus, tx, ty, tz, th, ph, rh, e.scale]
}

/// Decodes a stream into a sequence and validates the result.
pub fn parse(stream: &TokenStream, alphabet: &TokenAlphabet) -> Result<CadSequence, ParseError> {
    let toks = &stream.tokens;
    if toks.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut cur = Cursor { toks, pos: 0 };
    let mut steps = Vec::new();
    while !cur.done() {
        steps.push(parse_step(&mut cur, alphabet)?);
    }
    let seq = CadSequence { steps };
    let violations = validate(&seq);
    if violations.is_empty() {
        Ok(seq)
    } else {
        Err(ParseError::Invalid(violations))
    }
}

/// Parses the text token format.
pub fn parse_text(text: &str, alphabet: &TokenAlphabet) -> Result<CadSequence, ParseError> {
    parse(&TokenStream::from_text(text)?, alphabet)
}

struct Cursor<'a> {
    toks: &'a [u32],
    pos: usize,
}

impl Cursor<'_> {
    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Result<u32, ParseError> {
        self.toks
            .get(self.pos)
            .copied()
            .ok_or(ParseError::Truncated { index: self.toks.len().saturating_sub(1) })
    }

    fn next(&mut self) -> Result<u32, ParseError> {
        let t = self.peek()?;
        self.pos += 1;
        Ok(t)
    }
}

fn parse_step(cur: &mut Cursor<'_>, alphabet: &TokenAlphabet) -> Result<ModelingStep, ParseError> {
    let max_coord = alphabet.max_coord_token();
    let coord = |t: u32| dequantize(t - COORD_OFFSET, &alphabet.coord).expect("token range checked");

    // Sketch block.
    let mut faces: Vec<Face> = Vec::new();
    let mut loops: Vec<Loop> = Vec::new();
    let mut curves: Vec<Curve> = Vec::new();
    let mut coords: Vec<f64> = Vec::new();
    loop {
        let index = cur.pos;
        let t = cur.next()?;
        match t {
            END_CURVE => {
                let kind = if coords.len().is_multiple_of(2) { CurveKind::from_point_count(coords.len() / 2) } else { None };
                let kind = kind.ok_or(ParseError::WrongPointCount { index, coords: coords.len() })?;
                let points = coords.chunks(2).map(|c| [c[0], c[1]]).collect();
                curves.push(Curve { kind, points });
                coords.clear();
            }
            END_LOOP => {
                if !coords.is_empty() || curves.is_empty() {
                    return Err(ParseError::Unexpected { index, token: t, expected: "curve before end of loop" });
                }
                loops.push(Loop::new(std::mem::take(&mut curves)));
            }
            END_FACE => {
                if !coords.is_empty() || !curves.is_empty() || loops.is_empty() {
                    return Err(ParseError::Unexpected { index, token: t, expected: "closed loop before end of face" });
                }
                let mut it = std::mem::take(&mut loops).into_iter();
                let outer = it.next().expect("non-empty");
                faces.push(Face { outer, inner: it.collect() });
            }
            END_SKETCH => {
                if !coords.is_empty() || !curves.is_empty() || !loops.is_empty() || faces.is_empty() {
                    return Err(ParseError::Unexpected { index, token: t, expected: "closed face before end of sketch" });
                }
                break;
            }
            t if (COORD_OFFSET..=max_coord).contains(&t) => coords.push(coord(t)),
            t => return Err(ParseError::UnknownToken { index, token: t }),
        }
    }

    // Extrusion block.
    let mut vals = [0.0; EXTRUDE_PARAMS];
    for (slot, range) in vals.iter_mut().zip(alphabet.extrude_ranges()) {
        let index = cur.pos;
        let t = cur.next()?;
        if t == END_EXTRUDE {
            return Err(ParseError::Unexpected { index, token: t, expected: "extrusion parameter" });
        }
        if t < EXTRUDE_OFFSET || t - EXTRUDE_OFFSET >= range.bins {
            return Err(ParseError::UnknownToken { index, token: t });
        }
        *slot = dequantize(t - EXTRUDE_OFFSET, range).expect("checked");
    }
    let index = cur.pos;
    let t = cur.next()?;
    if t != END_EXTRUDE {
        return Err(ParseError::Unexpected { index, token: t, expected: "end of extrusion" });
    }
    let index = cur.pos;
    let t = cur.next()?;
    let boolean = BooleanOp::from_token(t).ok_or(ParseError::Unexpected { index, token: t, expected: "Boolean token" })?;
    let [d_plus, d_minus, tx, ty, tz, th, ph, rh, scale] = vals;
    Ok(ModelingStep {
        sketch: Sketch { faces },
        extrusion: Extrusion { d_plus, d_minus, translation: [tx, ty, tz], orientation: [th, ph, rh], scale },
        boolean,
    })
}

/// Half-open index ranges of each step in a syntactically valid stream.
fn step_bounds(toks: &[u32]) -> Result<Vec<(usize, usize)>, ParseError> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < toks.len() {
        while toks.get(i).copied() != Some(END_SKETCH) {
            if i >= toks.len() {
                return Err(ParseError::Truncated { index: toks.len().saturating_sub(1) });
            }
            i += 1;
        }
        // end-of-sketch, nine parameters, end-of-extrude, Boolean
        i += 1 + EXTRUDE_PARAMS + 2;
        if i > toks.len() {
            return Err(ParseError::Truncated { index: toks.len().saturating_sub(1) });
        }
        out.push((start, i));
        start = i;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_step() -> ModelingStep {
        ModelingStep {
            sketch: Sketch::single(Face::new(Loop::rectangle([0.0, 0.0], [1.0, 1.0]))),
            extrusion: Extrusion::simple(0.0, 1.0),
            boolean: BooleanOp::Union,
        }
    }

    #[test]
    fn unit_square_hand_encoding() {
        let a = TokenAlphabet::default();
        let seq = CadSequence::new(vec![unit_square_step()]);
        let ts = tokenize(&seq, &a).unwrap();
        // Coordinates: 0 -> bin 0 -> token 5; 1 -> bin 63 (clamped) -> token 68.
        let lo = 5;
        let hi = 68;
        let mut want = vec![
            lo, lo, hi, lo, 4, // (0,0)-(1,0)
            hi, lo, hi, hi, 4, // (1,0)-(1,1)
            hi, hi, lo, hi, 4, // (1,1)-(0,1)
            lo, hi, lo, lo, 4, // (0,1)-(0,0)
            3, 2, 1,
        ];
        // d+ = 1 -> 63, d- = 0 -> 32, translation 0 -> 32, angles 0 -> 32, scale 1 -> 32; all +2.
        want.extend([65, 34, 34, 34, 34, 34, 34, 34, 34, 1, 1]);
        assert_eq!(ts.tokens, want);
    }

    #[test]
    fn empty_sequence_is_rejected() {
        assert_eq!(tokenize(&CadSequence::default(), &TokenAlphabet::default()), Err(TokenizeError::Empty));
        assert_eq!(parse(&TokenStream::default(), &TokenAlphabet::default()), Err(ParseError::Empty));
    }

    #[test]
    fn missing_end_of_extrude_is_a_truncation_at_last_index() {
        let a = TokenAlphabet::default();
        let mut ts = tokenize(&CadSequence::new(vec![unit_square_step()]), &a).unwrap();
        let n = ts.tokens.len();
        ts.tokens.remove(n - 2);
        assert_eq!(parse(&ts, &a), Err(ParseError::Truncated { index: n - 2 }));
    }

    #[test]
    fn single_segment_loop_fails_validation() {
        let a = TokenAlphabet::default();
        let mut toks = vec![5, 5, 68, 5, 4, 3, 2, 1];
        toks.extend([65, 34, 34, 34, 34, 34, 34, 34, 34, 1, 1]);
        match parse(&TokenStream::new(toks), &a) {
            Err(ParseError::Invalid(v)) => assert!(!v.is_empty()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn odd_coordinate_count_is_rejected() {
        let a = TokenAlphabet::default();
        let toks = vec![5, 5, 6, 4, 3, 2, 1];
        assert!(matches!(parse(&TokenStream::new(toks), &a), Err(ParseError::WrongPointCount { index: 3, coords: 3 })));
    }

    #[test]
    fn unknown_and_misplaced_tokens() {
        let a = TokenAlphabet::default();
        assert!(matches!(
            parse(&TokenStream::new(vec![99]), &a),
            Err(ParseError::UnknownToken { index: 0, token: 99 })
        ));
        assert!(matches!(
            parse(&TokenStream::new(vec![3]), &a),
            Err(ParseError::Unexpected { index: 0, token: 3, .. })
        ));
        assert!(matches!(
            parse(&TokenStream::new(vec![0]), &a),
            Err(ParseError::UnknownToken { index: 0, token: 0 })
        ));
    }

    #[test]
    fn text_format_is_one_step_per_line() {
        let a = TokenAlphabet::default();
        let mut second = unit_square_step();
        second.extrusion = Extrusion::simple(-0.5, 0.25);
        second.extrusion.scale = 0.5;
        second.boolean = BooleanOp::Subtraction;
        let seq = CadSequence::new(vec![unit_square_step(), second]);
        let ts = tokenize(&seq, &a).unwrap();
        let text = ts.to_text().unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().next().unwrap().ends_with(" 1 1"));
        assert!(text.lines().nth(1).unwrap().ends_with(" 1 0"));
        assert_eq!(TokenStream::from_text(&text).unwrap(), ts);
        let back = parse_text(&text, &a).unwrap();
        assert_eq!(back.steps[1].boolean, BooleanOp::Subtraction);
    }
}
