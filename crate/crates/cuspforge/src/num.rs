//! Small helpers around `rug` complex and float values.

use rug::float::Constant;
use rug::{Complex, Float};

/// Distance from {0, 1} below which a shape counts as degenerate.
pub const DEFAULT_GUARD: f64 = 1e-12;

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn two_pi_i(prec: u32) -> Complex {
    Complex::with_val(prec, (0, pi(prec) * 2u32))
}

pub fn abs(z: &Complex) -> Float {
    Float::with_val(z.prec().0, z.abs_ref())
}

pub fn abs_f64(z: &Complex) -> f64 {
    abs(z).to_f64()
}

/// log2 of |z|, saturating at -1e9 for zero.
pub fn log2_abs(z: &Complex) -> f64 {
    let a = abs(z);
    if a.is_zero() {
        return -1e9;
    }
    a.log2().to_f64()
}

pub fn pow2(e: f64) -> f64 {
    2f64.powf(e)
}

/// True when `|z| < 2^(-prec/2)`.
pub fn is_negligible(z: &Complex, prec: u32) -> bool {
    log2_abs(z) < -(prec as f64) / 2.0
}

pub fn digits_for(prec: u32) -> usize {
    ((prec as f64) * std::f64::consts::LOG10_2).ceil() as usize + 1
}

pub fn fmt_float(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(digits))
}

pub fn fmt_complex(z: &Complex, digits: usize) -> String {
    let (re, im) = z.clone().into_real_imag();
    let im_s = fmt_float(&im, digits);
    if im_s.starts_with('-') {
        format!("{}{}i", fmt_float(&re, digits), im_s)
    } else {
        format!("{}+{}i", fmt_float(&re, digits), im_s)
    }
}

/// Decimal strings `(re, im)` at full precision.
pub fn decimal_pair(z: &Complex) -> (String, String) {
    let d = digits_for(z.prec().0);
    (fmt_float(z.real(), d), fmt_float(z.imag(), d))
}

/// Parse `a`, `bi`, `a+bi`, `a-bi` or `a,b`.
pub fn parse_complex(s: &str, prec: u32) -> Option<Complex> {
    let s: String = s.chars().filter(|c| !c.is_whitespace() && *c != '(' && *c != ')').collect();
    let real = |t: &str| Float::parse(t).ok().map(|v| Float::with_val(prec, v));
    if let Some((a, b)) = s.split_once(',') {
        return Some(Complex::with_val(prec, (real(a)?, real(b)?)));
    }
    if let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) {
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            t => t,
        };
        return Some(Complex::with_val(prec, (real(re)?, real(im)?)));
    }
    Some(Complex::with_val(prec, (real(&s)?, 0)))
}
