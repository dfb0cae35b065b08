//! Number formatting shared by the text reports and the batch CSV.

use omest::Moment;

/// Rounds to `sig` significant figures without ever rounding digits left of
/// the decimal point, then drops trailing zeros.
pub fn fmt_sig(v: f64, sig: u8) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let int_digits = v.abs().log10().floor() as i32 + 1;
    let decimals = (i32::from(sig) - int_digits).clamp(0, 40) as usize;
    let s = format!("{v:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn fmt_moment(m: Moment, sig: u8) -> String {
    match m {
        Moment::Defined { value } => fmt_sig(value, sig),
        undefined => undefined.to_string(),
    }
}

pub fn fmt_opt(v: Option<f64>, sig: u8) -> String {
    v.map_or_else(|| "n/a".into(), |v| fmt_sig(v, sig))
}
