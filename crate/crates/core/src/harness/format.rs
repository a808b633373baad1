/// Renders `v` with six significant digits, dropping trailing zeros.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    // Rounding can bump the exponent (9.999996 -> 10.0000).
    let s = format!("{:.5e}", v);
    let (mantissa, e) = s.split_once('e').expect("exponent form");
    let e: i32 = e.parse().expect("integer exponent");
    let exp = exp.max(e);
    if (-5..6).contains(&exp) {
        let decimals = (5 - e).max(0) as usize;
        let fixed = format!("{:.*}", decimals, v);
        trim_zeros(&fixed)
    } else {
        format!("{}e{}", trim_zeros(mantissa), e)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// `v` rounded to what [`fmt_sig`] prints.
pub fn round_sig(v: f64) -> f64 {
    fmt_sig(v).parse().unwrap_or(v)
}
