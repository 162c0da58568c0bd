//! Number rendering for text reports: 6 significant digits.

use ebchan::C64;

pub const SIG_DIGITS: usize = 6;

/// `%g`-style rendering with `SIG_DIGITS` significant digits.
pub fn real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn complex(z: C64) -> String {
    let (re, im) = (real(z.re), real(z.im.abs()));
    match (re.as_str(), im.as_str()) {
        (_, "0") => re,
        ("0", _) if z.im < 0.0 => format!("-{im}i"),
        ("0", _) => format!("{im}i"),
        _ if z.im < 0.0 => format!("{re}-{im}i"),
        _ => format!("{re}+{im}i"),
    }
}

/// Right-aligned rows of cells, columns separated by two spaces.
pub fn table(rows: &[Vec<String>], indent: &str) -> String {
    let width = rows.iter().flatten().map(String::len).max().unwrap_or(0);
    rows.iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
            format!("{indent}{}\n", cells.join("  "))
        })
        .collect()
}
