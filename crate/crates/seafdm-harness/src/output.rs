//! CSV emission and companion gnuplot scripts.

use std::fmt::Write as _;

use crate::ber::BerPoint;
use crate::sinr_sweep::SinrPoint;

/// BER sweep rows with the fixed header `snr_db,ber_bob,ber_eve,ber_baseline,frames`.
pub fn ber_csv(rows: &[BerPoint]) -> String {
    let mut out = String::from("snr_db,ber_bob,ber_eve,ber_baseline,frames\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.9e},{:.9e},{:.9e},{}",
            fmt_f64(r.snr_db),
            r.ber_bob,
            r.ber_eve,
            r.ber_baseline,
            r.frames
        );
    }
    out
}

/// Search-interval rows: `delta_e,ber_eve,frames`.
pub fn search_csv(rows: &[BerPoint]) -> String {
    let mut out = String::from("delta_e,ber_eve,frames\n");
    for r in rows {
        let _ = writeln!(out, "{:.9e},{:.9e},{}", r.delta_e, r.ber_eve, r.frames);
    }
    out
}

/// Analytic SINR rows: `c2max,sinr_eve_db`.
pub fn sinr_csv(rows: &[SinrPoint]) -> String {
    let mut out = String::from("c2max,sinr_eve_db\n");
    for r in rows {
        let _ = writeln!(out, "{:.9e},{:.9}", r.c2_max, r.sinr_eve_db);
    }
    out
}

fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "inf".to_string()
    }
}

/// A minimal gnuplot script for a CSV emitted next to it.
pub fn gnuplot_script(csv_path: &str, xlabel: &str, ylabel: &str, logy: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set xlabel '{xlabel}'");
    let _ = writeln!(s, "set ylabel '{ylabel}'");
    if logy {
        let _ = writeln!(s, "set logscale y");
    }
    let _ = writeln!(s, "set grid");
    let _ = writeln!(
        s,
        "plot for [col=2:*] '{csv_path}' using 1:col with linespoints"
    );
    s
}
