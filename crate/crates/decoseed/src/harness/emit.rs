//! Artifact rendering: CSV curves, static SVG charts, the run manifest,
//! and the all-or-nothing staged write that keeps failed runs from
//! leaving partial output behind.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::araki_zurek::DecoherenceCurve;

/// 17 significant digits: enough to reproduce any f64 exactly.
pub(crate) fn fmt_sig(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// One row per (time, pair), times outermost, fixed header.
pub(crate) fn render_csv(curve: &DecoherenceCurve) -> String {
    let times = curve.times();
    let pairs = curve.pairs();
    let mut out = String::with_capacity(64 * times.len() * pairs.len().max(1));
    out.push_str("t,pair_m,pair_n,re_chi,im_chi,abs_chi,block_tn,block_hs\n");
    for (ti, &t) in times.iter().enumerate() {
        for (pi, p) in pairs.iter().enumerate() {
            let z = p.chi[ti];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt_sig(t),
                p.m,
                p.n,
                fmt_sig(z.re),
                fmt_sig(z.im),
                fmt_sig(z.norm()),
                fmt_sig(curve.block_tn(pi, ti)),
                fmt_sig(curve.block_hs(pi, ti)),
            ));
        }
    }
    out
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 400.0;
const PLOT_X0: f64 = 60.0;
const PLOT_X1: f64 = 616.0;
const PLOT_Y0: f64 = 34.0;
const PLOT_Y1: f64 = 356.0;

/// Static line chart of |chi| and the off-diagonal block trace norm
/// against time for one sector pair.
pub(crate) fn render_pair_svg(
    curve: &DecoherenceCurve,
    pair_index: usize,
    scenario: &str,
) -> String {
    let times = curve.times();
    let pair = &curve.pairs()[pair_index];
    let abs: Vec<f64> = curve.abs_chi(pair_index);
    let tn: Vec<f64> = (0..times.len())
        .map(|ti| curve.block_tn(pair_index, ti))
        .collect();

    let t0 = times.first().copied().unwrap_or(0.0);
    let t1 = times.last().copied().unwrap_or(1.0);
    let t_span = (t1 - t0).max(f64::MIN_POSITIVE);
    let y_max = abs.iter().chain(tn.iter()).fold(1.0_f64, |a, &v| a.max(v)) * 1.05;

    let x_of = |t: f64| PLOT_X0 + (t - t0) / t_span * (PLOT_X1 - PLOT_X0);
    let y_of = |v: f64| PLOT_Y1 - (v / y_max).clamp(0.0, 1.0) * (PLOT_Y1 - PLOT_Y0);
    let points = |vals: &[f64]| {
        vals.iter()
            .zip(times)
            .map(|(&v, &t)| format!("{:.2},{:.2}", x_of(t), y_of(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut s = String::with_capacity(4096);
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    s.push_str(&format!(
        "<text x=\"{:.0}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"14\">{} sector pair ({}, {})</text>\n",
        SVG_W / 2.0,
        xml_escape(scenario),
        pair.m,
        pair.n
    ));

    // Axes and ticks.
    s.push_str(&format!(
        "<line x1=\"{PLOT_X0}\" y1=\"{PLOT_Y1}\" x2=\"{PLOT_X1}\" y2=\"{PLOT_Y1}\" \
         stroke=\"#333333\" stroke-width=\"1\"/>\n"
    ));
    s.push_str(&format!(
        "<line x1=\"{PLOT_X0}\" y1=\"{PLOT_Y0}\" x2=\"{PLOT_X0}\" y2=\"{PLOT_Y1}\" \
         stroke=\"#333333\" stroke-width=\"1\"/>\n"
    ));
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let t = t0 + frac * (t1 - t0);
        let x = x_of(t);
        s.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{PLOT_Y1}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n",
            PLOT_Y1 + 4.0
        ));
        s.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\" \
             font-family=\"sans-serif\" font-size=\"11\">{t:.3}</text>\n",
            PLOT_Y1 + 18.0
        ));
        let v = frac * y_max;
        let y = y_of(v);
        s.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{PLOT_X0}\" y2=\"{y:.2}\" \
             stroke=\"#bbbbbb\" stroke-width=\"0.5\"/>\n",
            PLOT_X0 - 4.0
        ));
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" \
             font-family=\"sans-serif\" font-size=\"11\">{v:.3}</text>\n",
            PLOT_X0 - 8.0,
            y + 4.0
        ));
    }
    s.push_str(&format!(
        "<text x=\"{:.0}\" y=\"{:.0}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"12\">t</text>\n",
        (PLOT_X0 + PLOT_X1) / 2.0,
        SVG_H - 6.0
    ));

    // Curves.
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points(&abs)
    ));
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" \
         stroke-dasharray=\"6 3\" points=\"{}\"/>\n",
        points(&tn)
    ));

    // Legend.
    s.push_str(&format!(
        "<line x1=\"{:.0}\" y1=\"{PLOT_Y0}\" x2=\"{:.0}\" y2=\"{PLOT_Y0}\" \
         stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
        PLOT_X1 - 150.0,
        PLOT_X1 - 126.0
    ));
    s.push_str(&format!(
        "<text x=\"{:.0}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">abs_chi</text>\n",
        PLOT_X1 - 120.0,
        PLOT_Y0 + 4.0
    ));
    s.push_str(&format!(
        "<line x1=\"{:.0}\" y1=\"{:.2}\" x2=\"{:.0}\" y2=\"{:.2}\" stroke=\"#d62728\" \
         stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>\n",
        PLOT_X1 - 150.0,
        PLOT_Y0 + 16.0,
        PLOT_X1 - 126.0,
        PLOT_Y0 + 16.0
    ));
    s.push_str(&format!(
        "<text x=\"{:.0}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\">block_tn</text>\n",
        PLOT_X1 - 120.0,
        PLOT_Y0 + 20.0
    ));
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Writes every staged file or none: on any failure the files already
/// written in this batch are removed before the error is returned.
pub(crate) fn write_staged(
    dir: &Path,
    files: &[(String, String)],
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::with_capacity(files.len());
    for (name, content) in files {
        let path = dir.join(name);
        match fs::write(&path, content.as_bytes()) {
            Ok(()) => written.push(path),
            Err(e) => {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(e);
            }
        }
    }
    Ok(written)
}
