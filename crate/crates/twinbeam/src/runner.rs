//! Experiment dispatch and result emission.
//!
//! Every run writes `<out>/<experiment>.csv`, `<out>/<experiment>.json`, and
//! `<out>/config.resolved.json`. Data files contain no timestamps and floats
//! print in shortest round-trip form, so identical configurations produce
//! byte-identical outputs. JSON objects serialize with sorted keys.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::json;

use crate::config::{Experiment, ResolvedConfig};
use crate::error::{Error, Result};
use crate::experiments::{self, ScanResult};
use crate::oracle;

/// Run the configured experiment and write its outputs. Returns a one-line
/// summary for the console.
pub fn dispatch(cfg: &ResolvedConfig, out_dir: &Path) -> Result<String> {
    fs::create_dir_all(out_dir)?;
    let mut echo = cfg.clone();

    let summary = match cfg.experiment {
        Experiment::AngleSweep => {
            let out = experiments::run_angle_sweep(cfg)?;
            echo.s0 = Some(out.rig.s0);
            let rows: Vec<Vec<String>> = out
                .gain
                .points
                .iter()
                .zip(out.noise.points.iter())
                .map(|(&(th, g), &(_, db))| vec![fmt(th), fmt(g), fmt(db)])
                .collect();
            write_csv(&csv_path(out_dir, cfg), &["theta_mrad", "gain", "noise_db"], &rows)?;
            let sidecar = json!({
                "series": {
                    "gain": scan_json(&out.gain),
                    "noise": scan_json(&out.noise),
                },
                "rig": out.rig,
            });
            write_json(&json_path(out_dir, cfg), &sidecar)?;
            format!(
                "angle sweep: peak gain {:.2}, squeezing dip width {} mrad",
                out.gain.derived.get("gain_peak").copied().unwrap_or(f64::NAN),
                out.noise
                    .derived
                    .get("dip_fullwidth_mrad")
                    .map(|w| format!("{w:.2}"))
                    .unwrap_or_else(|| "n/a".into())
            )
        }
        Experiment::MandelProbe => {
            let out = experiments::run_mandel_probe(cfg)?;
            echo.s0 = Some(out.rig.s0);
            let rows = series_rows(&[("attenuation", &out.attenuation), ("clipping", &out.clipping)]);
            write_csv(&csv_path(out_dir, cfg), &["series", "transmission", "mandel_q"], &rows)?;
            let sidecar = json!({
                "series": {
                    "attenuation": scan_json(&out.attenuation),
                    "clipping": scan_json(&out.clipping),
                },
                "rig": out.rig,
            });
            write_json(&json_path(out_dir, cfg), &sidecar)?;
            format!(
                "mandel probe: Q(1) = {:.3}",
                out.attenuation.derived.get("q_full").copied().unwrap_or(f64::NAN)
            )
        }
        Experiment::MandelDiff => {
            let out = experiments::run_mandel_diff(cfg)?;
            echo.s0 = Some(out.rig.s0);
            let rows = series_rows(&[
                ("attenuation", &out.attenuation),
                ("symmetric", &out.symmetric),
                ("antisymmetric", &out.antisymmetric),
            ]);
            write_csv(&csv_path(out_dir, cfg), &["series", "transmission", "mandel_q"], &rows)?;
            let sidecar = json!({
                "series": {
                    "attenuation": scan_json(&out.attenuation),
                    "symmetric": scan_json(&out.symmetric),
                    "antisymmetric": scan_json(&out.antisymmetric),
                },
                "rig": out.rig,
            });
            write_json(&json_path(out_dir, cfg), &sidecar)?;
            format!(
                "mandel difference: Q(1) = {:.3}",
                out.attenuation.derived.get("q_full").copied().unwrap_or(f64::NAN)
            )
        }
        Experiment::SlitScan => {
            let out = experiments::run_slit_scan(cfg)?;
            echo.s0 = Some(out.rig.s0);
            let rows: Vec<Vec<String>> = out
                .noise
                .points
                .iter()
                .zip(out.power.points.iter())
                .map(|(&(x, db), &(_, p))| vec![fmt(x), fmt(db), fmt(p)])
                .collect();
            write_csv(
                &csv_path(out_dir, cfg),
                &["position_mrad", "noise_db", "probe_power_fraction"],
                &rows,
            )?;
            let sidecar = json!({
                "noise": scan_json(&out.noise),
                "power": scan_json(&out.power),
                "rig": out.rig,
            });
            write_json(&json_path(out_dir, cfg), &sidecar)?;
            format!(
                "slit scan: theta_c = {} mrad",
                out.noise
                    .derived
                    .get("theta_c_mrad")
                    .map(|w| format!("{w:.2}"))
                    .unwrap_or_else(|| "n/a (fit failed)".into())
            )
        }
        Experiment::TwoSpot => {
            let out = experiments::run_two_spot(cfg)?;
            echo.s0 = Some(out.rig.s0);
            let rows = vec![
                vec!["joint_db".into(), fmt(out.joint.rel_sql_db)],
                vec!["pair_a_db".into(), fmt(out.pair_a.rel_sql_db)],
                vec!["pair_b_db".into(), fmt(out.pair_b.rel_sql_db)],
                vec!["single_gaussian_db".into(), fmt(out.single_gaussian.rel_sql_db)],
                vec!["pair_a_with_b_blocked_db".into(), fmt(out.pair_a_with_b_blocked.rel_sql_db)],
                vec!["spot_overlap_power".into(), fmt(out.spot_overlap)],
            ];
            write_csv(&csv_path(out_dir, cfg), &["quantity", "value"], &rows)?;
            let sidecar = json!({
                "joint": out.joint,
                "pair_a": out.pair_a,
                "pair_b": out.pair_b,
                "single_gaussian": out.single_gaussian,
                "pair_a_with_b_blocked": out.pair_a_with_b_blocked,
                "spot_overlap_power": out.spot_overlap,
                "notes": out.notes,
                "rig": out.rig,
            });
            write_json(&json_path(out_dir, cfg), &sidecar)?;
            format!(
                "two-spot: joint {:.2} dB, pairs {:.2} / {:.2} dB",
                out.joint.rel_sql_db, out.pair_a.rel_sql_db, out.pair_b.rel_sql_db
            )
        }
        Experiment::Lg => {
            let out = experiments::run_lg(cfg)?;
            echo.s0 = Some(out.rig.s0);
            // Both interferograms share the grid; one row per pixel.
            let grid = out.probe_interferogram.grid;
            let rows: Vec<Vec<String>> = (0..grid.n_pixels())
                .map(|i| {
                    let (x, y) = grid.coords(i);
                    vec![
                        fmt(x),
                        fmt(y),
                        fmt(out.probe_interferogram.intensity[i]),
                        fmt(out.conjugate_interferogram.intensity[i]),
                    ]
                })
                .collect();
            write_csv(
                &csv_path(out_dir, cfg),
                &["theta_x_mrad", "theta_y_mrad", "probe_interferogram", "conjugate_interferogram"],
                &rows,
            )?;
            let sidecar = json!({
                "ell": out.ell,
                "conjugate_ell": out.conjugate_ell,
                "projections": out.projections,
                "probe_fringes": out.probe_fringes,
                "conjugate_fringes": out.conjugate_fringes,
                "squeezing": out.squeezing,
                "rig": out.rig,
            });
            write_json(&json_path(out_dir, cfg), &sidecar)?;
            format!(
                "lg ell={}: conjugate ell {}, fringes {}/{}, squeezing {:.2} dB",
                out.ell,
                out.conjugate_ell,
                out.probe_fringes,
                out.conjugate_fringes,
                out.squeezing.rel_sql_db
            )
        }
        Experiment::OracleVerify => {
            let battery = oracle::scenario_battery();
            let mut rows = Vec::new();
            let mut table = String::new();
            let mut worst: f64 = 0.0;
            for sc in &battery {
                let dev = oracle::compare_gaussian_fock(sc)?;
                worst = worst.max(dev);
                rows.push(vec![sc.label.to_string(), fmt(dev)]);
                table.push_str(&format!("{:<34} {:.3e}\n", sc.label, dev));
            }
            write_csv(&csv_path(out_dir, cfg), &["scenario", "max_relative_deviation"], &rows)?;
            let sidecar = json!({
                "scenarios": battery.len(),
                "worst_deviation": worst,
                "threshold": 1e-6,
            });
            write_json(&json_path(out_dir, cfg), &sidecar)?;
            print!("{table}");
            if worst >= 1e-6 {
                return Err(Error::Numerical(format!(
                    "oracle disagreement {worst:.3e} exceeds 1e-6"
                )));
            }
            format!("oracle battery: {} scenarios, worst deviation {worst:.3e}", battery.len())
        }
    };

    let echo_text = echo.to_json_pretty()?;
    fs::write(out_dir.join("config.resolved.json"), echo_text.as_bytes())?;
    Ok(summary)
}

fn csv_path(out_dir: &Path, cfg: &ResolvedConfig) -> std::path::PathBuf {
    out_dir.join(format!("{}.csv", cfg.experiment.name()))
}

fn json_path(out_dir: &Path, cfg: &ResolvedConfig) -> std::path::PathBuf {
    out_dir.join(format!("{}.json", cfg.experiment.name()))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn series_rows(series: &[(&str, &ScanResult)]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (name, scan) in series {
        for &(x, y) in &scan.points {
            rows.push(vec![name.to_string(), fmt(x), fmt(y)]);
        }
    }
    rows
}

fn scan_json(scan: &ScanResult) -> serde_json::Value {
    json!({
        "x_label": scan.x_label,
        "y_label": scan.y_label,
        "n_points": scan.points.len(),
        "derived": scan.derived,
        "fit": scan.fit,
        "notes": scan.notes,
    })
}

/// UTF-8, comma separated, header row, '.' decimals, LF line endings.
fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text.as_bytes())?;
    Ok(())
}
