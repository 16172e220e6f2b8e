//! Fatigue summaries: stress intensity, Paris law, S-N tables and creep curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{RunLog, StepRecord};

/// SENB dimensions entering the handbook stress intensity formula (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenbGeometry {
    pub span: f64,
    pub thickness: f64,
    pub height: f64,
    pub notch_depth: f64,
}

/// Handbook geometry function of the three-point bend specimen.
pub fn senb_geometry_function(alpha: f64) -> f64 {
    3.0 * alpha.sqrt() * (1.99 - alpha * (1.0 - alpha) * (2.15 - 3.93 * alpha + 2.70 * alpha * alpha))
        / (2.0 * (1.0 + 2.0 * alpha) * (1.0 - alpha).powf(1.5))
}

/// K_I in MPa·mm^0.5 for force `force` (N) and total crack depth `depth`
/// (notch plus grown crack, mm).
pub fn compute_sif_senb(force: f64, geom: &SenbGeometry, depth: f64) -> Result<f64> {
    let alpha = depth / geom.height;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Postproc(format!(
            "crack depth ratio a/h = {alpha} outside (0, 1)"
        )));
    }
    Ok(force * geom.span / (geom.thickness * geom.height.powf(1.5)) * senb_geometry_function(alpha))
}

/// Last record at the highest force of every cycle ≥ 1, in cycle order.
pub fn upper_level_records(log: &RunLog) -> Vec<StepRecord> {
    let mut out: Vec<StepRecord> = Vec::new();
    for r in log.records.iter().filter(|r| r.cycle >= 1) {
        match out.last_mut() {
            Some(last) if last.cycle == r.cycle => {
                if r.force >= last.force {
                    *last = *r;
                }
            }
            _ => out.push(*r),
        }
    }
    out
}

fn lower_force(log: &RunLog, cycle: usize) -> f64 {
    log.records
        .iter()
        .filter(|r| r.cycle == cycle)
        .map(|r| r.force)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParisPoint {
    pub cycle: usize,
    /// Grown crack length at the upper level (mm).
    pub a: f64,
    /// Total crack depth over beam height.
    pub depth_ratio: f64,
    pub delta_k: f64,
    pub da_dn: f64,
}

/// Per-cycle (ΔK, da/dN). da/dN is the secant of the upper-level crack
/// length between consecutive cycles; ΔK uses the current length and the
/// cycle's extreme forces.
pub fn paris_series(log: &RunLog, geom: &SenbGeometry) -> Result<Vec<ParisPoint>> {
    let up = upper_level_records(log);
    let mut out = Vec::new();
    for w in up.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let depth = geom.notch_depth + cur.crack_length;
        if depth >= geom.height {
            break;
        }
        let fmin = lower_force(log, cur.cycle).max(0.0);
        let dk = compute_sif_senb(cur.force, geom, depth)? - compute_sif_senb(fmin, geom, depth)?;
        out.push(ParisPoint {
            cycle: cur.cycle,
            a: cur.crack_length,
            depth_ratio: depth / geom.height,
            delta_k: dk,
            da_dn: (cur.crack_length - prev.crack_length) / (cur.cycle - prev.cycle) as f64,
        });
    }
    Ok(out)
}

/// Stable-growth window on the depth ratio a/h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParisWindow {
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl Default for ParisWindow {
    fn default() -> Self {
        ParisWindow {
            min_ratio: 0.0,
            max_ratio: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParisFit {
    pub c: f64,
    pub m: f64,
    pub r2: f64,
    pub points: usize,
}

pub const PARIS_MIN_POINTS: usize = 5;

/// Least-squares line through (log10 ΔK, log10 da/dN) of the points inside
/// the window with positive growth.
pub fn fit_paris(series: &[ParisPoint], window: &ParisWindow) -> Result<ParisFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|p| p.da_dn > 0.0 && p.delta_k > 0.0)
        .filter(|p| p.depth_ratio >= window.min_ratio && p.depth_ratio <= window.max_ratio)
        .map(|p| (p.delta_k.log10(), p.da_dn.log10()))
        .collect();
    if pts.len() < PARIS_MIN_POINTS {
        return Err(Error::Postproc(format!(
            "Paris fit needs at least {PARIS_MIN_POINTS} growing cycles in the window, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Postproc("Paris fit needs distinct ΔK values".into()));
    }
    let m = sxy / sxx;
    let intercept = my - m * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - m * p.0).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(ParisFit {
        c: 10f64.powf(intercept),
        m,
        r2,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnRow {
    pub smax: f64,
    pub smin: f64,
    pub kf: f64,
    /// Cycles to failure; `None` for run-outs and failed runs.
    pub cycles: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SnTable {
    pub rows: Vec<SnRow>,
}

impl SnTable {
    /// Groups with equal (Smin, kf) whose N^f increases with Smax; run-outs
    /// count as infinite life.
    pub fn violations(&self) -> Vec<(SnRow, SnRow)> {
        let life = |r: &SnRow| r.cycles.map_or(f64::INFINITY, |n| n as f64);
        let mut out = Vec::new();
        for a in &self.rows {
            for b in &self.rows {
                if a.smin == b.smin && a.kf == b.kf && a.smax < b.smax && life(a) < life(b) {
                    out.push((*a, *b));
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["smax", "smin", "kf", "cycles_to_failure"])
            .map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.smax.to_string(),
                r.smin.to_string(),
                r.kf.to_string(),
                r.cycles.map_or(String::new(), |n| n.to_string()),
            ])
            .map_err(csv_err)?;
        }
        finish_csv(w)
    }
}

pub fn paris_csv(series: &[ParisPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in series {
        w.serialize(p).map_err(csv_err)?;
    }
    if series.is_empty() {
        w.write_record(["cycle", "a", "depth_ratio", "delta_k", "da_dn"])
            .map_err(csv_err)?;
    }
    finish_csv(w)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Postproc(format!("CSV encoding failed: {e}"))
}

pub(crate) fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Postproc(format!("CSV encoding failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Postproc(e.to_string()))
}

/// Fatigue creep curve: (cycle, CMOD) at the upper load level.
pub fn creep_curve(log: &RunLog) -> Vec<(usize, f64)> {
    upper_level_records(log)
        .iter()
        .map(|r| (r.cycle, r.cmod))
        .collect()
}

/// Mean growth rate of a creep curve between two life fractions of `life`.
/// Returns `None` when fewer than two points fall inside.
pub fn creep_rate(curve: &[(usize, f64)], life: usize, from: f64, to: f64) -> Option<f64> {
    let lo = from * life as f64;
    let hi = to * life as f64;
    let pts: Vec<&(usize, f64)> = curve
        .iter()
        .filter(|(n, _)| *n as f64 >= lo && *n as f64 <= hi)
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    Some((b.1 - a.1) / (b.0 - a.0) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom() -> SenbGeometry {
        SenbGeometry {
            span: 800.0,
            thickness: 50.0,
            height: 200.0,
            notch_depth: 200.0 / 6.0,
        }
    }

    #[test]
    fn geometry_function_at_half_depth() {
        // 3·√0.5·(1.99 − 0.25·(2.15 − 1.965 + 0.675)) / (2·2·0.5^1.5)
        let num = 3.0 * 0.5f64.sqrt() * (1.99 - 0.25 * 0.86);
        let den = 4.0 * 0.125f64.sqrt();
        assert!((senb_geometry_function(0.5) - num / den).abs() < 1e-14);
        assert!((senb_geometry_function(0.5) - 2.663).abs() < 1e-3);
    }

    #[test]
    fn sif_is_linear_in_force_and_rejects_through_cracks() {
        let g = geom();
        assert_eq!(compute_sif_senb(0.0, &g, 60.0).unwrap(), 0.0);
        let k1 = compute_sif_senb(1000.0, &g, 60.0).unwrap();
        let k2 = compute_sif_senb(2000.0, &g, 60.0).unwrap();
        assert!((k2 - 2.0 * k1).abs() <= 1e-12 * k2);
        assert!(compute_sif_senb(1000.0, &g, 200.0).is_err());
        assert!(compute_sif_senb(1000.0, &g, 0.0).is_err());
    }

    fn planted(c: f64, m: f64, n: usize) -> Vec<ParisPoint> {
        (0..n)
            .map(|i| {
                let dk = 10.0 + 7.0 * i as f64;
                ParisPoint {
                    cycle: i + 1,
                    a: i as f64,
                    depth_ratio: 0.3,
                    delta_k: dk,
                    da_dn: c * dk.powf(m),
                }
            })
            .collect()
    }

    #[test]
    fn planted_power_law_is_recovered() {
        let fit = fit_paris(&planted(1e-8, 3.0, 8), &ParisWindow::default()).unwrap();
        assert!((fit.m - 3.0).abs() < 1e-10);
        assert!((fit.c / 1e-8 - 1.0).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_growth_cycles_are_excluded() {
        let mut s = planted(1e-8, 3.0, 6);
        s[2].da_dn = 0.0;
        let fit = fit_paris(&s, &ParisWindow::default()).unwrap();
        assert_eq!(fit.points, 5);
        assert!((fit.m - 3.0).abs() < 1e-10);
        s[3].da_dn = 0.0;
        assert!(fit_paris(&s, &ParisWindow::default()).is_err());
    }

    fn rec(cycle: usize, force: f64, a: f64, cmod: f64) -> StepRecord {
        StepRecord {
            increment: 0,
            cycle,
            t: 0.0,
            force,
            control: 0.0,
            ctod: 0.0,
            cmod,
            cmsd: 0.0,
            crack_length: a,
            max_phi: 0.0,
            dissipated_energy: 0.0,
        }
    }

    fn log(records: Vec<StepRecord>) -> RunLog {
        RunLog {
            records,
            failure: None,
            mesh_hash: String::new(),
            quadrature: String::new(),
            failure_criterion: String::new(),
        }
    }

    #[test]
    fn secant_growth_at_the_upper_level() {
        let l = log(vec![
            rec(0, 50.0, 0.0, 0.01),
            rec(1, 100.0, 1.0, 0.02),
            rec(1, 10.0, 1.0, 0.01),
            rec(2, 100.0, 1.5, 0.03),
            rec(2, 10.0, 1.5, 0.02),
            rec(3, 100.0, 3.5, 0.05),
        ]);
        let up = upper_level_records(&l);
        assert_eq!(up.iter().map(|r| r.cycle).collect::<Vec<_>>(), vec![1, 2, 3]);
        let s = paris_series(&l, &geom()).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[0].da_dn - 0.5).abs() < 1e-15);
        assert!((s[1].da_dn - 2.0).abs() < 1e-15);
        let depth = geom().notch_depth + 1.5;
        let expect = compute_sif_senb(90.0, &geom(), depth).unwrap();
        assert!((s[0].delta_k - expect).abs() < 1e-12);
        assert_eq!(creep_curve(&l), vec![(1, 0.02), (2, 0.03), (3, 0.05)]);
    }

    #[test]
    fn creep_rate_over_life_fractions() {
        let curve: Vec<(usize, f64)> = (1..=100).map(|n| (n, n as f64 * 0.1)).collect();
        assert!((creep_rate(&curve, 100, 0.4, 0.6).unwrap() - 0.1).abs() < 1e-12);
        assert!(creep_rate(&curve, 100, 0.995, 1.0).is_none());
    }

    #[test]
    fn sn_monotonicity_check() {
        let row = |smax, n| SnRow {
            smax,
            smin: 0.05,
            kf: 0.01,
            cycles: n,
        };
        let ok = SnTable {
            rows: vec![row(0.85, Some(16)), row(0.7, Some(270)), row(0.6, None)],
        };
        assert!(ok.violations().is_empty());
        let bad = SnTable {
            rows: vec![row(0.85, Some(300)), row(0.7, Some(270))],
        };
        assert_eq!(bad.violations().len(), 1);
        let text = ok.to_csv().unwrap();
        assert_eq!(text.lines().next().unwrap(), "smax,smin,kf,cycles_to_failure");
        assert_eq!(text.lines().nth(3).unwrap(), "0.6,0.05,0.01,");
    }
}
