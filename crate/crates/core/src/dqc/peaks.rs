use super::{pathways, FrequencyAxis, SpectrumGrid};
use crate::eigen::EigenSolution;
use crate::error::{Error, Result};

/// Local maximum of |S| in normalized units.
#[derive(Clone, Debug, PartialEq)]
pub struct Peak {
    pub omega2: f64,
    pub omega3: f64,
    pub magnitude: f64,
    pub assignment: Option<String>,
}

/// Vertex offset of the parabola through (−1, a), (0, b), (1, c), clamped to half a step.
fn vertex(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den < 0.0 {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("peak threshold must lie in (0, 1), got {threshold}")));
    }
    Ok(())
}

/// Strict 8-neighbour maxima of |S| above `threshold`·max, refined by quadratic fits along each axis.
pub fn find_peaks(s: &SpectrumGrid, threshold: f64) -> Result<Vec<Peak>> {
    check_threshold(threshold)?;
    let mag = s.abs();
    let max = mag.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Ok(Vec::new());
    }
    let (n2, n3) = (s.omega2.n, s.omega3.n);
    let at = |i: usize, j: usize| mag[i * n3 + j];
    let mut peaks = Vec::new();
    for i in 1..n2.saturating_sub(1) {
        for j in 1..n3.saturating_sub(1) {
            let v = at(i, j);
            if v < threshold * max {
                continue;
            }
            let mut is_max = true;
            'nb: for di in [-1isize, 0, 1] {
                for dj in [-1isize, 0, 1] {
                    if (di, dj) != (0, 0) && at((i as isize + di) as usize, (j as isize + dj) as usize) >= v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if !is_max {
                continue;
            }
            let d2 = vertex(at(i - 1, j), v, at(i + 1, j));
            let d3 = vertex(at(i, j - 1), v, at(i, j + 1));
            peaks.push(Peak {
                omega2: s.omega2.value(i) + d2 * s.omega2.step,
                omega3: s.omega3.value(j) + d3 * s.omega3.step,
                magnitude: v / max,
                assignment: None,
            });
        }
    }
    peaks.sort_by(|a, b| b.magnitude.total_cmp(&a.magnitude));
    Ok(peaks)
}

/// Separation below which two Ω2 maxima count as one resonance, in units of γ.
pub const RESONANCE_MERGE_GAMMAS: f64 = 3.0;

/// Ω2 resonances: maxima of the profile max_Ω3 |S| above `threshold`·max, as (Ω2, normalized magnitude).
/// Maxima closer than [`RESONANCE_MERGE_GAMMAS`]·γ are merged into the stronger one.
pub fn omega2_resonances(s: &SpectrumGrid, threshold: f64) -> Result<Vec<(f64, f64)>> {
    check_threshold(threshold)?;
    let n3 = s.omega3.n;
    let profile: Vec<f64> = s
        .values
        .chunks(n3)
        .map(|row| row.iter().fold(0.0f64, |m, z| m.max(z.norm())))
        .collect();
    let max = profile.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Ok(Vec::new());
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (w, v) in profile_maxima(&profile, &s.omega2, threshold * max) {
        match merged.last_mut() {
            Some(last) if w - last.0 < RESONANCE_MERGE_GAMMAS * s.gamma_cm => {
                if v > last.1 {
                    *last = (w, v);
                }
            }
            _ => merged.push((w, v)),
        }
    }
    Ok(merged.into_iter().map(|(w, v)| (w, v / max)).collect())
}

fn profile_maxima(p: &[f64], axis: &FrequencyAxis, floor: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 1..p.len().saturating_sub(1) {
        if p[i] >= floor && p[i] > p[i - 1] && p[i] > p[i + 1] {
            out.push((axis.value(i) + vertex(p[i - 1], p[i], p[i + 1]) * axis.step, p[i]));
        }
    }
    out
}

/// State names by manifold: `g`, then `e1`, `e2`, … and `f1`, `f2`, … in energy order; `x<i>` otherwise.
pub fn manifold_labels(eig: &EigenSolution) -> Vec<String> {
    let p = &eig.partition;
    let mut labels: Vec<String> = (0..eig.len()).map(|i| format!("x{i}")).collect();
    labels[p.g] = "g".into();
    for (prefix, set) in [("e", &p.e_set), ("f", &p.f_set)] {
        let mut idx = set.clone();
        idx.sort_by(|&a, &b| eig.energies[a].total_cmp(&eig.energies[b]).then(a.cmp(&b)));
        for (k, i) in idx.into_iter().enumerate() {
            labels[i] = format!("{prefix}{}", k + 1);
        }
    }
    labels
}

/// Label each peak with the nearest pathway resonance (Ω_fg, Ω_e′g or Ω_fe′).
/// `labels` names eigenstates by index; indices are used when absent.
pub fn assign_peaks(peaks: &mut [Peak], eig: &EigenSolution, labels: Option<&[String]>) -> Result<()> {
    let paths = pathways(eig)?;
    let scale = paths.iter().fold(0.0f64, |m, p| m.max(p.amplitude.abs()));
    let name = |i: usize| match labels.and_then(|l| l.get(i)) {
        Some(s) => s.clone(),
        None => i.to_string(),
    };
    for peak in peaks.iter_mut() {
        let mut best: Option<(f64, String)> = None;
        for p in paths.iter().filter(|p| p.amplitude.abs() > 1e-9 * scale) {
            for (w3, kind) in [(p.omega_epg, "e'g"), (p.omega_fep, "fe'")] {
                let d = (peak.omega2 - p.omega_fg).hypot(peak.omega3 - w3);
                if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                    best = Some((d, format!("f={} e'={} {kind}", name(p.f), name(p.e_prime))));
                }
            }
        }
        peak.assignment = best.map(|(_, s)| s);
    }
    Ok(())
}
