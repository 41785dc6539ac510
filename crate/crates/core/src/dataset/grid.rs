//! Temperature and composition sampling lattices.

use crate::error::{Error, Result};

/// Sampling interval for correlation ATRs, in K.
pub const DEFAULT_TEMPERATURE_STEP: f64 = 50.0;

/// Composition lattice spacing (10% molar fraction).
pub const DEFAULT_GRID_STEP: f64 = 0.1;

/// `[t_min, t_min + step, ...]` up to the largest value ≤ `t_max`; `t_max`
/// itself appears only when the span is an exact multiple of `step`.
pub fn sample_temperatures(t_min: f64, t_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(t_min < t_max) {
        return Err(Error::invalid("temperature range", format!("[{t_min}, {t_max}]")));
    }
    if !(step > 0.0) {
        return Err(Error::invalid("temperature step", format!("{step}")));
    }
    // The epsilon absorbs float residue in the division so exact multiples
    // (e.g. (1000 - 800) / 50) are never dropped.
    let n = ((t_max - t_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| t_min + i as f64 * step).collect())
}

/// Full simplex lattice for `s` components at the given spacing: every
/// fraction vector with entries in `{0, step, ..., 1}` summing to 1,
/// boundary included, in ascending lexicographic order.
pub fn composition_grid(s: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    if !(2..=crate::mixture::MAX_COMPONENTS).contains(&s) {
        return Err(Error::invalid("grid size", format!("{s} components, want 2..=4")));
    }
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid("grid step", format!("{step}")));
    }
    let m_f = 1.0 / step;
    let m = m_f.round();
    if (m_f - m).abs() > 1e-9 {
        return Err(Error::invalid("grid step", format!("1/{step} is not an integer")));
    }
    let m = m as u32;

    let mut out = Vec::new();
    let mut counts = vec![0u32; s];
    fill(&mut out, &mut counts, 0, m, m);
    Ok(out)
}

/// Recursive lattice walk: slot `i` takes 0..=remaining, recursing in
/// ascending order so the output is lexicographic.
fn fill(out: &mut Vec<Vec<f64>>, counts: &mut [u32], i: usize, remaining: u32, m: u32) {
    if i == counts.len() - 1 {
        counts[i] = remaining;
        out.push(counts.iter().map(|&k| k as f64 / m as f64).collect());
        return;
    }
    for k in 0..=remaining {
        counts[i] = k;
        fill(out, counts, i + 1, remaining - k, m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temperature_sampling_counts() {
        assert_eq!(sample_temperatures(800.0, 1000.0, 50.0).unwrap(), vec![800.0, 850.0, 900.0, 950.0, 1000.0]);
        assert_eq!(sample_temperatures(700.0, 820.0, 50.0).unwrap(), vec![700.0, 750.0, 800.0]);
        assert_eq!(sample_temperatures(900.0, 905.0, 50.0).unwrap(), vec![900.0]);
        assert!(sample_temperatures(900.0, 900.0, 50.0).is_err());
        assert!(sample_temperatures(800.0, 1000.0, 0.0).is_err());
    }

    #[test]
    fn temperature_sampling_matches_closed_form() {
        // n = floor((t_max - t_min) / step) + 1 over a spread of spans.
        for (lo, hi, step) in [(600.0, 1450.0, 50.0), (813.0, 1201.0, 50.0), (1000.0, 1001.0, 50.0), (100.0, 400.0, 25.0)] {
            let temps = sample_temperatures(lo, hi, step).unwrap();
            let want = ((hi - lo) / step).floor() as usize + 1;
            assert_eq!(temps.len(), want, "span [{lo}, {hi}] step {step}");
            assert!(temps.iter().all(|&t| t <= hi + 1e-12));
            assert_eq!(temps[0], lo);
        }
    }

    #[test]
    fn grid_counts() {
        assert_eq!(composition_grid(2, 0.1).unwrap().len(), 11);
        assert_eq!(composition_grid(3, 0.1).unwrap().len(), 66);
        assert_eq!(composition_grid(3, 0.5).unwrap().len(), 6);
        assert_eq!(composition_grid(4, 0.5).unwrap().len(), 10);
    }

    #[test]
    fn grid_matches_brute_force_enumeration() {
        // Independent enumeration: scan the whole integer cube and keep
        // points whose counts sum to m.
        for (s, step) in [(2usize, 0.1f64), (3, 0.1), (3, 0.5), (4, 0.25)] {
            let m = (1.0 / step).round() as u32;
            let mut brute: Vec<Vec<u32>> = Vec::new();
            let total = (m as usize + 1).pow(s as u32);
            for code in 0..total {
                let mut c = code;
                let mut counts = Vec::with_capacity(s);
                for _ in 0..s {
                    counts.push((c % (m as usize + 1)) as u32);
                    c /= m as usize + 1;
                }
                counts.reverse();
                if counts.iter().sum::<u32>() == m {
                    brute.push(counts);
                }
            }
            brute.sort();

            let got = composition_grid(s, step).unwrap();
            assert_eq!(got.len(), brute.len(), "count for s={s} step={step}");
            for (g, b) in got.iter().zip(&brute) {
                let from_counts: Vec<f64> = b.iter().map(|&k| k as f64 / m as f64).collect();
                assert_eq!(g, &from_counts);
            }
        }
    }

    #[test]
    fn grid_is_lexicographic_and_on_simplex() {
        let grid = composition_grid(3, 0.1).unwrap();
        for w in grid.windows(2) {
            assert!(w[0] < w[1], "not ascending: {:?} vs {:?}", w[0], w[1]);
        }
        for x in &grid {
            let sum: f64 = x.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(x.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        // Boundary (pure corners) included.
        assert!(grid.contains(&vec![0.0, 0.0, 1.0]));
        assert!(grid.contains(&vec![1.0, 0.0, 0.0]));
    }

    #[test]
    fn non_integral_reciprocal_step_rejected() {
        assert!(composition_grid(3, 0.3).is_err());
    }
}
