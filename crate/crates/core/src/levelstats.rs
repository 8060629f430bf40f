//! Energy densities, adjacent-gap ratios and random-matrix reference values.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-12;

/// Normalized energy densities `ε_n = (E_max − E_n)/(E_max − E_0)`, in the
/// order of the input energies. The lowest level has `ε = 1`, the highest `0`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyDensitySpectrum {
    pub densities: Vec<f64>,
}

pub fn energy_density(values: &[f64]) -> Result<EnergyDensitySpectrum> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(
            "energy density needs at least two levels".into(),
        ));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    if width <= 0.0 || !width.is_finite() {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(EnergyDensitySpectrum {
        densities: values.iter().map(|&e| (hi - e) / width).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRatioStats {
    pub mean_r: f64,
    /// Number of `(δ_n, δ_{n+1})` pairs that entered the mean.
    pub count: usize,
    pub dropped_degenerate: usize,
}

/// Mean of `min(δ_n, δ_{n+1}) / max(δ_n, δ_{n+1})` over an ascending spectrum.
///
/// Pairs whose larger gap is below `degeneracy_tol` times the spectral range
/// carry no ratio information and are dropped.
pub fn gap_ratios(values: &[f64], degeneracy_tol: f64) -> Result<GapRatioStats> {
    if values.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "gap ratios need at least three levels, got {}",
            values.len()
        )));
    }
    if values.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter(
            "energies must be finite and sorted ascending".into(),
        ));
    }
    let range = values[values.len() - 1] - values[0];
    let floor = degeneracy_tol * range;
    let mut sum = 0.0;
    let mut count = 0;
    let mut dropped = 0;
    for w in values.windows(3) {
        let (d0, d1) = (w[1] - w[0], w[2] - w[1]);
        let (small, large) = if d0 < d1 { (d0, d1) } else { (d1, d0) };
        if large <= floor || large == 0.0 {
            dropped += 1;
            continue;
        }
        sum += small / large;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientData(format!(
            "all {dropped} gap pairs are degenerate"
        )));
    }
    Ok(GapRatioStats {
        mean_r: sum / count as f64,
        count,
        dropped_degenerate: dropped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    Goe,
    Poisson,
}

/// Surmise value of `⟨r⟩`: `4 − 2√3` for GOE, `2 ln 2 − 1` for Poisson.
pub fn reference_mean(ensemble: Ensemble) -> f64 {
    match ensemble {
        Ensemble::Goe => 4.0 - 2.0 * 3.0f64.sqrt(),
        Ensemble::Poisson => 2.0 * 2.0f64.ln() - 1.0,
    }
}

/// Spacing density: Wigner surmise for GOE, exponential for Poisson.
pub fn reference_density(ensemble: Ensemble, delta: f64, mean_spacing: f64) -> f64 {
    let x = delta / mean_spacing;
    match ensemble {
        Ensemble::Goe => PI / 2.0 * x * (-PI * x * x / 4.0).exp() / mean_spacing,
        Ensemble::Poisson => (-x).exp() / mean_spacing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn linear_energy_density() {
        let eps = energy_density(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(eps.densities, vec![1.0, 0.5, 0.0]);
        assert!(matches!(energy_density(&[3.0, 3.0]), Err(Error::DegenerateSpectrum)));
        assert!(energy_density(&[1.0]).is_err());
    }

    #[test]
    fn simple_ratios() {
        assert_eq!(gap_ratios(&[0.0, 1.0, 2.0], 1e-12).unwrap().mean_r, 1.0);
        assert_eq!(gap_ratios(&[0.0, 1.0, 3.0], 1e-12).unwrap().mean_r, 0.5);
        assert_eq!(gap_ratios(&[0.0, 2.0, 3.0], 1e-12).unwrap().mean_r, 0.5);
    }

    #[test]
    fn degenerate_pairs_dropped() {
        let s = gap_ratios(&[0.0, 0.0, 0.0, 1.0, 2.0], 1e-12).unwrap();
        assert_eq!(s.dropped_degenerate, 1);
        assert_eq!(s.count, 2);
        assert_abs_diff_eq!(s.mean_r, 0.5);
        assert!(matches!(
            gap_ratios(&[1.0, 1.0, 1.0], 1e-12),
            Err(Error::InsufficientData(_))
        ));
        assert!(gap_ratios(&[0.0, 1.0], 1e-12).is_err());
        assert!(gap_ratios(&[0.0, 2.0, 1.0], 1e-12).is_err());
    }

    #[test]
    fn poisson_levels() {
        let mut s = Stream::new(2024);
        let mut e = 0.0;
        let levels: Vec<f64> = (0..100_000)
            .map(|_| {
                e += -(1.0 - s.unit()).ln();
                e
            })
            .collect();
        let stats = gap_ratios(&levels, DEFAULT_DEGENERACY_TOL).unwrap();
        assert!((stats.mean_r - 0.3863).abs() < 0.005, "{}", stats.mean_r);
    }

    #[test]
    fn reference_constants() {
        assert_abs_diff_eq!(reference_mean(Ensemble::Goe), 0.535898, epsilon = 1e-6);
        assert_abs_diff_eq!(reference_mean(Ensemble::Poisson), 0.386294, epsilon = 1e-6);
        assert!(reference_mean(Ensemble::Goe) > reference_mean(Ensemble::Poisson));
    }

    #[test]
    fn reference_density_values() {
        assert_eq!(reference_density(Ensemble::Poisson, 0.0, 1.0), 1.0);
        assert_eq!(reference_density(Ensemble::Goe, 0.0, 2.0), 0.0);
    }

    // Composite Simpson on [0, L] with L far into the tail.
    fn integrate(f: impl Fn(f64) -> f64, upper: f64, steps: usize) -> f64 {
        let h = upper / steps as f64;
        let mut acc = f(0.0) + f(upper);
        for i in 1..steps {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn densities_are_normalized() {
        for ensemble in [Ensemble::Goe, Ensemble::Poisson] {
            for mean in [0.5, 1.0, 3.0] {
                let total = integrate(|x| reference_density(ensemble, x, mean), 60.0 * mean, 20_000);
                assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
            }
        }
    }

    proptest! {
        #[test]
        fn affine_invariance(seed in any::<u64>(), scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
            let mut s = Stream::new(seed);
            let mut e = 0.0;
            let levels: Vec<f64> = (0..200).map(|_| { e += 0.01 + s.unit(); e }).collect();
            let moved: Vec<f64> = levels.iter().map(|x| scale * x + shift).collect();
            let a = gap_ratios(&levels, DEFAULT_DEGENERACY_TOL).unwrap();
            let b = gap_ratios(&moved, DEFAULT_DEGENERACY_TOL).unwrap();
            prop_assert!((a.mean_r - b.mean_r).abs() < 1e-9);
            let ea = energy_density(&levels).unwrap();
            let eb = energy_density(&moved).unwrap();
            for (x, y) in ea.densities.iter().zip(&eb.densities) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn ratios_in_unit_interval(seed in any::<u64>()) {
            let mut s = Stream::new(seed);
            let mut levels: Vec<f64> = (0..50).map(|_| s.symmetric() * 10.0).collect();
            levels.sort_by(f64::total_cmp);
            let copy = levels.clone();
            let stats = gap_ratios(&levels, DEFAULT_DEGENERACY_TOL).unwrap();
            prop_assert!((0.0..=1.0).contains(&stats.mean_r));
            prop_assert_eq!(levels, copy);
        }
    }
}
