//! Small numeric helpers: normal quantile, midranks, Pearson correlation.

use std::cmp::Ordering;

/// Standard normal quantile function, Wichura's AS 241 (PPND16).
///
/// Relative accuracy is about 1e-16 over `(0, 1)`. Returns `-inf` at 0,
/// `+inf` at 1 and NaN outside `[0, 1]`.
#[allow(clippy::inconsistent_digit_grouping, clippy::excessive_precision)]
pub fn normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((r * 2509.080_928_730_122_7 + 33430.575_583_588_128) * r
            + 67265.770_927_008_7)
            * r
            + 45921.953_931_549_87)
            * r
            + 13731.693_765_509_461)
            * r
            + 1971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_6;
        let den = ((((((r * 5226.495_278_852_546 + 28729.085_735_721_943) * r
            + 39307.895_800_092_71)
            * r
            + 21213.794_301_586_596)
            * r
            + 5394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_6;
        let den = ((((((r * 1.050_750_071_644_416_8e-9 + 5.475_938_084_995_345e-4) * r
            + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_08)
            * r
            + 0.689_767_334_985_1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((r * 2.010_334_399_292_288e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((r * 2.044_263_103_389_939_8e-15 + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 0.014_875_361_290_850_615)
            * r
            + 0.136_929_880_922_735_8)
            * r
            + 0.599_832_206_555_887_9)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// 1-based ranks with ties sharing the average of their positions.
/// Values must not be NaN; infinities compare equal to themselves.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Pearson correlation. `None` for fewer than two points, mismatched
/// lengths, or a constant series.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = mean(x)?;
    let my = mean(y)?;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Linear-interpolated percentile (`q` in `[0, 1]`) of unsorted data.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // Computed with mpmath at 60 digits by root-finding on the normal CDF,
    // evaluated at the exact binary value of each p.
    const REFERENCE: &[(f64, f64)] = &[
        (0.25, -0.674_489_750_196_081_743_2),
        (0.5, 0.0),
        (0.75, 0.674_489_750_196_081_743_2),
        (1e-6, -4.753_424_308_822_898_957_3),
        (1.0 - 1e-6, 4.753_424_308_817_087_765_7),
        (1e-20, -9.262_340_089_798_407_579_6),
        (1e-100, -21.273_453_560_965_324_294),
        (1e-300, -37.047_096_299_361_199_237),
        (0.01, -2.326_347_874_040_841_100_9),
        (0.02425, -1.972_961_051_311_884_850_3),
        (0.1, -1.281_551_565_544_600_467),
        (0.3, -0.524_400_512_708_040_784_04),
        (0.425, -0.189_118_426_272_792_490_11),
        (0.6, 0.253_347_103_135_799_798_8),
        (0.9, 1.281_551_565_544_600_467),
        (0.975, 1.959_963_984_540_054_235_5),
        (0.999, 3.090_232_306_167_813_541_5),
        (1e-10, -6.361_340_902_404_056_204_7),
        (1.0 / 3.0, -0.430_727_299_295_457_490_21),
        (2.0 / 3.0, 0.430_727_299_295_457_490_21),
    ];

    #[test]
    fn quantile_matches_high_precision_reference() {
        for &(p, want) in REFERENCE {
            let got = normal_quantile(p);
            let err = if want == 0.0 {
                got.abs()
            } else {
                ((got - want) / want).abs()
            };
            assert!(err <= 1e-9, "p={p:e}: got {got}, want {want}, rel err {err:e}");
        }
    }

    #[test]
    fn quantile_edges_and_symmetry() {
        assert_eq!(normal_quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(normal_quantile(1.0), f64::INFINITY);
        assert!(normal_quantile(-0.1).is_nan());
        assert!(normal_quantile(1.5).is_nan());
        assert!(normal_quantile(f64::NAN).is_nan());
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let a = normal_quantile(p);
            let b = normal_quantile(1.0 - p);
            assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0), "p={p}");
            if i > 1 {
                assert!(a > normal_quantile((i - 1) as f64 / 1000.0));
            }
        }
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[10.0, 30.0, 20.0]), vec![1.0, 3.0, 2.0]);
        assert_eq!(midranks(&[7.0; 4]), vec![2.5; 4]);
        assert_eq!(
            midranks(&[f64::INFINITY, 1.0, f64::INFINITY, 2.0, 2.0]),
            vec![4.5, 1.0, 4.5, 2.5, 2.5]
        );
        assert!(midranks(&[]).is_empty());
    }

    #[test]
    fn pearson_fixtures() {
        let r = pearson(&[0.0, 0.5, 1.0], &[0.4, 0.1, 0.4]).unwrap();
        assert_eq!(r, 0.0);
        let r = pearson(&[0.0, 1.0, 2.0, 3.0], &[0.9, 0.7, 0.5, 0.3]).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
        assert!(pearson(&[0.0, 1.0], &[0.2, 0.2]).is_none());
        assert!(pearson(&[0.0], &[0.2]).is_none());
    }

    #[test]
    fn percentiles() {
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 0.5), Some(2.0));
        assert_eq!(percentile(&[1.0, 2.0], 0.5), Some(1.5));
        assert_eq!(percentile(&[], 0.5), None);
    }
}
