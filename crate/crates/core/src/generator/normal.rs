//! Standard normal CDF and quantile function.
//!
//! `std_normal_cdf` goes through the fdlibm rational `erfc` (via `libm`),
//! `std_normal_quantile` is Wichura's AS 241 (PPND16). Both are accurate to
//! well under 1e-7 absolute over the whole real line / unit interval.

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Φ(x).
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

const A: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083_0e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061_0e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561_0e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34e0,
    4.630_337_846_156_545_295_90e0,
    5.769_497_221_460_691_405_50e0,
    3.647_848_324_763_204_605_04e0,
    1.270_458_252_452_368_382_58e0,
    2.417_807_251_774_506_117_70e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_40e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87e0,
    1.676_384_830_183_803_849_40e0,
    6.897_673_349_851_000_045_50e-1,
    1.481_039_764_274_800_745_90e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946_00e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_20e0,
    5.463_784_911_164_114_369_90e0,
    1.784_826_539_917_291_335_80e0,
    2.965_605_718_285_048_912_30e-1,
    2.653_218_952_657_612_309_30e-2,
    1.242_660_947_388_078_438_60e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_90e-1,
    1.369_298_809_227_358_053_10e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591_00e-4,
    1.846_318_317_510_054_681_80e-5,
    1.421_511_758_316_445_888_70e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn horner(coeffs: &[f64; 8], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
}

/// Φ⁻¹(p). Returns ∓∞ at p = 0 / 1 and NaN outside `[0, 1]`.
pub fn std_normal_quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) {
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
        return q * horner(&A, r) / horner(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        let r = r - 1.6;
        horner(&C, r) / horner(&D, r)
    } else {
        let r = r - 5.0;
        horner(&E, r) / horner(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // 40-digit reference values.
    const CDF_TABLE: &[(f64, f64)] = &[
        (-8.0, 6.2209605742717841235e-16),
        (-6.0, 9.865876450376981407e-10),
        (-5.0, 2.8665157187919391167e-7),
        (-3.5, 0.00023262907903552503635),
        (-2.0, 0.0227501319481792072),
        (-1.2345, 0.10850832336267017364),
        (-0.5, 0.30853753872598689636),
        (-0.001, 0.49960105778608893741),
        (0.0, 0.5),
        (0.001, 0.50039894221391106259),
        (0.25, 0.59870632568292372424),
        (0.75, 0.77337264762313180067),
        (1.0, 0.84134474606854294859),
        (1.96, 0.97500210485177956379),
        (2.5, 0.99379033467422386483),
        (4.0, 0.99996832875816688008),
        (6.5, 0.99999999995983999416),
    ];

    const QUANTILE_TABLE: &[(f64, f64)] = &[
        (1e-12, -7.0344838253011319326),
        (1e-09, -5.9978070150076868614),
        (1e-06, -4.7534243088228989573),
        (0.0001, -3.7190164854556805523),
        (0.001, -3.0902323061678135354),
        (0.01, -2.3263478740408410931),
        (0.02425, -1.9729610513118848376),
        (0.05, -1.644853626951472688),
        (0.1, -1.2815515655446004353),
        (0.3, -0.52440051270804081597),
        (0.5, 0.0),
        (0.6, 0.25334710313579974132),
        (0.9, 1.2815515655446005935),
        (0.975, 1.9599639845400538556),
        (0.99, 2.3263478740408407676),
        (0.999, 3.0902323061678132778),
        (0.999999, 4.7534243088170877657),
        (0.999999999, 5.9978070196016374264),
    ];

    #[test]
    fn cdf_matches_reference_table() {
        for &(x, want) in CDF_TABLE {
            let got = std_normal_cdf(x);
            assert!((got - want).abs() <= 1e-7, "Φ({x}) = {got}, want {want}");
            assert!((got - want).abs() <= 1e-15, "Φ({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn quantile_matches_reference_table() {
        for &(p, want) in QUANTILE_TABLE {
            let got = std_normal_quantile(p);
            assert!((got - want).abs() <= 1e-7, "Φ⁻¹({p}) = {got}, want {want}");
        }
    }

    #[test]
    fn quantile_edges() {
        assert_eq!(std_normal_quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(std_normal_quantile(1.0), f64::INFINITY);
        assert!(std_normal_quantile(1.5).is_nan());
    }

    #[test]
    fn quantile_inverts_cdf() {
        for i in 1..200 {
            let x = -6.0 + i as f64 * 0.06;
            let back = std_normal_quantile(std_normal_cdf(x));
            assert!((back - x).abs() < 1e-7, "{x} -> {back}");
        }
    }
}
