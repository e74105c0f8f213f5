//! Compiled-in filter tables.
//!
//! All tables are in convolution orientation: `analysis_lowpass` is applied
//! as `y[m] = sum_k h[k] x[m - k]`.
//!
//! Provenance:
//! * Daubechies 8 and Symlet 8 come from a 50-digit spectral factorisation of
//!   the degree-7 Daubechies polynomial (minimum-phase root set for
//!   Daubechies, least-asymmetric root set for Symlet) and were checked
//!   against the quadrature conditions `sum h = sqrt 2`, `sum h^2 = 1`,
//!   `sum_n h[n] h[n + 2k] = 0` for k = 1..7, and eight vanishing moments of
//!   the derived highpass.
//! * Biorthogonal 3.7 is exact: the synthesis lowpass is
//!   `sqrt 2 / 8 * [1, 3, 3, 1]` and the analysis lowpass is
//!   `sqrt 2 / 16384 * [35, -105, -195, 865, 363, -3489, -307, 11025, ...]`
//!   (symmetric), the unique symmetric 16-tap solution of the
//!   biorthogonality equations with seven vanishing moments at pi.

use std::f64::consts::SQRT_2;

/// Daubechies 8 scaling filter, minimum-phase order (synthesis orientation).
pub(super) const DB8_SCALING: [f64; 16] = [
    0.054_415_842_243_104_01,
    0.312_871_590_914_299_97,
    0.675_630_736_297_289_8,
    0.585_354_683_654_206_7,
    -0.015_829_105_256_349_306,
    -0.284_015_542_961_546_93,
    0.000_472_484_573_913_282_77,
    0.128_747_426_620_478_46,
    -0.017_369_301_001_807_546,
    -0.044_088_253_930_794_75,
    0.013_981_027_917_398_282,
    0.008_746_094_047_405_777,
    -0.004_870_352_993_451_574,
    -0.000_391_740_373_376_947,
    0.000_675_449_406_450_569_4,
    -0.000_117_476_784_124_769_53,
];

/// Symlet 8 analysis lowpass (convolution orientation).
pub(super) const SYM8_ANALYSIS: [f64; 16] = [
    -0.003_382_415_951_005_002_6,
    -0.000_542_132_331_800_010_7,
    0.031_695_087_811_525_99,
    0.007_607_487_324_976_608,
    -0.143_294_238_351_272_66,
    -0.061_273_359_067_811_08,
    0.481_359_651_259_053_4,
    0.777_185_751_699_628,
    0.364_441_894_836_178_94,
    -0.051_945_838_107_881_8,
    -0.027_219_029_917_103_486,
    0.049_137_179_673_730_29,
    0.003_808_752_013_894_489_5,
    -0.014_952_258_337_062_2,
    -0.000_302_920_514_724_133_1,
    0.001_889_950_332_767_689_2,
];

const BIOR37_ANALYSIS_INT: [f64; 16] = [
    35.0, -105.0, -195.0, 865.0, 363.0, -3489.0, -307.0, 11025.0, 11025.0, -307.0, -3489.0,
    363.0, 865.0, -195.0, -105.0, 35.0,
];

pub(super) fn bior37_analysis() -> Vec<f64> {
    BIOR37_ANALYSIS_INT
        .iter()
        .map(|v| v * SQRT_2 / 16384.0)
        .collect()
}

pub(super) fn bior37_synthesis() -> Vec<f64> {
    [1.0, 3.0, 3.0, 1.0].iter().map(|v| v * SQRT_2 / 8.0).collect()
}
