//! Reference calibration: observation counts and frontier levels by height (1..=35).

/// Blocs per building height.
pub const BLOCS_BY_HEIGHT: [usize; 35] = [
    182, 629, 606, 874, 866, 826, 663, 572, 472, 341, 202, 155, 154, 121, 112, 93, 80, 76, 61, 62, 49,
    42, 25, 36, 21, 18, 12, 15, 14, 14, 7, 7, 5, 6, 11,
];

/// Buildings per building height.
pub const BUILDINGS_BY_HEIGHT: [usize; 35] = [
    319, 1661, 1394, 2968, 2562, 2315, 1639, 1340, 1137, 674, 331, 253, 207, 202, 185, 142, 145, 122,
    97, 90, 67, 69, 40, 45, 22, 26, 14, 21, 19, 16, 9, 7, 6, 8, 17,
];

/// Apartments per building height.
pub const APARTMENTS_BY_HEIGHT: [usize; 35] = [
    1453, 8068, 10310, 28266, 27642, 27336, 24725, 24086, 24384, 15682, 9214, 7517, 7303, 6369, 7434,
    6024, 6825, 4060, 3407, 3744, 3894, 2373, 1623, 1930, 1252, 902, 766, 925, 730, 659, 309, 205,
    267, 267, 603,
];

/// Constrained frontier price levels per square meter.
pub const FRONTIER_LEVELS: [f64; 35] = [
    7359.0, 6822.0, 6814.0, 6696.0, 6660.0, 6660.0, 6744.0, 6744.0, 6744.0, 6744.0, 7013.0, 7013.0,
    7013.0, 7013.0, 7013.0, 7013.0, 7013.0, 7013.0, 7013.0, 7013.0, 7013.0, 7013.0, 7013.0, 7013.0,
    8264.0, 8264.0, 8264.0, 8264.0, 9239.0, 9239.0, 9757.0, 9972.0, 10695.0, 14307.0, 17950.0,
];

/// Housing quantity per parcel.
pub const QUANTITIES: [f64; 35] = [
    1.05, 2.07, 3.09, 4.09, 5.03, 6.05, 7.07, 8.1, 9.14, 10.19, 11.18, 12.23, 13.28, 14.35, 15.42,
    16.5, 17.58, 18.68, 19.78, 20.89, 22.00, 23.13, 24.26, 25.4, 26.54, 27.69, 28.86, 30.03, 31.2,
    32.39, 33.58, 34.78, 35.99, 37.21, 38.41,
];

/// Quartic total-cost coefficients `β0..β4`.
pub const COST_QUARTIC: [f64; 5] = [900.0, 6472.0, 78.43, -4.1, 0.0823];
