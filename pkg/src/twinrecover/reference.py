"""Published reference numbers the reproduction reports compare against."""

from __future__ import annotations

# N, L1_rec, L1_bias, L2_rec, L2_bias, JS_rec, JS_bias, Wass_rec, Wass_bias
CONTINUOUS_TABLE = (
    (100, 0.0826, 0.1590, 0.0295, 0.0573, 0.0019, 0.0056, 0.1302, 0.3446),
    (200, 0.0707, 0.1608, 0.0252, 0.0590, 0.0012, 0.0051, 0.1065, 0.3364),
    (500, 0.0479, 0.1542, 0.0167, 0.0562, 0.0006, 0.0047, 0.0715, 0.3315),
    (1000, 0.0388, 0.1578, 0.0139, 0.0576, 0.0004, 0.0047, 0.0593, 0.3316),
    (2000, 0.0341, 0.1596, 0.0129, 0.0582, 0.0003, 0.0048, 0.0510, 0.3337),
    (4000, 0.0309, 0.1628, 0.0115, 0.0591, 0.0003, 0.0050, 0.0428, 0.3384),
)

ADVANCED_TABLE = (
    (100, 0.0880, 0.3346, 0.0306, 0.1191, 0.0019, 0.0224, 0.1961, 0.7357),
    (200, 0.0771, 0.3428, 0.0265, 0.1221, 0.0015, 0.0233, 0.1735, 0.7458),
    (500, 0.0605, 0.3439, 0.0207, 0.1234, 0.0010, 0.0237, 0.1383, 0.7400),
    (1000, 0.0499, 0.3442, 0.0174, 0.1238, 0.0007, 0.0238, 0.1099, 0.7345),
    (2000, 0.0398, 0.3399, 0.0141, 0.1229, 0.0005, 0.0232, 0.0873, 0.7237),
    (4000, 0.0318, 0.3404, 0.0116, 0.1237, 0.0004, 0.0234, 0.0703, 0.7224),
)

# acceptance bands at n = 4000: (L1_rec lo, hi), (L1_bias lo, hi)
BANDS = {
    "continuous": ((0.015, 0.06), (0.10, 0.25)),
    "advanced": ((0.015, 0.07), (0.20, 0.50)),
}

# binary trial, keyed by treatment: values rounded to three decimals
DISCRETE = {
    "truth": {0: 0.60, 1: 0.8125},
    "recovered": {0: 0.613, 1: 0.816},
    "biased": {0: 0.529, 1: 0.768},
    # relative errors in percent, one decimal
    "re_bias": {0: -11.8, 1: -5.5},
    "re_rec": {0: 2.2, 1: 0.4},
}
