"""Nemenyi critical values q_alpha(k): studentized range quantile at infinite
degrees of freedom divided by sqrt(2), for k = 2..30 groups.

Generated offline with scipy.stats.studentized_range; checked in the test
suite against an independent quadrature of the range distribution.
"""

Q_TABLE = {
    0.05: {
        2: 1.9599639845,
        3: 2.3437005864,
        4: 2.5690317725,
        5: 2.7277743709,
        6: 2.8497054196,
        7: 2.9483200175,
        8: 3.0308784496,
        9: 3.1017303413,
        10: 3.1636835771,
        11: 3.2186536073,
        12: 3.2680039245,
        13: 3.3127385934,
        14: 3.3536177519,
        15: 3.3912302838,
        16: 3.4260413794,
        17: 3.4584247073,
        18: 3.4886847994,
        19: 3.5170730087,
        20: 3.5437991315,
        21: 3.5690400300,
        22: 3.5929461370,
        23: 3.6156464372,
        24: 3.6372523317,
        25: 3.6578606731,
        26: 3.6775561759,
        27: 3.6964133492,
        28: 3.7144980614,
        29: 3.7318688169,
        30: 3.7485778068,
    },
    0.01: {
        2: 2.5758293035,
        3: 2.9134943378,
        4: 3.1132503453,
        5: 3.2546859715,
        6: 3.3637403685,
        7: 3.4522128234,
        8: 3.5264706985,
        9: 3.5903386986,
        10: 3.6462915484,
        11: 3.6960208999,
        12: 3.7407331678,
        13: 3.7813182411,
        14: 3.8184508563,
        15: 3.8526544765,
        16: 3.8843431545,
        17: 3.9138498871,
        18: 3.9414463675,
        19: 3.9673570833,
        20: 3.9917695942,
        21: 4.0148421653,
        22: 4.0367095313,
        23: 4.0574873140,
        24: 4.0772754533,
        25: 4.0961609035,
        26: 4.1142197763,
        27: 4.1315190608,
        28: 4.1481180164,
        29: 4.1640693110,
        30: 4.1794199576,
    },
}
