"""Published reference values for the Table-1 instance (b1 varies per case).

Trajectory values are listed at t = 0, 1, ..., 12.  ``None`` marks a cell
that is excluded from comparison: the Table-3 production value at t = 4
repeats the Table-2 entry and breaks the smooth progression of its row.
"""

TIMES = tuple(range(13))

DEMAND = (7.00, 13.00, 23.00, 37.00, 55.00, 77.00, 103.00, 133.00, 167.00,
          205.00, 247.00, 293.00, 343.00)

CASES = {
    2: {
        "b1": 0.02,
        "solver": "analytic-1a",
        "u": (94.98, 100.05, 105.43, 111.16, 117.17, 123.44, 130.09, 137.08,
              144.41, 152.10, 160.14, 168.54, 177.32),
        "x": (0.0, 86.95, 169.44, 243.86, 306.76, 354.70, 384.35, 392.44,
              375.77, 331.22, 255.72, 146.28, 0.0),
        "profit": 180913.30,
    },
    3: {
        "b1": 0.0,
        "solver": "analytic-1b",
        "u": (104.20, 107.30, 110.60, 114.10, None, 121.70, 125.80, 130.10,
              134.60, 139.30, 144.20, 149.30, 154.60),
        "x": (0.0, 96.06, 187.33, 270.00, 340.26, 394.33, 428.66, 438.66,
              421.33, 372.60, 288.66, 165.732, 0.0),
        "profit": 247007.30,
    },
    4: {
        "b1": 0.11,
        "solver": "analytic-1a",
        "u": (48.96, 58.04, 68.38, 80.15, 93.48, 108.58, 125.65, 144.92,
              166.63, 191.09, 218.56, 249.45, 284.18),
        "x": (0.0, 41.44, 80.15, 113.90, 140.83, 159.44, 168.59, 167.44,
              155.48, 132.49, 98.59, 54.18, 0.0),
        "profit": 153447.7,
    },
}

#: Profit versus breakability coefficient.
SWEEP_B1 = (0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08)
SWEEP_PROFIT = (185131.50, 180913.30, 176871.90, 173036.20, 169431.00,
                166076.60, 162988.70, 160178.0)

#: Absolute tolerance for trajectory cells, relative tolerance for profits.
TRAJECTORY_ATOL = 0.5
PROFIT_RTOL = 0.01
