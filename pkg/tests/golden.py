"""Golden values the build must reproduce.

One-round remaining-ball percentages and bin-load distributions for message
counts M in {1, 2, 3, 4, 5, 10, 20} at capacities L in {2, 3}, for both the
unranked and the ranked variant, frozen at the three decimals of the
reference tables this library is checked against; plus the multi-round
reference scenarios and the comparison-baseline targets.

A handful of reference cells are internally inconsistent: their digits fail
identities that any correct table must satisfy.

* Mass conservation ties the remaining-balls table to the load table:
  remaining% = 100 - sum_l l * load%[l].  For unranked (M, L=2) with
  M in {2, 3, 4} the load rows give 7.326 / 7.216 / 7.741 while the
  remaining-balls table prints 7.333 / 7.222 / 7.774.
* Each load column must sum to 100%.  The columns flagged in ``LOADS_*_OFF``
  sum to 102.490, 100.065, 100.337, 99.992, 101.001 and 102.001.
* The affected unranked cells have elementary closed forms: a request is
  unanswered with probability g = E[max(0, (N+1-L)/(N+1))] for
  N ~ Poisson(M), and remaining% = 100 * g**M, giving
  g(2, L=2) = 2/e^2, g(3, L=2) = 1/3 + 5/(3e^3), g(4, L=2) = 1/2 + 3/(2e^4).

``REMAINING_UNRANKED_CORRECTED`` freezes those closed forms.  The acceptance
tests assert the corrected value there, assert that the original digits do
contradict the identities (so the substitution is self-documenting), and
fall back to estimate-vs-simulation agreement for the flagged load cells,
whose exact values no printed identity pins down.
"""
import math

M_VALUES = (1, 2, 3, 4, 5, 10, 20)

# --- remaining balls after one round, percent, keyed (M, L) ----------------

REMAINING_UNRANKED = {
    (1, 2): 10.364, (2, 2): 7.333, (3, 2): 7.222, (4, 2): 7.774,
    (5, 2): 8.407, (10, 2): 10.745, (20, 2): 12.158,
    (1, 3): 2.334, (2, 3): 1.188, (3, 3): 1.125, (4, 3): 1.290,
    (5, 3): 1.546, (10, 3): 2.838, (20, 3): 3.876,
}

REMAINING_RANKED = {
    (1, 2): 10.364, (2, 2): 4.536, (3, 2): 3.210, (4, 2): 2.764,
    (5, 2): 2.590, (10, 2): 2.471, (20, 2): 2.470,
    (1, 3): 2.334, (2, 3): 0.454, (3, 3): 0.206, (4, 3): 0.139,
    (5, 3): 0.115, (10, 3): 0.097, (20, 3): 0.096,
}

#: Cells of REMAINING_UNRANKED whose digits contradict both the load table
#: (via mass conservation) and the closed forms; values here are the exact
#: closed forms, which agree with the load-table implication to 3 decimals.
REMAINING_UNRANKED_CORRECTED = {
    (2, 2): 100.0 * (2.0 * math.exp(-2.0)) ** 2,                    # 7.32626
    (3, 2): 100.0 * (1.0 / 3.0 + (5.0 / 3.0) * math.exp(-3.0)) ** 3,  # 7.21533
    (4, 2): 100.0 * (0.5 + 1.5 * math.exp(-4.0)) ** 4,              # 7.74110
}

#: Limit rows (M -> infinity) of the remaining-balls tables, percent.
REMAINING_LIMIT = {
    ("unranked", 2): 13.536, ("unranked", 3): 4.978,
    ("ranked", 2): 2.470, ("ranked", 3): 0.096,
}

# --- bin-load distribution after one round, percent per load, keyed (M, L) --

LOADS_UNRANKED = {
    (1, 2): (36.788, 36.788, 26.424),
    (2, 2): (31.303, 44.720, 23.977),
    (3, 2): (29.701, 47.814, 22.485),
    (4, 2): (29.384, 48.971, 21.644),
    (5, 2): (29.516, 49.375, 21.109),
    (10, 2): (30.662, 49.421, 19.917),
    (20, 2): (31.448, 49.261, 19.291),
    (1, 3): (36.788, 36.788, 18.394, 8.030),
    (2, 3): (33.822, 39.056, 21.609, 5.513),
    (3, 3): (32.439, 42.664, 22.776, 4.611),
    (4, 3): (31.057, 43.105, 21.910, 3.993),
    (5, 3): (30.791, 43.993, 21.846, 3.707),
    (10, 3): (30.913, 44.411, 21.277, 3.399),
    (20, 3): (31.386, 44.394, 20.931, 3.290),
}

LOADS_RANKED = {
    (1, 2): (36.788, 36.788, 26.424),
    (2, 2): (33.475, 37.585, 28.939),
    (3, 2): (32.584, 38.042, 29.374),
    (4, 2): (32.255, 38.253, 29.492),
    (5, 2): (32.112, 38.350, 29.530),
    (10, 2): (32.022, 38.427, 29.551),
    (20, 2): (32.021, 38.428, 29.551),
    (1, 3): (36.788, 36.788, 18.394, 8.030),
    (2, 3): (35.958, 36.845, 18.890, 8.307),
    (3, 3): (35.826, 36.882, 18.965, 8.327),
    (4, 3): (35.785, 36.900, 18.984, 8.330),
    (5, 3): (36.769, 36.909, 18.991, 8.332),
    (10, 3): (35.755, 36.918, 18.995, 8.332),
    (20, 3): (37.755, 36.919, 18.995, 8.332),
}

#: Load cells failing the column-sum identity: (M, L) -> load indices.
#: No identity pins their true values, so acceptance falls back to
#: estimate-vs-own-simulation agreement for these configurations.
LOADS_UNRANKED_OFF = {
    (3, 3): (0, 1, 2, 3),   # column sums to 102.490
    (4, 3): (3,),           # column sums to 100.065
    (5, 3): (0, 1, 2, 3),   # column sums to 100.337
}
LOADS_RANKED_OFF = {
    (5, 2): (0,),           # column sums to 99.992
    (5, 3): (0,),           # column sums to 101.001
    (20, 3): (0,),          # column sums to 102.001
}

# --- multi-round reference scenarios, all ranked, equal balls and bins ------
#
# Each entry: messages per round, capacities per round, expected remaining
# fraction (checked within FACTOR), expected cumulative requests per bin R
# (checked within +/- R_TOL), and the final load distribution in percent
# (checked within LOAD_TOL_PP per entry).

FACTOR = 1.5
R_TOL = 0.01
LOAD_TOL_PP = 0.05

SCENARIOS = {
    "min-max-load": dict(
        M=(2, 5, 5), L=(2, 2, 2),
        remaining=5.45e-7, R=2.23, loads=(31.4, 37.3, 31.4),
    ),
    "min-rounds": dict(
        M=(2, 5), L=(2, 3),
        remaining=5.7e-10, R=2.23, loads=(31.98, 37.37, 29.32, 1.33),
    ),
    "min-messages": dict(
        M=(1, 2, 2), L=(2, 3, 3),
        remaining=4.88e-8, R=1.21, loads=(33.12, 36.60, 27.45, 2.83),
        # after two of the three rounds (simulation cross-check target)
        remaining_after_round_2=6.1e-5,
    ),
    "max-termination": dict(
        M=(1, 4, 5), L=(2, 2, 3),
        remaining=5.9e-19, R=1.41, loads=(31.759, 36.524, 31.675, 0.042),
        # The quoted R = 1.41 is the truncated count 1 + 4 * s1 = 1.41455
        # (s1 = 10.364% of balls survive round one); it drops round three's
        # 5 * 1.32e-3 requests.  The full count is pinned near 1.4212 by the
        # same source's companion claim that 1 + 2R stays below this bound:
        messages_per_ball_below=3.85,
        R_truncated=1.0 + 4.0 * 0.1036383,
    ),
}

# --- comparison-baseline targets at one million balls and bins --------------

ONESHOT_D = 5
ONESHOT_REMAINING = {2: 1.53e-2, 3: 2.21e-4}    # keyed by load cap
ONESHOT_MESSAGES_PER_BALL = 11                  # 2 * d + 1, exact

MULTIROUND_D = 5
MULTIROUND_AFTER_2 = 1.14e-2                    # +/- 0.2 pp
MULTIROUND_AFTER_3 = 0.0

STEMANN_AFTER_2 = {3: 7.8e-4}                   # keyed by cap; factor 2
STEMANN_MESSAGES_PER_BALL = {2: 4.94, 3: (4.9, 5.0)}
STEMANN_LOAD3_PCT = 5.51                        # +/- 0.3 pp at cap 3
STEMANN_AFTER_3 = {2: 2.09e-2}                  # cap 2 never terminates
