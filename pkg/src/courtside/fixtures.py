"""Synthetic datasets with known generating parameters.

Three generators mirror the schemas of the experiments the package was
built for: team four-factor statistics predicting wins, player box and
social statistics predicting salary, and a 46-feature player table with a
five-way role label.  Each writes a CSV plus a ``.truth.json`` sidecar
holding the ground truth and the noise calibration.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import UsageError
from .tabular import Table

KINDS = ("four_factors", "salary", "roles")
MIN_ROWS = 50

# --- four factors ------------------------------------------------------------

FF_FEATURES = ("EFG_O", "EFG_D", "TOR", "TORD", "ORB", "DRB", "FTR", "FTRD")
FF_MEANS = np.array([50.0, 50.0, 18.0, 18.0, 29.0, 29.0, 33.0, 33.0])
FF_SDS = np.array([3.0, 3.0, 2.0, 2.0, 4.0, 4.0, 5.0, 5.0])
FF_WEIGHTS = np.array([1.2, -1.6, -1.5, 1.4, 0.4, -0.45, 0.2, -0.25])
FF_INTERCEPT_AT_MEAN = 20.0
FF_TARGET_R2 = 0.81


def four_factors(n: int, seed: int) -> tuple[Table, dict]:
    """Wins as a signed linear combination of eight team factors plus noise.

    Features are independent normals, so the signal variance is
    ``sum(w_j^2 sd_j^2)`` and noise with variance ``signal * (1/R2 - 1)``
    gives population R^2 = 0.81.  Rows with negative wins are redrawn.
    """
    rng = np.random.default_rng(seed)
    signal_var = float((FF_WEIGHTS**2 * FF_SDS**2).sum())
    noise_sd = math.sqrt(signal_var * (1.0 / FF_TARGET_R2 - 1.0))
    intercept = FF_INTERCEPT_AT_MEAN - float(FF_WEIGHTS @ FF_MEANS)
    rows: list[np.ndarray] = []
    redrawn = 0
    while len(rows) < n:
        x = FF_MEANS + FF_SDS * rng.standard_normal(len(FF_FEATURES))
        w = intercept + FF_WEIGHTS @ x + noise_sd * rng.standard_normal()
        if w < 0:
            redrawn += 1
            continue
        rows.append(np.append(x, w))
    M = np.round(np.array(rows), 4)
    names = [*FF_FEATURES, "W"]
    table = Table.from_columns({c: M[:, j].tolist() for j, c in enumerate(names)})
    truth = {
        "kind": "four_factors",
        "n": n,
        "seed": seed,
        "target": "W",
        "features": list(FF_FEATURES),
        "feature_means": FF_MEANS.tolist(),
        "feature_sds": FF_SDS.tolist(),
        "weights": dict(zip(FF_FEATURES, FF_WEIGHTS.tolist())),
        "intercept": intercept,
        "signs": ["+" if w > 0 else "-" for w in FF_WEIGHTS],
        "calibration": {
            "target_population_r2": FF_TARGET_R2,
            "signal_variance": signal_var,
            "noise_variance": noise_sd**2,
            "derivation": "independent features: var(signal) = sum w_j^2 sd_j^2; "
            "noise variance = var(signal) * (1 / R2 - 1)",
            "rows_redrawn_for_negative_wins": redrawn,
        },
    }
    return table, truth


# --- salary ------------------------------------------------------------------

SAL_FEATURES = ("PV", "TFC", "TRC", "MPG", "PTS", "DRPM", "ORPM", "PN", "AGE")
# standardized weights of SM on the standardized features
SAL_WEIGHTS = {
    "PV": 0.0017,
    "TFC": -0.0036,
    "TRC": 0.0045,
    "MPG": 0.05,
    "PTS": 0.7180,
    "DRPM": 0.3847,
    "ORPM": -0.0165,
    "PN": 0.02,
    "AGE": 0.4837,
}
SAL_CORRELATIONS = {
    ("PTS", "MPG"): 0.6,
    ("PTS", "ORPM"): 0.5,
    ("MPG", "ORPM"): 0.3,
    ("PTS", "AGE"): -0.2,
    ("PTS", "DRPM"): -0.2,
    ("AGE", "DRPM"): -0.1,
    ("PV", "TFC"): 0.6,
    ("PV", "TRC"): 0.6,
    ("TFC", "TRC"): 0.6,
    ("PTS", "PV"): 0.3,
}
# natural units: value = location + scale * z
SAL_UNITS = {
    "PV": (10.0, 3.0),
    "TFC": (5.0, 1.5),
    "TRC": (2.0, 0.6),
    "MPG": (25.0, 7.0),
    "PTS": (12.0, 6.0),
    "DRPM": (0.0, 1.8),
    "ORPM": (0.0, 2.0),
    "PN": (3.0, 1.2),
    "AGE": (27.0, 4.0),
    "SM": (15.0, 4.5),
}
# coefficient of (AGE_z^2 - 1); variance contribution 2 c^2 = 0.18
SAL_AGE_CURVATURE = -0.3


def _salary_correlation() -> np.ndarray:
    d = len(SAL_FEATURES)
    R = np.eye(d)
    for (a, b), r in SAL_CORRELATIONS.items():
        i, j = SAL_FEATURES.index(a), SAL_FEATURES.index(b)
        R[i, j] = R[j, i] = r
    return R


def _whiten(Z: np.ndarray) -> np.ndarray:
    """Center and rotate so the sample covariance (ddof=0) is exactly I."""
    Z = Z - Z.mean(axis=0)
    L = np.linalg.cholesky(Z.T @ Z / len(Z))
    return np.linalg.solve(L, Z.T).T


def salary(n: int, seed: int) -> tuple[Table, dict]:
    """Salary from correlated box/social statistics with a curved age effect.

    In standardized units ``s = b^T z + c q + e`` where ``q`` is
    ``z_AGE^2 - 1`` with its projection onto the features removed.  The
    features have exact sample correlation ``R``; ``e`` is exactly
    orthogonal to the features and to ``q``, with variance chosen so that
    ``var(s) = 1``.  A degree-1 fit therefore reaches R^2 near ``b^T R b``
    and recovers ``b`` as its standardized coefficients, while the
    curvature term adds ``2 c^2`` of explainable variance at degree 2.
    """
    rng = np.random.default_rng(seed)
    d = len(SAL_FEATURES)
    R = _salary_correlation()
    b = np.array([SAL_WEIGHTS[c] for c in SAL_FEATURES])
    Z = _whiten(rng.standard_normal((n, d))) @ np.linalg.cholesky(R).T
    z_age = Z[:, SAL_FEATURES.index("AGE")]
    # keep the curvature exactly orthogonal to the linear span; what remains
    # is still a quadratic polynomial of the features
    lin_basis = np.column_stack([np.ones(n), Z])
    q = z_age**2 - 1.0
    q = q - lin_basis @ np.linalg.lstsq(lin_basis, q, rcond=None)[0]
    curve = SAL_AGE_CURVATURE * q
    linear = Z @ b
    signal = linear + curve
    explained = float(signal.var())
    noise_var = 1.0 - explained
    if noise_var <= 0:
        raise UsageError("salary calibration leaves no room for noise")
    e = rng.standard_normal(n)
    basis = np.column_stack([np.ones(n), Z, curve])
    e = e - basis @ np.linalg.lstsq(basis, e, rcond=None)[0]
    e *= math.sqrt(noise_var / float(e.var()))
    s = signal + e

    data = {}
    for j, c in enumerate(SAL_FEATURES):
        loc, scale = SAL_UNITS[c]
        data[c] = np.round(loc + scale * Z[:, j], 6).tolist()
    loc, scale = SAL_UNITS["SM"]
    data["SM"] = np.round(loc + scale * s, 6).tolist()
    table = Table.from_columns(data)
    linear_r2 = float(b @ R @ b)
    truth = {
        "kind": "salary",
        "n": n,
        "seed": seed,
        "target": "SM",
        "features": list(SAL_FEATURES),
        "standardized_weights": dict(SAL_WEIGHTS),
        "correlations": {f"{a}~{b_}": r for (a, b_), r in SAL_CORRELATIONS.items()},
        "age_curvature": SAL_AGE_CURVATURE,
        "units": {c: {"location": u[0], "scale": u[1]} for c, u in SAL_UNITS.items()},
        "calibration": {
            "population_r2_degree1": linear_r2,
            "population_r2_curvature": 2 * SAL_AGE_CURVATURE**2,
            "sample_signal_variance": explained,
            "noise_variance": noise_var,
            "derivation": "features whitened then mixed by chol(R) so corr = R exactly; "
            "var(b^T z) = b^T R b; var(c (z^2 - 1)) = 2 c^2 for Gaussian z, and the "
            "curvature is projected off [1, z] so it cannot leak into linear weights; "
            "noise is projected off [1, z, curvature] and scaled to 1 - var(signal)",
        },
    }
    return table, truth


# --- roles -------------------------------------------------------------------

ROLES = ("PG", "SG", "SF", "PF", "C")
ROLE_FEATURES = (
    "HEIGHT", "WEIGHT", "AGE", "G", "GS", "MP", "FG", "FGA", "FG_PCT", "FG3",
    "FG3A", "FG3_PCT", "FG2", "FG2A", "FG2_PCT", "EFG_PCT", "FT", "FTA", "FT_PCT", "ORB",
    "DRB", "TRB", "AST", "STL", "BLK", "TOV", "PF_COUNT", "PTS", "PER", "TS_PCT",
    "FTR", "ORB_PCT", "DRB_PCT", "AST_PCT", "STL_PCT", "BLK_PCT", "TOV_PCT", "USG_PCT", "OWS", "DWS",
    "WS", "WS48", "OBPM", "DBPM", "VORP", "DRPM",
)  # fmt: skip
ROLE_OFFSET_SCALE = 0.5
# DRPM group means in units of sigma / sqrt(group size): Tukey q of each pair
# is the gap between these numbers
DRPM_SHIFTS = {"PG": 0.0, "SG": 0.0, "SF": 5.5, "PF": 7.75, "C": 10.0}
DRPM_SIGMA = 1.0
# labelled role -> role whose feature profile the row actually follows
ROLE_SWITCHERS = (("SG", "SF"), ("PG", "PF"))


def roles(n: int, seed: int) -> tuple[Table, dict]:
    """46 box statistics with class-dependent means and a ROLE label.

    Labels are assigned round-robin and shuffled, so class counts differ by
    at most one.  Feature ``j`` of a row in class ``k`` is
    ``loc_j + scale_j * (mu_kj + N(0, 1))`` with ``mu_kj ~ 0.5 N(0, 1)``.

    DRPM is built so that one-way ANOVA across roles has within-group mean
    square exactly ``DRPM_SIGMA^2`` and group means exactly at
    ``DRPM_SHIFTS`` (in units of ``sigma / sqrt(n_k)``).  Tukey HSD at
    alpha 0.05 then rejects 7 of the 10 pairs: every pair except PG-SG,
    SF-PF and PF-C.

    Two rows are role switchers: labelled with one role but drawn from
    another role's profile.
    """
    rng = np.random.default_rng(seed)
    k, d = len(ROLES), len(ROLE_FEATURES)
    offsets = ROLE_OFFSET_SCALE * rng.standard_normal((k, d))
    locs = np.round(rng.uniform(1.0, 50.0, d), 1)
    scales = np.round(rng.uniform(0.5, 5.0, d), 2)
    labels = np.array([i % k for i in range(n)])
    labels = labels[rng.permutation(n)]
    profile = labels.copy()
    switchers = []
    for (label, acts_as) in ROLE_SWITCHERS:
        row = int(np.flatnonzero(labels == ROLES.index(label))[len(switchers)])
        profile[row] = ROLES.index(acts_as)
        switchers.append({"row": row, "label": label, "profile": acts_as})
    Z = offsets[profile] + rng.standard_normal((n, d))
    X = locs + scales * Z

    j = ROLE_FEATURES.index("DRPM")
    drpm = np.empty(n)
    raw = rng.standard_normal(n)
    group_ss = 0.0
    for g in range(k):
        idx = labels == g
        e = raw[idx] - raw[idx].mean()
        group_ss += float(e @ e)
        drpm[idx] = e
    scale = math.sqrt(DRPM_SIGMA**2 * (n - k) / group_ss)
    for g, role in enumerate(ROLES):
        idx = labels == g
        unit = DRPM_SIGMA / math.sqrt(idx.sum())
        drpm[idx] = drpm[idx] * scale + DRPM_SHIFTS[role] * unit
    X[:, j] = drpm

    X = np.round(X, 6)
    data = {c: X[:, t].tolist() for t, c in enumerate(ROLE_FEATURES)}
    data["ROLE"] = [ROLES[g] for g in labels]
    table = Table.from_columns(data, {"ROLE": "categorical"})
    truth = {
        "kind": "roles",
        "n": n,
        "seed": seed,
        "target": "ROLE",
        "classes": list(ROLES),
        "features": list(ROLE_FEATURES),
        "class_offsets": {r: offsets[g].tolist() for g, r in enumerate(ROLES)},
        "feature_locations": locs.tolist(),
        "feature_scales": scales.tolist(),
        "role_switchers": switchers,
        "drpm": {
            "within_group_sigma": DRPM_SIGMA,
            "mean_shifts_in_standard_errors": dict(DRPM_SHIFTS),
            "expected_tukey_rejections": 7,
        },
        "calibration": {
            "derivation": "DRPM residuals are centered within each role and scaled so the "
            "pooled within-group mean square equals sigma^2 exactly; role means are "
            "placed at shift * sigma / sqrt(n_role), so each Tukey q statistic equals "
            "the difference of shifts (rounding to 6 decimals aside)",
        },
    }
    return table, truth


_GENERATORS = {"four_factors": four_factors, "salary": salary, "roles": roles}


def generate(kind: str, n: int, seed: int) -> tuple[Table, dict]:
    if kind not in _GENERATORS:
        raise UsageError(f"unknown fixture kind {kind!r}; choose from {', '.join(KINDS)}")
    if n < MIN_ROWS:
        raise UsageError(f"fixtures need n >= {MIN_ROWS} (got {n})")
    return _GENERATORS[kind](n, seed)


def sidecar_path(csv_path: str | Path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".truth.json")


def make_fixture(kind: str, n: int, seed: int, out: str | Path) -> Path:
    """Write the fixture CSV to ``out`` and its ground truth next to it."""
    table, truth = generate(kind, n, seed)
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out)
    sidecar_path(out).write_text(json.dumps(truth, indent=2, sort_keys=True) + "\n")
    return out
