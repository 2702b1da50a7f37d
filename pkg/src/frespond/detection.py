"""Gaussian hypothesis fitting, LLR, ROC curves and KL divergence.

Hypotheses F0 (target outside the link's first Fresnel ellipsoid) and F1
(inside) are Gaussians over the observed extra-attenuation in dB. Fitting
uses the population (1/L) variance convention. The LLR is

    0.5*((a - mu0)/s0)^2 - 0.5*((a - mu1)/s1)^2 - log(s1/s0)

and detection thresholds it: pd = Pr(LLR > t | F1), pfa = Pr(LLR > t | F0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import ValidationError
from .geometry import MembershipSplit
from .scenario import AttenuationMap


@dataclass(frozen=True)
class GaussianHypothesis:
    mu_db: float
    sigma_db: float

    def __post_init__(self):
        if not self.sigma_db > 0:
            raise ValidationError(
                f"degenerate hypothesis: sigma must be > 0, got {self.sigma_db}"
            )


@dataclass(frozen=True)
class RocCurve:
    """Operating points sorted by pfa, endpoints (0,0) and (1,1) included."""

    pfa: np.ndarray
    pd: np.ndarray
    auc: float

    @classmethod
    def from_points(cls, pfa, pd) -> "RocCurve":
        pfa = np.asarray(pfa, dtype=float)
        pd = np.asarray(pd, dtype=float)
        order = np.lexsort((pd, pfa))
        pfa, pd = pfa[order], pd[order]
        if pfa[0] != 0.0 or pd[0] != 0.0:
            pfa = np.concatenate([[0.0], pfa])
            pd = np.concatenate([[0.0], pd])
        if pfa[-1] != 1.0 or pd[-1] != 1.0:
            pfa = np.concatenate([pfa, [1.0]])
            pd = np.concatenate([pd, [1.0]])
        pd = np.maximum.accumulate(pd)
        auc = float(np.trapezoid(pd, pfa))
        return cls(pfa=pfa, pd=pd, auc=auc)

    def pd_at(self, pfa) -> np.ndarray:
        """Detection probability interpolated at the given false-alarm rates."""
        return np.interp(np.asarray(pfa, dtype=float), self.pfa, self.pd)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("pfa,pd\n")
            for fa, det in zip(self.pfa, self.pd):
                fh.write(f"{float(fa)!r},{float(det)!r}\n")

    def to_json_dict(self) -> dict:
        return {"pfa": self.pfa.tolist(), "pd": self.pd.tolist(), "auc": self.auc}

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")


def _member_values(amap: AttenuationMap, ids, per_frequency: bool) -> np.ndarray:
    mask = np.isin(amap.ids, list(ids))
    if per_frequency:
        return amap.per_freq_db[mask].ravel()
    return amap.aggregate_db[mask]


def fit_hypotheses(
    amap: AttenuationMap, split: MembershipSplit, per_frequency: bool = False
) -> tuple[GaussianHypothesis, GaussianHypothesis]:
    """(F0, F1) hypotheses fitted from map values over the membership sets.

    Mean and 1/L (population) standard deviation per set; observations are
    the per-position aggregates, or every per-frequency value when
    per_frequency is set. Excluded positions are ignored.
    """
    out = {}
    for name, ids in (("F0", split.outside_ids), ("F1", split.inside_ids)):
        if not ids:
            raise ValidationError(f"membership set {name} is empty")
        missing = set(ids) - set(amap.ids.tolist())
        if missing:
            raise ValidationError(
                f"membership set {name} names positions missing from the map: "
                f"{sorted(missing)}"
            )
        vals = _member_values(amap, ids, per_frequency)
        mu = float(vals.mean())
        sigma = float(math.sqrt(np.mean((vals - mu) ** 2)))
        if sigma == 0.0:
            raise ValidationError(
                f"degenerate hypothesis {name}: zero variance over {vals.size} values"
            )
        out[name] = GaussianHypothesis(mu_db=mu, sigma_db=sigma)
    return out["F0"], out["F1"]


def llr(a_s_db, f0: GaussianHypothesis, f1: GaussianHypothesis):
    """Log-likelihood ratio of F1 against F0 at the observed attenuation."""
    a = np.asarray(a_s_db, dtype=float)
    z0 = (a - f0.mu_db) / f0.sigma_db
    z1 = (a - f1.mu_db) / f1.sigma_db
    out = 0.5 * z0 * z0 - 0.5 * z1 * z1 - math.log(f1.sigma_db / f0.sigma_db)
    if np.isscalar(a_s_db) or a.ndim == 0:
        return float(out)
    return out


def kl_divergence(f0: GaussianHypothesis, f1: GaussianHypothesis) -> float:
    """KL(F0 || F1) between the two Gaussian hypotheses (natural log)."""
    s0, s1 = f0.sigma_db, f1.sigma_db
    dmu = f0.mu_db - f1.mu_db
    return math.log(s1 / s0) + (s0 * s0 + dmu * dmu) / (2.0 * s1 * s1) - 0.5


def _gauss_prob_above(mu, sigma, x) -> float:
    """Pr(X > x) for X ~ N(mu, sigma^2)."""
    return float(ndtr((mu - x) / sigma))


def _gauss_prob_between(mu, sigma, lo, hi) -> float:
    return float(ndtr((hi - mu) / sigma) - ndtr((lo - mu) / sigma))


def _region_probability(t, alpha, beta, gamma, hyp: GaussianHypothesis) -> float:
    """Pr(llr(a) > t) for a ~ hyp, with llr(a) = alpha a^2 + beta a + gamma."""
    mu, sigma = hyp.mu_db, hyp.sigma_db
    c = gamma - t
    if alpha == 0.0:
        if beta == 0.0:
            return 1.0 if c > 0 else 0.0
        x = -c / beta
        if beta > 0:
            return _gauss_prob_above(mu, sigma, x)
        return 1.0 - _gauss_prob_above(mu, sigma, x)
    disc = beta * beta - 4.0 * alpha * c
    if disc <= 0.0:
        # no real roots: the parabola never crosses t
        return 1.0 if alpha > 0 else 0.0
    sq = math.sqrt(disc)
    r1 = (-beta - sq) / (2.0 * alpha)
    r2 = (-beta + sq) / (2.0 * alpha)
    lo, hi = min(r1, r2), max(r1, r2)
    inside = _gauss_prob_between(mu, sigma, lo, hi)
    if alpha > 0:
        return 1.0 - inside
    return inside


def _llr_coefficients(f0: GaussianHypothesis, f1: GaussianHypothesis):
    """(alpha, beta, gamma) of llr(a) = alpha a^2 + beta a + gamma."""
    alpha = 0.5 * (1.0 / f0.sigma_db**2 - 1.0 / f1.sigma_db**2)
    beta = f1.mu_db / f1.sigma_db**2 - f0.mu_db / f0.sigma_db**2
    gamma = (
        0.5 * (f0.mu_db**2 / f0.sigma_db**2 - f1.mu_db**2 / f1.sigma_db**2)
        - math.log(f1.sigma_db / f0.sigma_db)
    )
    return alpha, beta, gamma


def roc_operating_points(f0: GaussianHypothesis, f1: GaussianHypothesis, thresholds):
    """Exact (pfa, pd) of the LLR detector at each threshold value."""
    alpha, beta, gamma = _llr_coefficients(f0, f1)
    ts = np.atleast_1d(np.asarray(thresholds, dtype=float))
    pfa = np.array([_region_probability(t, alpha, beta, gamma, f0) for t in ts])
    pd = np.array([_region_probability(t, alpha, beta, gamma, f1) for t in ts])
    return pfa, pd


def roc_analytic(
    f0: GaussianHypothesis, f1: GaussianHypothesis, n_thresholds: int = 2001
) -> RocCurve:
    """Exact ROC of the LLR detector via the quadratic decision regions.

    For unequal sigmas the region {llr > t} is the outside (or inside) of the
    two roots of a quadratic in a; probabilities follow from Gaussian CDFs at
    the roots. Identical hypotheses give a constant LLR, for which the
    randomized detector traces the pd = pfa diagonal.
    """
    if f0 == f1:
        grid = np.linspace(0.0, 1.0, n_thresholds)
        return RocCurve.from_points(grid, grid)

    # Threshold sweep across the LLR values seen over both hypotheses' bulk.
    alpha, beta, gamma = _llr_coefficients(f0, f1)
    a_grid = np.concatenate(
        [
            np.linspace(f0.mu_db - 9 * f0.sigma_db, f0.mu_db + 9 * f0.sigma_db, n_thresholds),
            np.linspace(f1.mu_db - 9 * f1.sigma_db, f1.mu_db + 9 * f1.sigma_db, n_thresholds),
        ]
    )
    ts = np.unique(alpha * a_grid**2 + beta * a_grid + gamma)
    pfa, pd = roc_operating_points(f0, f1, ts)
    return RocCurve.from_points(pfa, pd)


def roc_monte_carlo(
    f0: GaussianHypothesis,
    f1: GaussianHypothesis,
    n: int,
    seed: int = 0,
    n_thresholds: int = 2001,
) -> RocCurve:
    """ROC estimated from n LLR draws under each hypothesis."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    g0 = np.sort(llr(rng.normal(f0.mu_db, f0.sigma_db, n), f0, f1))
    g1 = np.sort(llr(rng.normal(f1.mu_db, f1.sigma_db, n), f0, f1))
    ts = np.unique(np.quantile(np.concatenate([g0, g1]), np.linspace(0, 1, n_thresholds)))
    # Pr(llr > t) = fraction of draws strictly above the threshold
    pfa = 1.0 - np.searchsorted(g0, ts, side="right") / n
    pd = 1.0 - np.searchsorted(g1, ts, side="right") / n
    return RocCurve.from_points(pfa, pd)


def roc(
    f0: GaussianHypothesis,
    f1: GaussianHypothesis,
    mode: str = "analytic",
    n: int = 1_000_000,
    seed: int = 0,
) -> RocCurve:
    """ROC curve in 'analytic' or 'monte_carlo' mode."""
    if mode == "analytic":
        return roc_analytic(f0, f1)
    if mode == "monte_carlo":
        return roc_monte_carlo(f0, f1, n=n, seed=seed)
    raise ValidationError(f"unknown ROC mode {mode!r}")
