"""Global dynamics of a transition matrix: spectrum, spectral gap,
relaxation, mixing, entropy rate and mean recurrence times."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .dtmc import StationaryDist, Tpm, stationary

__all__ = [
    "ChainMetrics",
    "EigenFailure",
    "eigen_moduli",
    "eigenvalues",
    "spectral_gap",
    "relaxation",
    "mixing_rate",
    "tv_bound",
    "entropy_rate",
    "stationary_entropy",
    "mean_recurrence",
    "chain_metrics",
]


class EigenFailure(ArithmeticError):
    pass


def _matrix(tpm) -> np.ndarray:
    return np.asarray(getattr(tpm, "p", tpm), dtype=float)


def eigenvalues(tpm) -> np.ndarray:
    """Complex spectrum (LAPACK ``geev``: Hessenberg reduction + shifted QR)."""
    p = _matrix(tpm)
    try:
        ev = np.linalg.eigvals(p)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"eigenvalue iteration did not converge for\n{p!r}") from exc
    return ev


def eigen_moduli(tpm) -> np.ndarray:
    """Eigenvalue moduli in descending order."""
    mods = np.sort(np.abs(eigenvalues(tpm)))[::-1]
    # stochastic matrices have no modulus above 1; snap roundoff at both ends
    mods[np.abs(mods - 1.0) <= 1e-10] = 1.0
    mods[mods <= 1e-13] = 0.0
    return mods


def _lambda2(tpm) -> float:
    mods = eigen_moduli(tpm)
    if mods.size < 2:
        return 0.0
    return float(min(mods[1], 1.0))


def spectral_gap(tpm) -> float:
    """``1 - |lambda_2|`` with ``lambda_2`` the second largest eigenvalue by modulus."""
    return 1.0 - _lambda2(tpm)


def mixing_rate(tpm) -> float:
    """``|lambda_2|``, the per-step contraction factor toward stationarity."""
    return _lambda2(tpm)


def relaxation(tpm):
    """Return ``(1 / gap, -ln |lambda_2|)``.

    The first is the relaxation time; the second is the log-rate whose
    values correspond to the tabulated "relaxation rate".  Either is
    ``inf`` when its denominator or argument vanishes.
    """
    lam = _lambda2(tpm)
    gap = 1.0 - lam
    t_rel = math.inf if gap <= 0 else 1.0 / gap
    rate = math.inf if lam <= 0 else -math.log(lam)
    return t_rel, rate


def tv_bound(relaxation_time: float, n: int) -> str:
    """Symbolic total-variation bound after ``n`` steps; the constant is left as C."""
    if math.isinf(relaxation_time):
        return "||p(n) - pi||_TV <= C (no decay)"
    return f"||p({n}) - pi||_TV <= C * exp(-{n}/{relaxation_time:.6g}) = C * {math.exp(-n / relaxation_time):.6g}"


def _log(x: np.ndarray, base: Optional[float]) -> np.ndarray:
    out = np.log(x)
    return out if base is None else out / math.log(base)


def entropy_rate(tpm, pi, base: Optional[float] = None) -> float:
    """``-sum_i pi_i sum_j p_ij log p_ij`` with ``0 log 0 = 0``.

    Natural log unless ``base`` is given.
    """
    p = _matrix(tpm)
    pi = np.asarray(getattr(pi, "pi", pi), dtype=float)
    safe = np.where(p > 0, p, 1.0)
    row_h = -np.sum(p * _log(safe, base), axis=1)
    return float(max(pi @ row_h, 0.0))


def stationary_entropy(pi, base: Optional[float] = None) -> float:
    pi = np.asarray(getattr(pi, "pi", pi), dtype=float)
    nz = pi[pi > 0]
    return float(-np.sum(nz * _log(nz, base)))


def mean_recurrence(pi) -> np.ndarray:
    """``1 / pi_i``; states with zero mass recur after infinitely many steps."""
    pi = np.asarray(getattr(pi, "pi", pi), dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(pi > 0, 1.0 / np.where(pi > 0, pi, 1.0), np.inf)


@dataclass(frozen=True)
class ChainMetrics:
    spectral_gap: float
    lambda2_mod: float
    relaxation_time: float
    relaxation_rate_log: float
    mixing_rate: float
    entropy_rate: float
    entropy_base: str
    stationary: np.ndarray
    stationary_residual: float
    mrt: np.ndarray
    eigen_moduli: np.ndarray
    spectrum_states: List[int]
    warnings: List[str]

    def to_dict(self) -> dict:
        def num(x):
            x = float(x)
            return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")

        return {
            "spectral_gap": num(self.spectral_gap),
            "lambda2_mod": num(self.lambda2_mod),
            "relaxation_time": num(self.relaxation_time),
            "relaxation_rate_log": num(self.relaxation_rate_log),
            "mixing_rate": num(self.mixing_rate),
            "entropy_rate": num(self.entropy_rate),
            "entropy_base": self.entropy_base,
            "stationary": [num(v) for v in self.stationary],
            "stationary_residual": num(self.stationary_residual),
            "mean_recurrence": [num(v) for v in self.mrt],
            "eigen_moduli": [num(v) for v in self.eigen_moduli],
            "spectrum_states": list(self.spectrum_states),
            "warnings": list(self.warnings),
        }


def chain_metrics(tpm: Tpm, pi: Optional[StationaryDist] = None, base: Optional[float] = None) -> ChainMetrics:
    """All per-matrix metrics.

    Unsupported (never observed) self-loop rows are dropped before the
    spectrum is taken: each contributes a spurious unit eigenvalue that
    would force the gap to zero.
    """
    notes = []
    keep = [int(i) for i in np.flatnonzero(tpm.support)]
    if len(keep) < tpm.size:
        notes.append(f"spectrum restricted to supported states; degenerate rows {tpm.degenerate_rows}")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    sub = tpm.p[np.ix_(keep, keep)]
    mods = eigen_moduli(sub)
    lam = float(min(mods[1], 1.0)) if mods.size > 1 else 0.0
    gap = 1.0 - lam
    t_rel = math.inf if gap <= 0 else 1.0 / gap
    rate = math.inf if lam <= 0 else -math.log(lam)
    if pi is None:
        pi = stationary(tpm)
    h = entropy_rate(tpm, pi.pi, base)
    return ChainMetrics(
        spectral_gap=gap,
        lambda2_mod=lam,
        relaxation_time=t_rel,
        relaxation_rate_log=rate,
        mixing_rate=lam,
        entropy_rate=h,
        entropy_base="e" if base is None else str(base),
        stationary=pi.pi,
        stationary_residual=pi.residual,
        mrt=mean_recurrence(pi.pi),
        eigen_moduli=mods,
        spectrum_states=keep,
        warnings=notes,
    )
