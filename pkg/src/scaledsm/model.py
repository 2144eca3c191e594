"""Problem instances and closed-form quantities for the multicarrier
interference channel.

Conventions: powers are K x N arrays ``p[k, n]``; gains are K x K x N with
``gain[k, l, n]`` the power gain from transmitter ``l`` to receiver ``k`` on
carrier ``n``. Logarithms are natural, so rates are in nats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np


def _frozen(a, ndim, name):
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable WSR power-allocation instance.

    Parameters
    ----------
    gain : array (K, K, N)
        ``gain[k, l, n]``, transmitter ``l`` to receiver ``k`` at carrier ``n``.
    noise : array (K, N)
        Noise power per receiver and carrier (linear).
    weight : array (K,)
        Rate weights.
    p_total : array (K,)
        Sum-power budget of each transmitter.
    p_mask : array (K, N)
        Per-carrier spectral mask.
    gamma : float
        SINR gap, linear, at least 1.
    """

    gain: np.ndarray
    noise: np.ndarray
    weight: np.ndarray
    p_total: np.ndarray
    p_mask: np.ndarray
    gamma: float = 1.0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "gain", _frozen(self.gain, 3, "gain"))
        set_(self, "noise", _frozen(self.noise, 2, "noise"))
        set_(self, "weight", _frozen(self.weight, 1, "weight"))
        set_(self, "p_total", _frozen(self.p_total, 1, "p_total"))
        set_(self, "p_mask", _frozen(self.p_mask, 2, "p_mask"))
        set_(self, "gamma", float(self.gamma))

        K, K2, N = self.gain.shape
        if K != K2:
            raise ValueError(f"gain must be K x K x N, got {self.gain.shape}")
        if K < 1 or N < 1:
            raise ValueError("need at least one link and one carrier")
        for nm, arr, shape in [
            ("noise", self.noise, (K, N)),
            ("weight", self.weight, (K,)),
            ("p_total", self.p_total, (K,)),
            ("p_mask", self.p_mask, (K, N)),
        ]:
            if arr.shape != shape:
                raise ValueError(f"{nm} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError(f"{nm} must be finite and strictly positive")
        if not np.all(np.isfinite(self.gain)) or np.any(self.gain <= 0):
            raise ValueError("all channel gains must be finite and strictly positive")
        if not np.isfinite(self.gamma) or self.gamma < 1.0:
            raise ValueError(f"gamma must be >= 1 (linear), got {self.gamma}")
        # Strictly positive gains make every normalized cross-gain matrix
        # irreducible; for K >= 3 it is also primitive. K = 2 gives a
        # period-2 matrix, which the two-user examples use anyway, so no
        # primitivity check is enforced.

    @property
    def K(self) -> int:
        return self.gain.shape[0]

    @property
    def N(self) -> int:
        return self.gain.shape[2]

    @cached_property
    def direct(self) -> np.ndarray:
        """Direct gains ``g_kkn`` as a K x N array."""
        K = self.K
        d = self.gain[np.arange(K), np.arange(K), :].copy()
        d.setflags(write=False)
        return d

    @cached_property
    def cross(self) -> np.ndarray:
        """Gains with the direct links zeroed out."""
        c = self.gain.copy()
        c[np.arange(self.K), np.arange(self.K), :] = 0.0
        c.setflags(write=False)
        return c

    def zeros(self) -> np.ndarray:
        return np.zeros((self.K, self.N))

    # --- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "N": self.N,
            "gain": self.gain.tolist(),
            "noise": self.noise.tolist(),
            "weight": self.weight.tolist(),
            "p_total": self.p_total.tolist(),
            "p_mask": self.p_mask.tolist(),
            "gamma_db": float(10.0 * np.log10(self.gamma)),
        }

    @classmethod
    def from_dict(cls, d: dict, name: str = "") -> "Scenario":
        s = cls(
            gain=d["gain"],
            noise=d["noise"],
            weight=d["weight"],
            p_total=d["p_total"],
            p_mask=d["p_mask"],
            gamma=10.0 ** (float(d.get("gamma_db", 0.0)) / 10.0),
            name=name,
        )
        if "K" in d and int(d["K"]) != s.K or "N" in d and int(d["N"]) != s.N:
            raise ValueError("declared K/N do not match array shapes")
        return s

    def to_json(self, path=None, indent=None) -> str:
        text = json.dumps(self.to_dict(), indent=indent)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_json(cls, source) -> "Scenario":
        """Load from a JSON string or a path to a UTF-8 JSON file."""
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            path = Path(source)
            return cls.from_dict(json.loads(path.read_text(encoding="utf-8")), name=path.stem)
        return cls.from_dict(json.loads(source))


def two_user_scenario(g12, g21, w1, w2, g11=1.0, g22=1.0, noise=1.0, p_max=1.0, gamma=1.0) -> Scenario:
    """K=2, N=1 toy instance with unit budgets and masks by default.

    ``g12`` is the gain from transmitter 2 into receiver 1.
    """
    gain = np.array([[[g11], [g12]], [[g21], [g22]]], dtype=float)
    return Scenario(
        gain=gain,
        noise=np.full((2, 1), noise),
        weight=[w1, w2],
        p_total=[p_max, p_max],
        p_mask=np.full((2, 1), p_max),
        gamma=gamma,
    )


# The two parameter sets of the two-user toy example (Gamma = 0 dB, unit
# budgets, masks, direct gains and noise).
def toy_set1() -> Scenario:
    return two_user_scenario(g12=0.8, g21=0.4, w1=3.0, w2=1.0)


def toy_set2() -> Scenario:
    return two_user_scenario(g12=1.8, g21=0.4, w1=1.8, w2=1.0)


# --- closed-form quantities ---------------------------------------------


def _check_power(s: Scenario, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (s.K, s.N):
        raise ValueError(f"power has shape {p.shape}, expected {(s.K, s.N)}")
    return p


def interference_matrix(s: Scenario, p) -> np.ndarray:
    """Interference-plus-noise ``I[k, n]`` for every receiver and carrier."""
    p = _check_power(s, p)
    return s.noise + np.einsum("kln,ln->kn", s.cross, p)


def interference(s: Scenario, p, k: int, n: int) -> float:
    p = _check_power(s, p)
    if not (0 <= k < s.K and 0 <= n < s.N):
        raise IndexError(f"(k, n) = ({k}, {n}) out of range for K={s.K}, N={s.N}")
    return float(s.noise[k, n] + sum(s.gain[k, l, n] * p[l, n] for l in range(s.K) if l != k))


def sinr(s: Scenario, p) -> np.ndarray:
    p = _check_power(s, p)
    return s.direct * p / interference_matrix(s, p)


def wsr(s: Scenario, p) -> float:
    """Weighted sum rate of power allocation ``p`` in nats."""
    r = np.log1p(sinr(s, p) / s.gamma)
    return float(s.weight @ r.sum(axis=1))


def rates(s: Scenario, p) -> np.ndarray:
    """Unweighted per-link rates summed over carriers."""
    return np.log1p(sinr(s, p) / s.gamma).sum(axis=1)


def wsr_from_logsinr(s: Scenario, phi) -> float:
    phi = np.asarray(phi, dtype=float)
    return float(s.weight @ np.log1p(np.exp(phi) / s.gamma).sum(axis=1))


def logsinr_of_power(s: Scenario, p) -> np.ndarray:
    p = _check_power(s, p)
    if np.any(p <= 0):
        raise ValueError("log-SINR needs strictly positive powers")
    return np.log(s.direct) + np.log(p) - np.log(interference_matrix(s, p))


def log_power(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0):
        raise ValueError("log-power needs strictly positive powers")
    return np.log(p)


def grad_f_logsinr(s: Scenario, phi) -> np.ndarray:
    """Gradient of the WSR with respect to log-SINR."""
    phi = np.asarray(phi, dtype=float)
    # w e^phi / (gamma + e^phi), written to stay finite for large phi
    return s.weight[:, None] / (1.0 + s.gamma * np.exp(-phi))


@dataclass
class Violation:
    kind: str  # "sum_power", "mask" or "negative"
    k: int
    n: int | None
    amount: float


def is_feasible(s: Scenario, p, tol: float = 1e-9):
    """Check budget and mask constraints with a relative tolerance.

    Returns ``(ok, violations)``.
    """
    p = _check_power(s, p)
    out = []
    rows = p.sum(axis=1)
    for k in np.flatnonzero(rows > s.p_total * (1.0 + tol)):
        out.append(Violation("sum_power", int(k), None, float(rows[k] - s.p_total[k])))
    for k, n in zip(*np.nonzero(p > s.p_mask * (1.0 + tol))):
        out.append(Violation("mask", int(k), int(n), float(p[k, n] - s.p_mask[k, n])))
    for k, n in zip(*np.nonzero(p < 0)):
        out.append(Violation("negative", int(k), int(n), float(-p[k, n])))
    return not out, out
