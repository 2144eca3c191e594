"""Random multicarrier interference-channel scenarios.

Path loss is calibrated so the average received power at the reference
distance (10 m) is 30 dB below the transmitted power, decaying with exponent
3. Small-scale fading is an 8-tap FIR channel with i.i.d. complex Gaussian
taps under an exponential power-delay profile, taken to the frequency domain
by an N-point FFT; the carrier gain is the squared magnitude.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .model import Scenario


def _db(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


@dataclass
class GeneratorParams:
    K: int = 4
    N: int = 128
    tx_xy: list = field(default_factory=lambda: [[1, 5], [2, 5], [3, 0], [4, 0]])
    rx_xy: list = field(default_factory=lambda: [[1, 10], [2, 10], [3, 10], [4, 10]])
    ref_loss_db: float = 30.0
    ref_distance: float = 10.0
    exponent: float = 3.0
    taps: int = 8
    tap_decay: float = 1.0  # tap l has mean power proportional to exp(-l / tap_decay)
    noise_dbm: float = -30.0
    p_total_dbm: float = 50.0
    p_mask_dbm: float | None = None  # None: mask equals the budget
    gamma_db: float = 0.0
    weights: list = field(default_factory=lambda: [1.0, 1.0, 2.0, 2.0])

    def __post_init__(self):
        tx = np.asarray(self.tx_xy, dtype=float)
        rx = np.asarray(self.rx_xy, dtype=float)
        if tx.shape != (self.K, 2) or rx.shape != (self.K, 2):
            raise ValueError("need one (x, y) coordinate per transmitter and receiver")
        if self.N < 1 or self.taps < 1:
            raise ValueError("N and taps must be positive")
        if len(self.weights) != self.K:
            raise ValueError("need one weight per link")
        if np.any(self.distances() <= 0):
            raise ValueError("transmitter and receiver positions must differ")

    def distances(self) -> np.ndarray:
        """``d[k, l]`` from transmitter ``l`` to receiver ``k`` in meters."""
        tx = np.asarray(self.tx_xy, dtype=float)
        rx = np.asarray(self.rx_xy, dtype=float)
        return np.linalg.norm(rx[:, None, :] - tx[None, :, :], axis=2)

    def mean_gain(self) -> np.ndarray:
        return _db(-self.ref_loss_db) * (self.distances() / self.ref_distance) ** (-self.exponent)

    @classmethod
    def from_json(cls, path) -> "GeneratorParams":
        return cls(**json.loads(Path(path).read_text(encoding="utf-8")))

    def to_json(self, path=None) -> str:
        text = json.dumps(asdict(self), indent=2)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def fading_gains(rng: np.random.Generator, shape, N: int, taps: int, decay: float) -> np.ndarray:
    """Unit-mean carrier power gains of random FIR channels, shape ``shape + (N,)``."""
    pdp = np.exp(-np.arange(taps) / decay)
    pdp /= pdp.sum()
    h = (rng.standard_normal(shape + (taps,)) + 1j * rng.standard_normal(shape + (taps,))) / np.sqrt(2)
    h *= np.sqrt(pdp)
    H = np.fft.fft(h, n=N, axis=-1)
    return np.abs(H) ** 2


def generate_scenario(params: GeneratorParams, seed: int) -> Scenario:
    rng = np.random.default_rng(seed)
    K, N = params.K, params.N
    gain = params.mean_gain()[:, :, None] * fading_gains(rng, (K, K), N, params.taps, params.tap_decay)
    p_total = np.full(K, _db(params.p_total_dbm))
    mask_dbm = params.p_total_dbm if params.p_mask_dbm is None else params.p_mask_dbm
    return Scenario(
        gain=gain,
        noise=np.full((K, N), _db(params.noise_dbm)),
        weight=params.weights,
        p_total=p_total,
        p_mask=np.full((K, N), _db(mask_dbm)),
        gamma=_db(params.gamma_db),
        name=f"seed{seed}",
    )
