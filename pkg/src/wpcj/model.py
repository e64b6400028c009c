"""System model: configuration, channels, designs, rates and power checks.

All powers are in watts and all rates in bits/s/Hz.  Channel vectors follow
the convention ``y = h^H v x + ...``, so the destination SINR of a design
``(v, Q)`` is ``|h_bd^H v|^2 / (h_cd^H Q h_cd + sigma2)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, DimensionError

DEFAULT_RICIAN_K = 3.0

_STREAM_IDS = {"bd": 0, "be": 1, "cd": 2, "ce": 3}


@dataclass(frozen=True)
class SystemConfig:
    M: int
    N: int
    p_bs_max: float
    p_harvested: tuple[float, ...]
    sigma2: float = 1e-5
    gamma_e: float = 0.1
    rs_min: float = 2.0
    rician_k: float = DEFAULT_RICIAN_K
    seed: int = 0

    def __post_init__(self):
        p = self.p_harvested
        if np.isscalar(p):
            p = (float(p),) * int(self.N)
        object.__setattr__(self, "p_harvested", tuple(float(v) for v in p))
        if int(self.M) != self.M or self.M < 1:
            raise ConfigError(f"M must be a positive integer, got {self.M}")
        if int(self.N) != self.N or self.N < 2:
            raise ConfigError(f"N must be an integer >= 2 (two fixed jammers), got {self.N}")
        if len(self.p_harvested) != self.N:
            raise ConfigError(f"p_harvested has {len(self.p_harvested)} entries, expected N={self.N}")
        if not self.p_bs_max > 0 or not self.sigma2 > 0:
            raise ConfigError("p_bs_max and sigma2 must be strictly positive")
        if any(not v > 0 for v in self.p_harvested):
            raise ConfigError("harvested powers must be strictly positive")
        if self.gamma_e < 0 or self.rs_min < 0 or self.rician_k < 0:
            raise ConfigError("gamma_e, rs_min and rician_k must be nonnegative")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError("seed must be an unsigned integer")

    @property
    def p_nodes(self) -> np.ndarray:
        return np.asarray(self.p_harvested, dtype=float)

    def replace(self, **changes) -> "SystemConfig":
        """Copy with fields replaced; resizes ``p_harvested`` when only N changes."""
        if "N" in changes and "p_harvested" not in changes:
            p = self.p_harvested
            n = changes["N"]
            changes["p_harvested"] = tuple(p[:n]) + (p[-1],) * max(0, n - len(p))
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ChannelSet:
    h_bd: np.ndarray
    h_be: np.ndarray
    h_cd: np.ndarray
    h_ce: np.ndarray

    def __post_init__(self):
        for name in ("h_bd", "h_be", "h_cd", "h_ce"):
            arr = np.array(getattr(self, name), dtype=complex).ravel()
            if not np.all(np.isfinite(arr)):
                raise DimensionError(f"{name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.h_bd.size != self.h_be.size:
            raise DimensionError("h_bd and h_be must have the same length M")
        if self.h_cd.size != self.h_ce.size:
            raise DimensionError("h_cd and h_ce must have the same length N")

    @property
    def M(self) -> int:
        return self.h_bd.size

    @property
    def N(self) -> int:
        return self.h_cd.size

    def check(self, cfg: SystemConfig) -> None:
        if self.M != cfg.M or self.N != cfg.N:
            raise DimensionError(f"channels are M={self.M}, N={self.N}; config is M={cfg.M}, N={cfg.N}")

    # rank-one Gram matrices
    @property
    def H_bd(self) -> np.ndarray:
        return np.outer(self.h_bd, self.h_bd.conj())

    @property
    def H_be(self) -> np.ndarray:
        return np.outer(self.h_be, self.h_be.conj())

    @property
    def H_cd(self) -> np.ndarray:
        return np.outer(self.h_cd, self.h_cd.conj())

    @property
    def H_ce(self) -> np.ndarray:
        return np.outer(self.h_ce, self.h_ce.conj())

    def resized(self, M: int, N: int) -> "ChannelSet":
        """Truncate to ``(M, N)``; extending requires a fresh draw (see ``sample_channels``)."""
        if M > self.M or N > self.N:
            raise DimensionError("cannot extend a ChannelSet; resample instead")
        return ChannelSet(self.h_bd[:M], self.h_be[:M], self.h_cd[:N], self.h_ce[:N])

    def to_dict(self) -> dict:
        return {k: [[z.real, z.imag] for z in getattr(self, k)] for k in ("h_bd", "h_be", "h_cd", "h_ce")}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSet":
        return cls(**{k: np.array([complex(a, b) for a, b in d[k]]) for k in ("h_bd", "h_be", "h_cd", "h_ce")})


@dataclass(frozen=True)
class TransmitDesign:
    v: np.ndarray
    q_cov: np.ndarray
    q_vec: np.ndarray | None = field(default=None)

    def __post_init__(self):
        v = np.array(self.v, dtype=complex).ravel()
        Q = np.array(self.q_cov, dtype=complex)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionError(f"q_cov must be square, got shape {Q.shape}")
        if not np.allclose(Q, Q.conj().T, rtol=0.0, atol=1e-10):
            raise DimensionError("q_cov is not Hermitian")
        Q = 0.5 * (Q + Q.conj().T)
        w = np.linalg.eigvalsh(Q)
        if w[0] < -1e-9 * max(w[-1], 0.0) - 1e-300:
            raise DimensionError(f"q_cov is not PSD (min eigenvalue {w[0]:.3e})")
        if self.q_vec is not None:
            q = np.array(self.q_vec, dtype=complex).ravel()
            if q.size != Q.shape[0]:
                raise DimensionError("q_vec length does not match q_cov")
            if np.linalg.norm(Q - np.outer(q, q.conj())) > 1e-8 * (1 + np.linalg.norm(Q)):
                raise DimensionError("q_cov is not q_vec q_vec^H")
            q.setflags(write=False)
            object.__setattr__(self, "q_vec", q)
        v.setflags(write=False)
        Q.setflags(write=False)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "q_cov", Q)

    @classmethod
    def from_weights(cls, v, q) -> "TransmitDesign":
        q = np.asarray(q, dtype=complex).ravel()
        return cls(v, np.outer(q, q.conj()), q)

    @property
    def bs_power(self) -> float:
        return float(np.vdot(self.v, self.v).real)


class Rates(NamedTuple):
    r_d: float
    r_e: float
    r_s: float
    sinr_d: float
    sinr_e: float


@dataclass(frozen=True)
class FeasibilityReport:
    bs_power_ok: bool
    node_power_ok: bool
    psd_ok: bool
    bs_violation: float
    node_violations: tuple[float, ...]
    psd_violation: float
    tol: float

    @property
    def feasible(self) -> bool:
        return self.bs_power_ok and self.node_power_ok and self.psd_ok

    @property
    def worst_node_violation(self) -> float:
        return max(self.node_violations, default=0.0)

    @property
    def worst_violation(self) -> float:
        return max(self.bs_violation, self.worst_node_violation, self.psd_violation)


def _crandn(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, 2))
    return (z[:, 0] + 1j * z[:, 1]) / np.sqrt(2.0)


def _stream(seed: int, trial_index: int, kind: str) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial_index), _STREAM_IDS[kind]))
    return np.random.default_rng(ss)


def _rician_prefix(seed, trial_index, kind, n, k_factor):
    # (sqrt(K) e^{j phi} + CN(0,1)) / sqrt(1+K); separate phase and scatter
    # streams keep entry i identical for every length >= i+1
    rng = _stream(seed, trial_index, kind)
    phase_rng, scatter_rng = rng.spawn(2)
    phi = phase_rng.uniform(0.0, 2.0 * np.pi, size=n)
    scatter = _crandn(scatter_rng, n)
    return (np.sqrt(k_factor) * np.exp(1j * phi) + scatter) / np.sqrt(1.0 + k_factor)


def sample_channels(config: SystemConfig, trial_index: int) -> ChannelSet:
    """Draw the channels of one Monte-Carlo trial.

    BS links are Rician (K = ``config.rician_k``), in-vehicle jammer links are
    Rayleigh, all with unit average power.  Entry ``i`` of every vector depends
    only on ``(seed, trial_index, i)``, so draws for different ``M`` or ``N``
    are prefixes of one another.
    """
    s, t = config.seed, trial_index
    return ChannelSet(
        h_bd=_rician_prefix(s, t, "bd", config.M, config.rician_k),
        h_be=_rician_prefix(s, t, "be", config.M, config.rician_k),
        h_cd=_crandn(_stream(s, t, "cd"), config.N),
        h_ce=_crandn(_stream(s, t, "ce"), config.N),
    )


def sinr(h: np.ndarray, g: np.ndarray, v: np.ndarray, Q: np.ndarray, sigma2: float) -> float:
    signal = abs(np.vdot(h, v)) ** 2
    interference = float(np.real(np.vdot(g, Q @ g)))
    return float(signal / (interference + sigma2))


def rates(design: TransmitDesign, ch: ChannelSet, sigma2: float) -> Rates:
    """Destination/eavesdropper rates and the (unclamped) secrecy rate."""
    if design.v.size != ch.M or design.q_cov.shape[0] != ch.N:
        raise DimensionError(
            f"design is (M={design.v.size}, N={design.q_cov.shape[0]}), channels are (M={ch.M}, N={ch.N})")
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    sd = sinr(ch.h_bd, ch.h_cd, design.v, design.q_cov, sigma2)
    se = sinr(ch.h_be, ch.h_ce, design.v, design.q_cov, sigma2)
    rd, re = float(np.log2(1.0 + sd)), float(np.log2(1.0 + se))
    return Rates(rd, re, rd - re, sd, se)


def check_feasibility(design: TransmitDesign, config: SystemConfig) -> FeasibilityReport:
    if design.v.size != config.M or design.q_cov.shape[0] != config.N:
        raise DimensionError("design dimensions do not match the configuration")
    tol = 1e-7 * max(1.0, config.p_bs_max)
    bs_excess = max(0.0, design.bs_power - config.p_bs_max)
    diag = np.real(np.diag(design.q_cov))
    node_excess = tuple(float(max(0.0, d - p)) for d, p in zip(diag, config.p_nodes))
    min_eig = float(np.linalg.eigvalsh(design.q_cov)[0])
    psd_excess = max(0.0, -min_eig)
    return FeasibilityReport(
        bs_power_ok=bs_excess <= tol,
        node_power_ok=all(e <= tol for e in node_excess),
        psd_ok=psd_excess <= tol,
        bs_violation=bs_excess,
        node_violations=node_excess,
        psd_violation=psd_excess,
        tol=tol,
    )


def gamma_d_from(rs_min: float, gamma_e: float) -> float:
    """Destination SINR target giving secrecy rate ``rs_min`` at eavesdropper SINR ``gamma_e``."""
    if rs_min < 0 or gamma_e < 0:
        raise ValueError("rs_min and gamma_e must be nonnegative")
    return 2.0 ** rs_min * (1.0 + gamma_e) - 1.0
