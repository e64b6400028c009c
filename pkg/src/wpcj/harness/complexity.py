"""Interior-point operation-count model and an empirical wall-time benchmark."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..errors import ConfigError, WpcjError
from ..model import SystemConfig, sample_channels

SCHEMES = ("SRM", "TPM", "LC-SRM", "LC-TPM")


@dataclass(frozen=True)
class ComplexityModel:
    """Cost ``sqrt(1 + sum k) (n^3 + n^2 sum k^2 + n sum k^3) ln(1/eps)``, times ``i_max``.

    ``k`` lists the constraint dimensions (``J = len(k)``) and ``n_dim`` the
    number of real-valued unknowns.  Use :meth:`for_scheme` to fill them in.
    """

    scheme: str
    epsilon: float = 1e-8
    J: int = 0
    k: tuple[int, ...] = ()
    n_dim: int = 0
    i_max: int = 1

    @classmethod
    def for_scheme(cls, scheme: str, M: int, N: int, epsilon: float = 1e-8,
                   i_max: int = 50) -> "ComplexityModel":
        scheme = scheme.upper()
        if scheme == "SRM":
            # N+4 scalar constraints (the equality counts twice), PSD blocks M and N
            k, n, it = (1,) * (N + 4) + (M, N), M * M + N * N + 1, 1
        elif scheme == "TPM":
            k, n, it = (1,) * (N + 2) + (M, N), M * M + N * N, 1
        elif scheme == "LC-SRM":
            k, n, it = (1,) * (N + 4), M + N + 1, i_max
        elif scheme == "LC-TPM":
            k, n, it = (1,) * (N + 2), M + N, i_max
        else:
            raise ConfigError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        return cls(scheme, epsilon, len(k), k, n, it)

    def cost(self) -> float:
        k = np.asarray(self.k, dtype=float)
        n = float(self.n_dim)
        barrier = math.sqrt(1.0 + k.sum())
        per_iter = n ** 3 + n ** 2 * (k ** 2).sum() + n * (k ** 3).sum()
        return barrier * per_iter * math.log(1.0 / self.epsilon) * self.i_max


def complexity_estimate(model: ComplexityModel, M: int, N: int) -> float:
    """Operation-count proxy of ``model.scheme`` at size ``(M, N)``.

    Only the scheme, ``epsilon`` and ``i_max`` of ``model`` are used; the
    constraint structure is rebuilt for ``(M, N)``.
    """
    if M < 1 or N < 1:
        raise ConfigError("M and N must be positive")
    return ComplexityModel.for_scheme(model.scheme, M, N, model.epsilon, model.i_max).cost()


def printed_closed_form(scheme: str, M: int, N: int, epsilon: float = 1e-8, i_max: int = 50) -> float:
    """The four closed forms exactly as typeset, kept as an independent route.

    For LC-TPM the typeset form has ``sqrt(N+2)`` and ``n2`` inside the bracket.
    The generic count gives ``sqrt(N+3)`` and ``n3`` there, so the two routes
    differ for that scheme only.
    """
    L = math.log(1.0 / epsilon)
    scheme = scheme.upper()
    if scheme == "SRM":
        n0 = M * M + N * N + 1
        return math.sqrt(M + 2 * N + 5) * L * n0 * (n0 ** 2 + n0 * (M * M + N * N + N + 4)
                                                  + M ** 3 + N ** 3 + N + 4)
    if scheme == "TPM":
        n1 = M * M + N * N
        return math.sqrt(M + 2 * N + 3) * L * n1 * (n1 ** 2 + n1 * (M * M + N * N + N + 2)
                                                  + M ** 3 + N ** 3 + N + 2)
    if scheme == "LC-SRM":
        n2 = M + N + 1
        return math.sqrt(N + 5) * L * n2 * (n2 ** 2 + n2 * (N + 4) + N + 4) * i_max
    if scheme == "LC-TPM":
        n2, n3 = M + N + 1, M + N
        return math.sqrt(N + 2) * L * n3 * (n3 ** 2 + n2 * (N + 2) + N + 2) * i_max
    raise ConfigError(f"unknown scheme {scheme!r}")


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares slope of ``log y`` against ``log x`` and its R^2."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if lx.size < 2:
        raise ValueError("need at least two points")
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


@dataclass(frozen=True)
class ScalingResult:
    scheme: str
    n_values: tuple[int, ...]
    seconds: tuple[float, ...]  # median wall time per scheme call
    slope: float
    r2: float
    failures: int = 0  # calls that raised; their wall time still counts


def _default_runner(scheme: str) -> Callable:
    from .experiment import SCHEME_RUNNERS

    run = SCHEME_RUNNERS[scheme.upper()]
    return lambda ch, cfg: run(ch, cfg, {})


def benchmark_scaling(scheme: str, N_values: Sequence[int], M: int = 8, trials: int = 3,
                      base: SystemConfig | None = None, runner: Callable | None = None,
                      seed: int = 0) -> ScalingResult:
    """Median wall time of one scheme call per ``N`` and the fitted log-log slope.

    ``runner(ch, cfg)`` replaces the scheme call (used for harness self-tests).
    """
    N_values = tuple(int(n) for n in N_values)
    if len(N_values) < 3:
        raise ValueError("benchmark_scaling needs at least three N values")
    if trials < 1:
        raise ValueError("trials must be positive")
    base = base or SystemConfig(M=M, N=N_values[0], p_bs_max=10.0, p_harvested=2.5e-3, seed=seed)
    fn = runner or _default_runner(scheme)
    medians, failures = [], 0
    for n in N_values:
        cfg = base.replace(M=M, N=n)
        times = []
        for trial in range(trials):
            ch = sample_channels(cfg, trial)
            t0 = time.perf_counter()
            try:
                fn(ch, cfg)
            except WpcjError:
                failures += 1
            times.append(time.perf_counter() - t0)
        medians.append(float(np.median(times)))
    slope, r2 = loglog_fit(N_values, medians)
    return ScalingResult(scheme.upper(), N_values, tuple(medians), slope, r2, failures)
