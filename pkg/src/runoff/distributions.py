"""Random sampling and closed-form moments for the allocation hierarchy.

Streams are value types: the draw sequence is fully determined by the
(seed, stream_id) pair, so samplers stay pure and safe to call from any
thread. Gamma parameters are shape and rate throughout; Gamma(k, k/m)
therefore has mean m.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(x: int) -> int:
    """One splitmix64 round: a full-avalanche permutation of 64-bit ints."""
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


@dataclass(frozen=True)
class RngStream:
    """Splittable random stream identified by (seed, stream_id).

    Child streams are derived by folding integer indices through
    splitmix64, so structured keys such as (replication, accident year)
    map to well-separated stream ids no matter how the work is
    scheduled. Folding is sequential: ``derive(a, b)`` equals
    ``derive(a).derive(b)``.
    """

    seed: int
    stream_id: int = 0

    def derive(self, *indices: int) -> RngStream:
        sid = self.stream_id & _MASK64
        for ix in indices:
            sid = _splitmix64(sid ^ _splitmix64(ix & _MASK64))
        return RngStream(self.seed, sid)

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence((self.seed & _MASK64, self.stream_id & _MASK64))
        )


def _gen(rng: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


class BetaMoments(NamedTuple):
    mu2: float
    mu3: float
    mu4_minus_mu2sq: float


class BetaPrimeMoments(NamedTuple):
    mean: float | None
    variance: float | None


def beta_central_moments(pi: float, c: float) -> BetaMoments:
    """Central moments of Beta(c*pi, c*(1-pi)).

    Returns the variance, the third central moment, and the fourth
    central moment minus the squared variance. The fourth-moment term
    comes from the standard Beta excess-kurtosis identity,

        mu4 - mu2^2 = 2u [u (c^2 - 10c - 12) + 3(c + 1)]
                      / ((c+1)^2 (c+2) (c+3)),   u = pi (1 - pi),

    which reduces to 1/180 in the uniform case (pi = 1/2, c = 2).
    """
    if not 0.0 < pi < 1.0:
        raise ValueError(f"pi must lie in (0, 1), got {pi}")
    if c <= 0.0:
        raise ValueError(f"c must be positive, got {c}")
    u = pi * (1.0 - pi)
    mu2 = u / (c + 1.0)
    mu3 = 2.0 * u * (1.0 - 2.0 * pi) / ((c + 1.0) * (c + 2.0))
    mu4_m = (
        2.0
        * u
        * (u * (c * c - 10.0 * c - 12.0) + 3.0 * (c + 1.0))
        / ((c + 1.0) ** 2 * (c + 2.0) * (c + 3.0))
    )
    return BetaMoments(mu2, mu3, mu4_m)


def beta_prime_moments(c: float, F: float) -> BetaPrimeMoments:
    """Moments of (1-W)/W for W ~ Beta(c*F, c*(1-F)).

    The mean c(1-F)/(cF-1) exists only for cF > 1 and the variance
    c(1-F)(c-1)/((cF-1)^2 (cF-2)) only for cF > 2; entries outside
    their existence region are returned as None rather than raised,
    because the distribution itself is proper.
    """
    if c <= 0.0:
        raise ValueError(f"c must be positive, got {c}")
    if not 0.0 < F < 1.0:
        raise ValueError(f"F must lie in (0, 1), got {F}")
    a = c * F
    mean = c * (1.0 - F) / (a - 1.0) if a > 1.0 else None
    variance = (
        c * (1.0 - F) * (c - 1.0) / ((a - 1.0) ** 2 * (a - 2.0)) if a > 2.0 else None
    )
    return BetaPrimeMoments(mean, variance)


def sample_gamma(
    shape: float | np.ndarray,
    rate: float | np.ndarray,
    rng: RngStream | np.random.Generator,
    n: int | None = None,
) -> np.ndarray:
    shape = np.asarray(shape, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(shape <= 0.0) or np.any(rate <= 0.0):
        raise ValueError("gamma shape and rate must be positive")
    size = n if n is not None else (shape.shape if shape.shape else None)
    return _gen(rng).gamma(shape=shape, scale=1.0 / rate, size=size)


def sample_beta(
    a: float | np.ndarray,
    b: float | np.ndarray,
    rng: RngStream | np.random.Generator,
    n: int | None = None,
) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a <= 0.0) or np.any(b <= 0.0):
        raise ValueError("beta parameters must be positive")
    return _gen(rng).beta(a, b, size=n)


def sample_dirichlet(
    alpha: np.ndarray,
    rng: RngStream | np.random.Generator,
    n: int | None = None,
) -> np.ndarray:
    """Draw from Dirichlet(alpha); rows sum to one and stay strictly inside
    the simplex up to float rounding."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 1 or alpha.size < 2:
        raise ValueError("alpha must be a vector of length >= 2")
    if np.any(alpha <= 0.0):
        raise ValueError("dirichlet parameters must be positive")
    return _gen(rng).dirichlet(alpha, size=n)


def sample_poisson(
    mean: float | np.ndarray,
    rng: RngStream | np.random.Generator,
    n: int | None = None,
) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    if np.any(mean < 0.0) or not np.all(np.isfinite(mean)):
        raise ValueError("poisson mean must be finite and non-negative")
    size = n if n is not None else (mean.shape if mean.shape else None)
    return _gen(rng).poisson(lam=mean, size=size)


def sample_negbin(
    r: float,
    p: float,
    rng: RngStream | np.random.Generator,
    n: int | None = None,
) -> np.ndarray:
    """Negative Binomial draws with real-valued shape r.

    Sampled through the Gamma-Poisson mixture so r need not be an
    integer: lambda ~ Gamma(r, rate p/(1-p)), N ~ Poisson(lambda) has
    mean r(1-p)/p. Degenerate edges r = 0 and p = 1 return zeros.
    """
    if r < 0.0:
        raise ValueError(f"negbin shape must be non-negative, got {r}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"negbin probability must lie in (0, 1], got {p}")
    g = _gen(rng)
    size = n if n is not None else 1
    if r == 0.0 or p == 1.0:
        out = np.zeros(size, dtype=np.int64)
    else:
        lam = g.gamma(shape=r, scale=(1.0 - p) / p, size=size)
        out = g.poisson(lam=lam)
    return out if n is not None else out[0]


def sample_multinomial(
    n_trials: int,
    pvals: np.ndarray,
    rng: RngStream | np.random.Generator,
    n: int | None = None,
) -> np.ndarray:
    pvals = np.asarray(pvals, dtype=float)
    if n_trials < 0:
        raise ValueError("number of trials must be non-negative")
    if np.any(pvals < 0.0) or abs(pvals.sum() - 1.0) > 1e-9:
        raise ValueError("pvals must be non-negative and sum to one")
    return _gen(rng).multinomial(n_trials, pvals, size=n)


def _tweedie_params(nu: np.ndarray, phi: float, p: float):
    lam = nu ** (2.0 - p) / (phi * (2.0 - p))
    alpha = (2.0 - p) / (p - 1.0)
    scale = phi * (p - 1.0) * nu ** (p - 1.0)
    return lam, alpha, scale


def sample_tweedie(
    nu: np.ndarray,
    phi: float,
    p: float,
    rng: RngStream | np.random.Generator,
) -> np.ndarray:
    """Compound Poisson-Gamma draws with mean nu and variance phi * nu^p.

    Each entry draws N ~ Poisson(nu^(2-p) / (phi (2-p))) claims and sums
    N Gamma(shape (2-p)/(p-1), scale phi (p-1) nu^(p-1)) severities;
    N = 0 (and nu = 0) yield an exact zero.
    """
    if not 1.0 < p < 2.0:
        raise ValueError(f"tweedie power must lie in (1, 2), got {p}")
    if phi <= 0.0:
        raise ValueError(f"dispersion must be positive, got {phi}")
    nu = np.asarray(nu, dtype=float)
    if np.any(nu < 0.0):
        raise ValueError("tweedie mean must be non-negative")
    g = _gen(rng)
    lam, alpha, scale = _tweedie_params(nu, phi, p)
    claims = g.poisson(lam=lam)
    # Gamma with shape 0 is an exact point mass at 0, so zero-claim cells
    # need no special casing.
    return g.gamma(shape=claims * alpha, scale=scale)


def sample_tweedie_cell(
    nu: float,
    phi: float,
    p: float,
    rng: RngStream | np.random.Generator,
) -> float:
    return float(sample_tweedie(np.asarray([nu]), phi, p, rng)[0])
