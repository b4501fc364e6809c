"""Splittable random-number streams and the distribution toolkit.

Simulators take an explicit :class:`RngStream` so every dataset can be
generated from a (seed, stream_id) pair: the same pair always replays
the same draw sequence, and distinct stream ids give statistically
independent streams. Streams are backed by the counter-based Philox
generator, whose 128-bit key is formed from the seed and stream id, so
substreams never need coordination.

Conventions fixed here (they are used throughout the simulators):

* geometric draws count failures before the first success, so a delay
  of 0 days is possible;
* poisson draws are plain nonnegative integer counts;
* gamma distributions carry (shape, scale); helpers convert from the
  (mean, coefficient of variation) parameterization used by the priors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    # Finalizer of the splitmix64 generator; bijective on 64-bit ints.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass
class RngStream:
    """A single-owner random stream identified by (seed, stream_id).

    The underlying generator is created lazily and advances across
    calls, so one stream yields a sequence; constructing a fresh
    stream with the same fields replays that sequence from the start.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) <= _MASK64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v}")
            setattr(self, name, int(v))

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            key = np.array([self.seed, self.stream_id], dtype=np.uint64)
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    def child(self, k: int) -> "RngStream":
        """Derived substream for subtask ``k``.

        Children of distinct (stream_id, k) pairs get distinct ids via
        splitmix64 mixing; the construction is deterministic, so the
        substream tree is reproducible from the root pair alone.
        """
        if k < 0:
            raise ValueError(f"substream index must be nonnegative, got {k}")
        mixed = _splitmix64(_splitmix64(self.stream_id) ^ ((k + 1) * 0x9E3779B97F4A7C15 & _MASK64))
        return RngStream(self.seed, mixed)


@dataclass(frozen=True)
class GammaSpec:
    """Gamma distribution with (shape, scale); mean = shape * scale."""

    shape: float
    scale: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.shape) and self.shape > 0):
            raise ValueError(f"shape must be positive, got {self.shape}")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be positive, got {self.scale}")

    @property
    def rate(self) -> float:
        return 1.0 / self.scale

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @classmethod
    def from_shape_rate(cls, shape: float, rate: float) -> "GammaSpec":
        if not (np.isfinite(rate) and rate > 0):
            raise ValueError(f"rate must be positive, got {rate}")
        return cls(shape=shape, scale=1.0 / rate)


def gamma_from_mean_cv(m: float, v: float) -> GammaSpec:
    """Gamma spec with mean ``m`` and coefficient of variation ``v``.

    Parameters
    ----------
    m : float
        Desired mean, positive.
    v : float
        Desired sd/mean ratio, positive. ``v=1`` gives an exponential.

    Returns
    -------
    GammaSpec
        shape = 1/v**2, scale = m*v**2.
    """
    if not (np.isfinite(m) and m > 0):
        raise ValueError(f"mean must be positive, got {m}")
    if not (np.isfinite(v) and v > 0):
        raise ValueError(f"coefficient of variation must be positive, got {v}")
    return GammaSpec(shape=1.0 / v**2, scale=m * v**2)


def sample(dist, rng: RngStream, size=None):
    """Draw from a named distribution.

    Parameters
    ----------
    dist : GammaSpec or tuple
        Either a :class:`GammaSpec`, or a tagged tuple:
        ``("gamma", GammaSpec)``, ``("normal", mu, sigma)``,
        ``("lognormal", logmu, logsigma)``, ``("bernoulli", p)``,
        ``("geometric", p)``, ``("poisson", lam)``,
        ``("uniform", a, b)``.
    rng : RngStream
        Stream to draw from; its state advances.
    size : int or tuple, optional
        None returns a scalar, otherwise an ndarray of draws.

    Notes
    -----
    geometric counts failures before the first success (support
    starting at 0); bernoulli and geometric return integers.
    """
    gen = rng.generator
    if isinstance(dist, GammaSpec):
        dist = ("gamma", dist)
    name, args = dist[0], dist[1:]

    if name == "gamma":
        (spec,) = args
        if not isinstance(spec, GammaSpec):
            spec = GammaSpec(*spec)
        return gen.gamma(spec.shape, spec.scale, size=size)
    if name == "normal":
        mu, sigma = args
        if not (np.isfinite(sigma) and sigma > 0):
            raise ValueError(f"normal sigma must be positive, got {sigma}")
        return gen.normal(mu, sigma, size=size)
    if name == "lognormal":
        logmu, logsigma = args
        if not (np.isfinite(logsigma) and logsigma > 0):
            raise ValueError(f"lognormal logsigma must be positive, got {logsigma}")
        return gen.lognormal(logmu, logsigma, size=size)
    if name == "bernoulli":
        (p,) = args
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"bernoulli p must lie in [0, 1], got {p}")
        if size is None:
            return int(gen.random() < p)
        return (gen.random(size) < p).astype(np.int64)
    if name == "geometric":
        (p,) = args
        if not (0.0 < p <= 1.0):
            raise ValueError(f"geometric p must lie in (0, 1], got {p}")
        # numpy counts trials to first success; shift to failure counts
        draws = gen.geometric(p, size=size) - 1
        return int(draws) if size is None else draws
    if name == "poisson":
        (lam,) = args
        if not (np.isfinite(lam) and lam >= 0.0):
            raise ValueError(f"poisson rate must be nonnegative, got {lam}")
        draws = gen.poisson(lam, size=size)
        return int(draws) if size is None else draws
    if name == "uniform":
        a, b = args
        if not (np.isfinite(a) and np.isfinite(b) and b > a):
            raise ValueError(f"uniform needs b > a, got a={a}, b={b}")
        return gen.uniform(a, b, size=size)
    raise ValueError(f"unknown distribution {name!r}")


def gamma_pdf(x, spec: GammaSpec):
    """Gamma density at ``x``; zero for negative ``x`` by convention."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        logpdf = (
            special.xlogy(spec.shape - 1.0, x)
            - x / spec.scale
            - special.gammaln(spec.shape)
            - spec.shape * np.log(spec.scale)
        )
        out = np.exp(logpdf)
    out = np.where(x < 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def gamma_cdf(x, spec: GammaSpec):
    """Gamma CDF at ``x`` via the regularized lower incomplete gamma.

    Negative ``x`` maps to 0 by convention.
    """
    x = np.asarray(x, dtype=np.float64)
    out = special.gammainc(spec.shape, np.maximum(x, 0.0) / spec.scale)
    out = np.where(x < 0, 0.0, out)
    return float(out) if out.ndim == 0 else out
