"""Latent-time log-likelihood for household transmission data.

The observed record for each household fixes who tested positive and
when; the infection times behind those observations are latent. For
member i of an n-person household the cumulative infection hazard is

    Lambda_i(t) = alpha (t - tau_first) + beta w(n) sus_i sum_j F(t - tau_j) inf_j

where F is the CDF of the infectiousness kernel, the sum runs over
infected housemates j with tau_j < t, and the background hazard alpha
(fixed by variant) accrues from the household's first infection time
tau_first. Infected members contribute log lambda_i(tau_i) -
Lambda_i(tau_i), uninfected members -Lambda_i(followup_end),
symptomatic members the log incubation density of onset - tau_i, and
every tau_i pays a soft quadratic penalty for leaving its
[last_negative, first_positive - 1] test window.

The likelihood assumes households entered the study at random: it has
no term for the inclusion mechanism, which is precisely why it goes
wrong on child- or adult-indexed data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ..household import (
    MAX_HOUSEHOLD,
    MISSING_DATE,
    HouseholdPrior,
    StudyDataset,
    VariantConfig,
    get_variant,
)
from ..npe.transforms import household_transform
from ..randkit import RngStream, gamma_cdf, gamma_pdf
from .sampler import run_chains

N_PARAMS = 11
PENALTY_SCALE = 100.0

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class LatentAugmentedState:
    """Unconstrained parameters plus one latent infection time per
    observed-positive member, grouped by household in dataset order.

    u_params follows the model's transform layout: log multipliers
    (5 infectivity, 2 susceptibility, 2 protection), delta, log beta.
    """

    u_params: np.ndarray
    taus: tuple

    def __post_init__(self) -> None:
        u = np.asarray(self.u_params, dtype=np.float64)
        if u.shape != (N_PARAMS,):
            raise ValueError(f"u_params must have shape ({N_PARAMS},), got {u.shape}")
        object.__setattr__(self, "u_params", u)
        object.__setattr__(
            self, "taus",
            tuple(np.asarray(t, dtype=np.float64).ravel() for t in self.taus))

    @property
    def n_latent(self) -> int:
        return int(sum(t.size for t in self.taus))


def _as_variant(variant) -> VariantConfig:
    if isinstance(variant, VariantConfig):
        return variant
    return get_variant(variant)


class HouseholdPosterior:
    """Log posterior over a flat vector [u_params, latent times].

    Households are independent given the parameters, so the sampler's
    latent blocks (one per household with any infection) only pay for
    their own household's terms. Block 0 is the parameter vector.
    """

    def __init__(self, data: StudyDataset, variant=None, *,
                 penalty_scale: float = PENALTY_SCALE,
                 observation_start: float = 0.0,
                 prior: HouseholdPrior | None = None):
        if penalty_scale < 0:
            raise ValueError(f"penalty scale must be >= 0, got {penalty_scale}")
        self.variant = _as_variant(data.variant_name if variant is None else variant)
        self.penalty_scale = float(penalty_scale)
        self.observation_start = float(observation_start)
        self.prior = prior if prior is not None else HouseholdPrior()
        self._lngamma_beta = float(special.gammaln(self.prior.beta_shape))
        self._ingest(data)

    def _ingest(self, data: StudyDataset) -> None:
        recs = data.records
        h = len(recs)
        if h == 0:
            raise ValueError("dataset has no households")
        w = MAX_HOUSEHOLD
        self.n_households = h
        self._valid = np.zeros((h, w), dtype=bool)
        self._age = np.zeros((h, w), dtype=np.int64)
        self._asym = np.ones((h, w), dtype=np.int64)
        self._prot = np.zeros((h, w), dtype=bool)
        self._inf = np.zeros((h, w), dtype=bool)
        self._sym = np.zeros((h, w), dtype=bool)
        self._onset = np.full((h, w), np.nan)
        self._last_neg = np.full((h, w), np.nan)
        self._first_pos = np.full((h, w), np.nan)
        self._fup = np.zeros(h)
        self._size = np.zeros(h)
        self._index_member = np.full(h, -1, dtype=np.int64)

        rows_, cols_ = [], []
        self.latent_slices = []
        start = 0
        for j, r in enumerate(recs):
            m = r.size
            if m > w:
                raise ValueError(f"household {j} has {m} members, limit {w}")
            self._valid[j, :m] = True
            self._age[j, :m] = np.asarray(r.age_group, dtype=np.int64)
            self._prot[j, :m] = np.asarray(r.protected, dtype=bool)
            inf = np.asarray(r.positive, dtype=bool)
            sym = np.asarray(r.symptomatic, dtype=bool)
            self._inf[j, :m] = inf
            self._sym[j, :m] = sym
            self._asym[j, :m] = 1 - sym.astype(np.int64)
            evid = np.asarray(r.onset_or_first_pos, dtype=np.float64)
            self._onset[j, :m] = np.where(sym, evid, np.nan)
            ln = np.asarray(r.last_negative, dtype=np.float64)
            fp = np.asarray(r.first_positive, dtype=np.float64)
            ln = np.where(ln == MISSING_DATE, np.nan, ln)
            fp = np.where(fp == MISSING_DATE, np.nan, fp)
            # a negative AFTER the first positive is a post-recovery
            # test; it bounds nothing, so that window side goes away
            self._last_neg[j, :m] = np.where(ln >= fp, np.nan, ln)
            self._first_pos[j, :m] = fp
            self._fup[j] = float(r.followup_end)
            self._size[j] = float(m)
            cols = np.nonzero(inf)[0]
            if cols.size:
                anchor = np.where(evid[:m][inf] == MISSING_DATE, np.inf, evid[:m][inf])
                self._index_member[j] = cols[int(np.argmin(anchor))]
            rows_.extend([j] * cols.size)
            cols_.extend(cols.tolist())
            self.latent_slices.append(slice(N_PARAMS + start, N_PARAMS + start + cols.size))
            start += cols.size
        self.n_latent = start
        self.dim = N_PARAMS + start
        self._tau_rows = np.asarray(rows_, dtype=np.int64)
        self._tau_cols = np.asarray(cols_, dtype=np.int64)
        # evidence anchor per latent, for data-informed starting points
        evid_pad = np.where(self._sym, self._onset, self._first_pos)
        self._anchors = evid_pad[self._tau_rows, self._tau_cols]
        self._all_rows = np.arange(h)
        self._block_house = [j for j in range(h)
                             if self.latent_slices[j].stop > self.latent_slices[j].start]
        self._house_of_block = np.asarray(self._block_house, dtype=np.int64)

    def blocks(self) -> list:
        out = [np.arange(N_PARAMS)]
        for j in self._block_house:
            s = self.latent_slices[j]
            out.append(np.arange(s.start, s.stop))
        return out

    def default_scales(self) -> np.ndarray:
        return np.array([0.08] + [1.0] * len(self._block_house))

    # -- state packing ------------------------------------------------

    def pack(self, state: LatentAugmentedState) -> np.ndarray:
        if len(state.taus) != self.n_households:
            raise ValueError(f"state has {len(state.taus)} tau groups, "
                             f"dataset has {self.n_households} households")
        x = np.empty(self.dim)
        x[:N_PARAMS] = state.u_params
        for j, t in enumerate(state.taus):
            s = self.latent_slices[j]
            if t.size != s.stop - s.start:
                raise ValueError(f"household {j} needs {s.stop - s.start} latent "
                                 f"times, got {t.size}")
            x[s] = t
        return x

    def unpack(self, x) -> LatentAugmentedState:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"expected flat state of length {self.dim}, got {x.shape}")
        return LatentAugmentedState(
            u_params=x[:N_PARAMS].copy(),
            taus=tuple(x[self.latent_slices[j]].copy() for j in range(self.n_households)))

    # -- log densities ------------------------------------------------

    def log_prior(self, u) -> float:
        """Prior density in unconstrained space, Jacobians included."""
        u = np.asarray(u, dtype=np.float64)
        s_mu = self.prior.mu_log_sd
        s_d = self.prior.delta_sd
        lp = -0.5 * float(np.sum((u[0:9] / s_mu) ** 2)) - 9.0 * (math.log(s_mu) + 0.5 * _LOG_2PI)
        lp += -0.5 * (u[9] / s_d) ** 2 - math.log(s_d) - 0.5 * _LOG_2PI
        a, sc = self.prior.beta_shape, self.prior.beta_scale
        with np.errstate(over="ignore"):
            eb = np.exp(u[10])
        lp += a * u[10] - eb / sc - a * math.log(sc) - self._lngamma_beta
        return float(lp)

    def _row_loglik(self, u: np.ndarray, tau_flat: np.ndarray, rows) -> np.ndarray:
        """Per-household log-likelihood terms for the given rows."""
        mu = np.exp(u[0:9])
        delta = u[9]
        beta = math.exp(u[10])
        inf_table = np.array([[mu[0], mu[1], 1.0], [mu[2], mu[3], mu[4]]])
        sus_table = np.array([mu[5], mu[6], 1.0])
        alpha = self.variant.alpha_background

        tau_pad = np.full((self.n_households, MAX_HOUSEHOLD), np.inf)
        tau_pad[self._tau_rows, self._tau_cols] = tau_flat
        tau = tau_pad[rows]
        valid = self._valid[rows]
        inf = self._inf[rows]
        sym = self._sym[rows]
        fup = self._fup[rows]
        idxm = self._index_member[rows]

        has_inf = idxm >= 0
        tau_index = np.take_along_axis(tau, np.maximum(idxm, 0)[:, None], axis=1)[:, 0]
        tau_first = np.where(has_inf, tau_index, self.observation_start)
        # a secondary case cannot predate its household's first infection
        infeasible = np.any(inf & (tau < tau_first[:, None]), axis=1)

        inf_f = inf_table[self._asym[rows], self._age[rows]]
        inf_f = np.where(self._prot[rows], inf_f * mu[7], inf_f) * inf
        sus_f = sus_table[self._age[rows]]
        sus_f = np.where(self._prot[rows], sus_f * mu[8], sus_f)
        w = (self._size[rows] / 4.0) ** (-delta)

        t_end = np.where(inf, tau, fup[:, None])
        diffs = t_end[:, :, None] - tau[:, None, :]
        load_f = np.einsum("rij,rj->ri", gamma_cdf(diffs, self.variant.kernel), inf_f)
        load_k = np.einsum("rij,rj->ri", gamma_pdf(diffs, self.variant.kernel), inf_f)
        bws = beta * w[:, None] * sus_f
        cum = alpha * (t_end - tau_first[:, None]) + bws * load_f
        out = -np.sum(cum, where=valid, axis=1)
        with np.errstate(divide="ignore"):
            out += np.sum(np.log(alpha + bws * load_k), where=inf, axis=1)
            if np.any(sym):
                dens = gamma_pdf(self._onset[rows] - tau, self.variant.incubation)
                out += np.sum(np.log(dens), where=sym, axis=1)
        if self.penalty_scale > 0.0:
            low = np.clip(self._last_neg[rows] - tau, 0.0, None)
            high = np.clip(tau - (self._first_pos[rows] - 1.0), 0.0, None)
            sq = np.where(np.isnan(low), 0.0, low) ** 2 + np.where(np.isnan(high), 0.0, high) ** 2
            out -= self.penalty_scale * np.sum(sq, where=inf, axis=1)
        return np.where(infeasible, -np.inf, out)

    def loglik(self, x) -> float:
        """Data log-likelihood at a flat state (no prior)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ValueError(f"expected flat state of length {self.dim}, got {x.shape}")
        return float(np.sum(self._row_loglik(x[:N_PARAMS], x[N_PARAMS:], self._all_rows)))

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return self.loglik(x) + self.log_prior(x[:N_PARAMS])

    def block_terms(self, x, block_id: int) -> float:
        x = np.asarray(x, dtype=np.float64)
        if block_id == 0:
            return self(x)
        j = self._block_house[block_id - 1]
        return float(self._row_loglik(x[:N_PARAMS], x[N_PARAMS:],
                                      np.array([j], dtype=np.int64))[0])

    def block_terms_batch(self, x, block_ids) -> np.ndarray:
        """Terms for many latent blocks at once (they are independent
        given the parameters, so one vectorized pass serves them all)."""
        x = np.asarray(x, dtype=np.float64)
        rows = self._house_of_block[np.asarray(block_ids, dtype=np.int64) - 1]
        return self._row_loglik(x[:N_PARAMS], x[N_PARAMS:], rows)

    @property
    def independent_blocks(self) -> range:
        """Latent blocks touch disjoint terms; block 0 (parameters) does not."""
        return range(1, 1 + len(self._block_house))

    # -- starting points ----------------------------------------------

    def init_point(self, rng: RngStream | None = None) -> np.ndarray:
        """Data-informed start: each latent time two days before its
        member's observed anchor (onset, else first positive), nudged
        into the index-first ordering. Optional rng jitters the point
        for overdispersed multi-chain starts."""
        x = np.zeros(self.dim)
        anchors = np.where(np.isfinite(self._anchors), self._anchors, self._fup[self._tau_rows])
        taus = anchors - 2.0
        if rng is not None:
            gen = rng.generator
            x[:N_PARAMS] = 0.4 * gen.standard_normal(N_PARAMS)
            taus = taus + gen.uniform(-0.75, 0.75, size=taus.size)
        taus = np.minimum(taus, anchors - 0.5)
        for j in range(self.n_households):
            s = self.latent_slices[j]
            if s.stop == s.start:
                continue
            t = taus[s.start - N_PARAMS:s.stop - N_PARAMS]
            k = int(np.nonzero(self._tau_cols[s.start - N_PARAMS:s.stop - N_PARAMS]
                               == self._index_member[j])[0][0])
            t[:] = np.maximum(t, t[k])
            x[s] = t
        return x


def household_loglik(state: LatentAugmentedState, data: StudyDataset, variant=None, *,
                     penalty_scale: float = PENALTY_SCALE,
                     observation_start: float = 0.0) -> float:
    """Data log-likelihood of a latent-augmented state; -inf when a
    secondary case's latent time precedes the household's first
    infection (the observed index case's time)."""
    post = HouseholdPosterior(data, variant, penalty_scale=penalty_scale,
                              observation_start=observation_start)
    return post.loglik(post.pack(state))


def posterior_param_draws(data: StudyDataset, n_draws: int, rng: RngStream, *,
                          variant=None, n_chains: int = 4, burn_in: int = 500,
                          thin: int = 1, penalty_scale: float = PENALTY_SCALE,
                          observation_start: float = 0.0, return_chains: bool = False,
                          **mh_kwargs):
    """Posterior draws of the 11 natural parameters for one dataset.

    Runs n_chains adaptive chains from jittered data-informed starts,
    pools the post-burn-in parameter coordinates, thins, and maps back
    to natural space. Latent infection times are integrated out by the
    sampling itself and discarded here.
    """
    if n_draws < 1:
        raise ValueError(f"n_draws must be >= 1, got {n_draws}")
    if thin < 1:
        raise ValueError(f"thin must be >= 1, got {thin}")
    post = HouseholdPosterior(data, variant, penalty_scale=penalty_scale,
                              observation_start=observation_start)
    per_chain = -(-n_draws * thin // n_chains)
    chains = run_chains(post, lambda c, r: post.init_point(r), rng,
                        n_chains=n_chains, draws=per_chain, burn_in=burn_in,
                        blocks=post.blocks(), scales=post.default_scales(),
                        **mh_kwargs)
    u = np.concatenate([c.draws[::thin, :N_PARAMS] for c in chains])[:n_draws]
    theta = household_transform().inverse(u)
    if return_chains:
        return theta, chains
    return theta
