import dataclasses

import numpy as np
import pytest

from selbi.errors import ConfigError, DataError, InsufficientSampleError
from selbi.household import (
    ADULT,
    CHILD,
    DATE_SHIFT,
    FOLLOW_UP_OFFSETS,
    HORIZON_DAYS,
    INFANT,
    MAX_HOUSEHOLD,
    PARAM_NAMES,
    SCHEMES,
    HouseholdParams,
    HouseholdPrior,
    HouseholdRecord,
    HouseholdState,
    Roster,
    StudyDataset,
    age_band,
    alpha_variant,
    decode_dataset,
    encode_dataset,
    first_positive_fraction_under_18,
    generate_rosters,
    get_variant,
    infection_hazard,
    omicron_variant,
    read_dataset,
    select_study,
    simulate_raw_batch,
    simulate_study,
    step_day,
    testing_process,
    write_dataset,
)
from selbi.randkit import RngStream, gamma_pdf


def flat_params(beta=1.0, delta=0.0, **kw):
    """All multipliers 1 unless overridden."""
    base = dict(
        beta=beta,
        delta=delta,
        mu_inf=np.ones(5),
        mu_sus=np.ones(2),
        mu_pro=np.ones(2),
    )
    base.update(kw)
    return HouseholdParams(**base)


def two_adult_state(tau0=None, sym0=False, onset0=np.inf, day=0, size=2):
    """Household of unprotected adults; member 0 optionally infected."""
    tau = np.full(size, np.inf)
    sym = np.zeros(size, dtype=bool)
    onset = np.full(size, np.inf)
    if tau0 is not None:
        tau[0] = tau0
        sym[0] = sym0
        onset[0] = onset0
    return HouseholdState(
        day=day,
        age_years=np.full(size, 40.0),
        protected=np.zeros(size, dtype=np.int64),
        tau=tau,
        symptomatic=sym,
        onset=onset,
    )


class TestVariantConfig:
    def test_alpha_constants(self):
        v = alpha_variant()
        assert v.kernel.shape == pytest.approx(2.0)
        assert v.kernel.rate == pytest.approx(0.44)
        assert v.asym_prob == pytest.approx(0.4)
        assert v.background_test_daily_prob == pytest.approx(1 / 21)
        assert v.inclusion_delay_mean == pytest.approx(4.8)
        assert v.alpha_background == pytest.approx(0.001)
        assert v.target_n == 128
        # incubation parameterized by mean and sd
        inc_mean = v.incubation.shape * v.incubation.scale
        inc_var = v.incubation.shape * v.incubation.scale**2
        assert inc_mean == pytest.approx(4.42)
        assert np.sqrt(inc_var) == pytest.approx(2.30)

    def test_omicron_constants(self):
        v = omicron_variant()
        assert v.kernel.shape == pytest.approx(3.351)
        assert v.kernel.rate == pytest.approx(1.1098)
        assert v.asym_prob == pytest.approx(0.3)
        assert v.background_test_daily_prob == pytest.approx(1 / 14)
        assert v.target_n == 54
        inc_mean = v.incubation.shape * v.incubation.scale
        assert inc_mean == pytest.approx(3.09)

    def test_triggered_miss_table(self):
        a, o = alpha_variant(), omicron_variant()
        assert a.miss_prob(2) == 0.0
        assert a.miss_prob(3) == pytest.approx(0.10)
        assert a.miss_prob(7) == pytest.approx(0.71)
        assert o.miss_prob(3) == pytest.approx(0.40)
        assert o.miss_prob(8) == pytest.approx(0.13)

    def test_size_eight_unsupported_for_alpha(self):
        with pytest.raises(ConfigError):
            alpha_variant().miss_prob(8)

    def test_unknown_variant(self):
        with pytest.raises(ConfigError):
            get_variant("delta")

    def test_variant_lookup(self):
        assert get_variant("alpha").name == "alpha"
        assert get_variant("omicron").name == "omicron"


class TestParams:
    def test_vector_round_trip(self):
        rng = np.random.default_rng(3)
        v = np.abs(rng.normal(1.0, 0.3, size=11))
        p = HouseholdParams.from_vector(v)
        np.testing.assert_allclose(p.to_vector(), v)
        assert len(PARAM_NAMES) == 11

    def test_reference_household_weight_is_one(self):
        # w(4) = 1 exactly, whatever delta is
        rng = np.random.default_rng(0)
        for _ in range(25):
            p = flat_params(delta=float(rng.normal()))
            assert p.size_weight(4) == 1.0

    def test_size_weight_direction(self):
        p = flat_params(delta=0.7)
        assert p.size_weight(8) < 1.0 < p.size_weight(2)
        q = flat_params(delta=-0.7)
        assert q.size_weight(8) > 1.0 > q.size_weight(2)

    def test_validation(self):
        with pytest.raises(ValueError):
            flat_params(beta=0.0)
        with pytest.raises(ValueError):
            flat_params(beta=-1.0)
        with pytest.raises(ValueError):
            flat_params(mu_inf=np.ones(4))
        with pytest.raises(ValueError):
            flat_params(mu_sus=np.array([1.0, -0.2]))
        with pytest.raises(ValueError):
            HouseholdParams.from_vector(np.ones(10))

    def test_infectivity_table_layout(self):
        p = flat_params(mu_inf=np.array([0.2, 0.3, 0.4, 0.5, 0.6]))
        table = p.infectivity_table()
        # symptomatic adult is the reference
        assert table[0, ADULT] == 1.0
        assert table[0, INFANT] == pytest.approx(0.2)
        assert table[0, CHILD] == pytest.approx(0.3)
        assert table[1, INFANT] == pytest.approx(0.4)
        assert table[1, CHILD] == pytest.approx(0.5)
        assert table[1, ADULT] == pytest.approx(0.6)

    def test_age_band_edges(self):
        bands = age_band([0.0, 5.9, 6.0, 11.9, 12.0, 17.9, 40.0])
        np.testing.assert_array_equal(bands, [0, 0, 1, 1, 2, 2, 2])


class TestPrior:
    def test_moments(self):
        rng = RngStream(11, 0)
        draws = np.array([HouseholdPrior().sample(rng.child(i)).to_vector()
                          for i in range(4000)])
        betas = draws[:, 10]
        # Gamma(2, 0.5): mean 1, var 0.5
        assert abs(betas.mean() - 1.0) < 3 * betas.std() / np.sqrt(betas.size)
        deltas = draws[:, 9]
        assert abs(deltas.mean()) < 3 / np.sqrt(deltas.size)
        # multipliers: log is N(0, 0.7^2)
        logs = np.log(draws[:, :9]).ravel()
        assert abs(logs.mean()) < 3 * 0.7 / np.sqrt(logs.size)
        assert abs(logs.std() - 0.7) < 0.02

    def test_positive(self):
        p = HouseholdPrior().sample(RngStream(0, 5))
        assert p.beta > 0
        assert np.all(p.mu_inf > 0)


class TestInfectionHazard:
    def test_kernel_mode_closed_form(self):
        # one symptomatic unprotected adult infector in a size-4
        # household of adults: lam = alpha + beta * k(dt). At the
        # kernel mode dt = (shape-1)/rate the density is rate/e for
        # shape 2, so lam = alpha + beta * 0.44 / e.
        v = alpha_variant()
        mode = (v.kernel.shape - 1.0) * v.kernel.scale
        assert mode == pytest.approx(2.0 / 0.88)
        state = two_adult_state(tau0=0.0, sym0=True, onset0=3.0, size=4)
        p = flat_params(beta=0.8)
        lam = infection_hazard(1, mode, state, p, v)
        expected = v.alpha_background + 0.8 * 0.44 * np.exp(-1.0)
        assert lam == pytest.approx(expected, rel=1e-12)

    def test_multiplier_composition(self):
        v = omicron_variant()
        p = HouseholdParams(
            beta=0.5,
            delta=0.4,
            mu_inf=np.array([0.3, 0.4, 0.5, 0.6, 0.7]),
            mu_sus=np.array([0.8, 0.9]),
            mu_pro=np.array([0.25, 0.5]),
        )
        # infector: protected asymptomatic child (band 1), infected at 2
        # susceptible: protected infant (band 0)
        state = HouseholdState(
            day=0,
            age_years=np.array([9.0, 3.0, 40.0]),
            protected=np.array([1, 1, 0]),
            tau=np.array([2.0, np.inf, np.inf]),
            symptomatic=np.array([False, False, False]),
            onset=np.full(3, np.inf),
        )
        t = 6.0
        w = (3.0 / 4.0) ** (-0.4)
        load = gamma_pdf(t - 2.0, v.kernel) * 0.6 * 0.25
        expected = v.alpha_background + 0.5 * w * (0.8 * 0.5) * load
        assert infection_hazard(1, t, state, p, v) == pytest.approx(expected, rel=1e-12)
        # the unprotected adult susceptible drops the sus-side factors
        expected_adult = v.alpha_background + 0.5 * w * load
        assert infection_hazard(2, t, state, p, v) == pytest.approx(expected_adult, rel=1e-12)

    def test_two_infectors_add(self):
        v = alpha_variant()
        state = HouseholdState(
            day=0,
            age_years=np.array([40.0, 40.0, 40.0]),
            protected=np.zeros(3, dtype=np.int64),
            tau=np.array([0.0, 4.0, np.inf]),
            symptomatic=np.array([True, True, False]),
            onset=np.array([2.0, 6.0, np.inf]),
        )
        p = flat_params(beta=1.2)
        t = 9.0
        w = (3.0 / 4.0) ** 0.0
        load = gamma_pdf(9.0, v.kernel) + gamma_pdf(5.0, v.kernel)
        assert infection_hazard(2, t, state, p, v) == pytest.approx(
            v.alpha_background + 1.2 * w * load, rel=1e-12
        )

    def test_no_infectors_background_only(self):
        v = alpha_variant()
        lam = infection_hazard(0, 10.0, two_adult_state(), flat_params(), v)
        assert lam == pytest.approx(v.alpha_background)

    def test_future_infection_not_active(self):
        # tau = t is not yet infectious (strict inequality)
        v = alpha_variant()
        state = two_adult_state(tau0=5.0, sym0=True, onset0=7.0)
        lam = infection_hazard(1, 5.0, state, flat_params(), v)
        assert lam == pytest.approx(v.alpha_background)

    def test_preconditions(self):
        state = two_adult_state(tau0=1.0, sym0=True, onset0=2.0)
        with pytest.raises(ValueError):
            infection_hazard(0, 5.0, state, flat_params(), alpha_variant())
        with pytest.raises(ValueError):
            infection_hazard(7, 5.0, state, flat_params(), alpha_variant())

    def test_member_permutation_equivariance(self):
        v = omicron_variant()
        p = HouseholdPrior().sample(RngStream(21, 4))
        rng = np.random.default_rng(8)
        state = HouseholdState(
            day=0,
            age_years=np.array([3.0, 9.0, 35.0, 70.0, 15.0]),
            protected=np.array([0, 1, 0, 1, 0]),
            tau=np.array([np.inf, 1.0, np.inf, 3.0, np.inf]),
            symptomatic=np.array([False, True, False, False, False]),
            onset=np.array([np.inf, 4.0, np.inf, np.inf, np.inf]),
        )
        perm = rng.permutation(5)
        permuted = HouseholdState(
            day=0,
            age_years=state.age_years[perm],
            protected=state.protected[perm],
            tau=state.tau[perm],
            symptomatic=state.symptomatic[perm],
            onset=state.onset[perm],
        )
        t = 7.5
        for new_i, old_i in enumerate(perm):
            if state.tau[old_i] < t:
                continue
            a = infection_hazard(int(old_i), t, state, p, v)
            b = infection_hazard(new_i, t, permuted, p, v)
            assert a == pytest.approx(b, rel=1e-14)


class TestStepDay:
    def test_day_advances_and_infected_persist(self):
        v = alpha_variant()
        state = two_adult_state(tau0=0.0, sym0=True, onset0=2.0, day=3)
        nxt = step_day(state, flat_params(), v, RngStream(0, 9))
        assert nxt.day == 4
        assert nxt.tau[0] == 0.0
        assert nxt.symptomatic[0]

    def test_certain_infection_with_large_beta(self):
        v = alpha_variant()
        state = two_adult_state(tau0=0.0, sym0=True, onset0=1.0, day=2, size=4)
        nxt = step_day(state, flat_params(beta=1e6), v, RngStream(1, 9))
        assert np.all(np.isfinite(nxt.tau))
        np.testing.assert_array_equal(nxt.tau[1:], 2.0)
        # symptom onsets of the new cases, if any, are after infection
        for i in range(1, 4):
            if nxt.symptomatic[i]:
                assert nxt.onset[i] > 2.0

    def test_geometric_time_to_first_infection(self):
        # beta ~ 0 makes the hazard a constant alpha, so the infection
        # day is geometric with p = 1 - exp(-alpha), truncated at the
        # horizon
        alpha = 0.05
        v = dataclasses.replace(alpha_variant(), alpha_background=alpha)
        roster = Roster(age_years=np.array([40.0, 40.0]), protected=np.zeros(2, dtype=np.int64))
        raw = simulate_raw_batch([roster], flat_params(beta=1e-14), v,
                                 RngStream(31, 2), horizon=120, replicates=3000)
        tau = raw.tau[raw.valid]
        p = 1.0 - np.exp(-alpha)
        k = np.arange(120)
        pmf = p * (1.0 - p) ** k
        p_never = (1.0 - p) ** 120
        # censored-at-horizon mean oracle
        frac_never = np.mean(~np.isfinite(tau))
        se_never = np.sqrt(p_never * (1 - p_never) / tau.size)
        assert abs(frac_never - p_never) < 3 * se_never
        obs = tau[np.isfinite(tau)]
        mean_trunc = (pmf * k).sum() / (1.0 - p_never)
        se = obs.std(ddof=1) / np.sqrt(obs.size)
        assert abs(obs.mean() - mean_trunc) < 3 * se

    def test_symptomatic_fraction(self):
        v = dataclasses.replace(alpha_variant(), alpha_background=0.2)
        roster = Roster(age_years=np.array([40.0, 40.0]), protected=np.zeros(2, dtype=np.int64))
        raw = simulate_raw_batch([roster], flat_params(beta=1e-14), v,
                                 RngStream(32, 2), horizon=60, replicates=2000)
        infected = raw.valid & np.isfinite(raw.tau)
        frac_sym = raw.symptomatic[infected].mean()
        n = infected.sum()
        se = np.sqrt(0.6 * 0.4 / n)
        assert abs(frac_sym - 0.6) < 3 * se


def _instant_test_variant(**overrides):
    """Deterministic testing: no background, zero delays, no misses."""
    base = dict(
        name="alpha",
        kernel=alpha_variant().kernel,
        asym_prob=0.4,
        incubation=alpha_variant().incubation,
        trigger_delay_p=1.0,
        background_test_daily_prob=0.0,
        inclusion_delay_mean=0.0,
        alpha_background=0.001,
        target_n=4,
        miss_prob_by_size={2: 0.0, 3: 0.0, 4: 0.0, 5: 0.0, 6: 0.0, 7: 0.0},
        sym_test_delay_p=1.0,
    )
    base.update(overrides)
    return dataclasses.replace(alpha_variant(), **{k: v for k, v in base.items() if k != "name"})


class TestTestingProcess:
    def test_symptomatic_positive_triggers_household(self):
        v = _instant_test_variant()
        state = two_adult_state(tau0=10.0, sym0=True, onset0=11.0)
        log = testing_process(state, v, RngStream(2, 7))
        np.testing.assert_array_equal(log.days[0], [11.0])
        assert log.positive[0].tolist() == [True]
        # size-2 households are never missed, zero trigger delay
        np.testing.assert_array_equal(log.days[1], [11.0])
        assert log.positive[1].tolist() == [False]

    def test_certain_miss_blocks_triggered_tests(self):
        v = _instant_test_variant(miss_prob_by_size={2: 1.0})
        state = two_adult_state(tau0=10.0, sym0=True, onset0=11.0)
        log = testing_process(state, v, RngStream(2, 7))
        assert log.days[0].size == 1
        assert log.days[1].size == 0

    def test_negative_symptomatic_test_does_not_trigger(self):
        # onset far outside the positive window: own test is negative
        v = _instant_test_variant()
        state = two_adult_state(tau0=10.0, sym0=True, onset0=40.0)
        log = testing_process(state, v, RngStream(3, 7))
        assert log.positive[0].tolist() == [False]
        assert log.days[1].size == 0

    def test_positive_window_bounds(self):
        # background tests every day: positives exactly on tau+1..tau+15
        v = _instant_test_variant(background_test_daily_prob=1.0,
                                  sym_test_delay_p=1.0)
        tau0 = 20.0
        state = two_adult_state(tau0=tau0, sym0=False)
        log = testing_process(state, v, RngStream(4, 7))
        days = log.days[0]
        pos_days = days[log.positive[0]]
        expected = np.arange(tau0 + 1, tau0 + 16)
        np.testing.assert_array_equal(pos_days, expected)
        # the uninfected member never tests positive
        assert not log.positive[1].any()

    def test_uninfected_household_all_negative(self):
        v = _instant_test_variant(background_test_daily_prob=0.3)
        log = testing_process(two_adult_state(), v, RngStream(5, 7))
        assert not log.positive[0].any()
        assert not log.positive[1].any()
        assert log.days[0].size > 10  # background testing did run

    def test_unsupported_size_rejected(self):
        state = HouseholdState(
            day=0,
            age_years=np.full(8, 30.0),
            protected=np.zeros(8, dtype=np.int64),
            tau=np.full(8, np.inf),
            symptomatic=np.zeros(8, dtype=bool),
            onset=np.full(8, np.inf),
        )
        with pytest.raises(ConfigError):
            testing_process(state, alpha_variant(), RngStream(6, 7))


def demo_rosters(n=10, seed=17):
    return generate_rosters(n, RngStream(seed, 40))


class TestStudySimulation:
    def setup_method(self):
        self.params = flat_params(beta=1.5, delta=0.2)
        self.variant = alpha_variant()

    def test_raw_batch_scheme_free_and_deterministic(self):
        rosters = demo_rosters()
        a = simulate_raw_batch(rosters, self.params, self.variant,
                               RngStream(51, 3).child(0), replicates=20)
        b = simulate_raw_batch(rosters, self.params, self.variant,
                               RngStream(51, 3).child(0), replicates=20)
        np.testing.assert_array_equal(a.tau, b.tau)
        np.testing.assert_array_equal(a.tested, b.tested)
        np.testing.assert_array_equal(a.onset, b.onset)

    def test_selection_filters_only(self):
        # the raw households behind every scheme are the same sims;
        # selected records must agree with a direct raw run
        rosters = demo_rosters()
        raw = simulate_raw_batch(rosters, self.params, self.variant,
                                 RngStream(52, 3).child(0), replicates=30)
        seen = {}
        for scheme in SCHEMES:
            ds = simulate_study(rosters, self.params, self.variant, scheme,
                                RngStream(52, 3), replicates=30, n_select=12)
            assert ds.scheme == scheme
            for rec in ds.records:
                h = rec.household_id
                np.testing.assert_array_equal(rec.age_years,
                                              raw.age_years[h, : rec.size])
                np.testing.assert_array_equal(rec.protected,
                                              raw.protected[h, : rec.size])
                seen.setdefault(scheme, set()).add(h)
        # schemes overlap but are not all equal subsets
        assert seen["random"] and seen["child"] and seen["adult"]

    def test_same_stream_same_dataset(self):
        rosters = demo_rosters()
        a = simulate_study(rosters, self.params, self.variant, "random",
                           RngStream(53, 3), replicates=25, n_select=10)
        b = simulate_study(rosters, self.params, self.variant, "random",
                           RngStream(53, 3), replicates=25, n_select=10)
        np.testing.assert_array_equal(encode_dataset(a), encode_dataset(b))

    def test_inclusion_case_in_scheme_band(self):
        rosters = demo_rosters(12)
        for scheme, check in (
            ("child", lambda age: age < 18.0),
            ("adult", lambda age: age >= 18.0),
        ):
            ds = simulate_study(rosters, self.params, self.variant, scheme,
                                RngStream(54, 3), replicates=30, n_select=10)
            for rec in ds.records:
                case = rec.inclusion_case
                assert rec.positive[case] == 1
                assert check(rec.age_years[case])

    def test_dates_shifted_and_followups(self):
        ds = simulate_study(demo_rosters(), self.params, self.variant, "random",
                            RngStream(55, 3), replicates=25, n_select=10)
        assert FOLLOW_UP_OFFSETS == (3.0, 7.0, 15.0, 45.0)
        for rec in ds.records:
            assert rec.followup_end - rec.inclusion_date == pytest.approx(45.0)
            assert rec.inclusion_date >= DATE_SHIFT
            for field in ("onset_or_first_pos", "last_negative",
                          "first_positive", "last_positive"):
                vals = getattr(rec, field)
                assert np.all((vals == -1.0) | (vals >= DATE_SHIFT))

    def test_record_consistency(self):
        ds = simulate_study(demo_rosters(), self.params, self.variant, "random",
                            RngStream(56, 3), replicates=25, n_select=10)
        for rec in ds.records:
            pos = rec.positive.astype(bool)
            # positive members carry dates; negative members do not
            assert np.all(rec.first_positive[pos] >= 0)
            assert np.all(rec.first_positive[~pos] == -1.0)
            assert np.all(rec.last_positive[pos] >= rec.first_positive[pos])
            assert np.all(rec.symptomatic <= rec.positive)
            sym = rec.symptomatic.astype(bool)
            assert np.all(rec.onset_or_first_pos[pos] >= 0)
            # asymptomatic positives anchor on their first positive test
            asym_pos = pos & ~sym
            np.testing.assert_allclose(rec.onset_or_first_pos[asym_pos],
                                       rec.first_positive[asym_pos])

    def test_insufficient_sample(self):
        quiet = dataclasses.replace(self.variant, alpha_background=0.0)
        with pytest.raises(InsufficientSampleError):
            simulate_study(demo_rosters(), self.params, quiet, "random",
                           RngStream(57, 3), replicates=5, n_select=4)

    def test_size_eight_roster_rejected_for_alpha(self):
        bad = Roster(age_years=np.full(8, 30.0), protected=np.zeros(8, dtype=np.int64))
        with pytest.raises(ConfigError):
            simulate_study([bad], self.params, self.variant, "random",
                           RngStream(58, 3), replicates=5, n_select=1)

    def test_bad_scheme_rejected(self):
        with pytest.raises(ValueError):
            simulate_study(demo_rosters(2), self.params, self.variant, "oldest",
                           RngStream(59, 3), replicates=2, n_select=1)

    def test_child_scheme_skews_first_positive_ages(self):
        rosters = demo_rosters(12, seed=23)
        fracs = {}
        for scheme in SCHEMES:
            ds = simulate_study(rosters, self.params, self.variant, scheme,
                                RngStream(60, 3), replicates=40, n_select=40)
            fracs[scheme] = first_positive_fraction_under_18(ds)
        assert fracs["child"] > fracs["adult"]


class TestFirstPositiveStat:
    def _record(self, ages, first_pos):
        m = len(ages)
        return HouseholdRecord(
            household_id=0,
            age_years=np.asarray(ages, dtype=np.float64),
            age_group=age_band(ages),
            protected=np.zeros(m, dtype=np.int64),
            positive=(np.asarray(first_pos) >= 0).astype(np.int64),
            symptomatic=np.zeros(m, dtype=np.int64),
            onset_or_first_pos=np.asarray(first_pos, dtype=np.float64),
            last_negative=np.full(m, -1.0),
            first_positive=np.asarray(first_pos, dtype=np.float64),
            last_positive=np.asarray(first_pos, dtype=np.float64),
            inclusion_date=40.0,
            followup_end=85.0,
            inclusion_case=0,
        )

    def test_tie_goes_to_younger(self):
        rec = self._record([30.0, 12.0], [35.0, 35.0])
        ds = StudyDataset([rec], "random", "alpha")
        assert first_positive_fraction_under_18(ds) == 1.0

    def test_earliest_wins_regardless_of_age(self):
        rec = self._record([30.0, 12.0], [34.0, 35.0])
        ds = StudyDataset([rec], "random", "alpha")
        assert first_positive_fraction_under_18(ds) == 0.0

    def test_fraction_averages_households(self):
        recs = [
            self._record([30.0, 12.0], [35.0, 34.0]),
            self._record([30.0, 12.0], [34.0, 35.0]),
        ]
        ds = StudyDataset(recs, "random", "alpha")
        assert first_positive_fraction_under_18(ds) == pytest.approx(0.5)


class TestEncoding:
    def _dataset(self, scheme="child", seed=61):
        return simulate_study(demo_rosters(), flat_params(beta=1.5), alpha_variant(),
                              scheme, RngStream(seed, 3), replicates=25, n_select=8)

    def test_shape_and_padding(self):
        ds = self._dataset()
        enc = encode_dataset(ds)
        assert enc.shape == (8, MAX_HOUSEHOLD, 15)
        for j, rec in enumerate(ds.records):
            assert np.all(enc[j, rec.size:] == -1.0)
            block = enc[j, : rec.size]
            # infection status is one-hot
            np.testing.assert_array_equal(block[:, 1:4].sum(axis=1), 1.0)
            np.testing.assert_array_equal(block[:, 5], float(rec.size))
            np.testing.assert_array_equal(block[:, 7:10], [[0.0, 1.0, 0.0]] * rec.size)

    def test_decode_round_trip(self):
        ds = self._dataset()
        enc = encode_dataset(ds)
        back = decode_dataset(enc)
        assert back.scheme == ds.scheme
        assert back.variant_name == ds.variant_name
        np.testing.assert_array_equal(encode_dataset(back), enc)
        for a, b in zip(ds.records, back.records):
            np.testing.assert_array_equal(a.age_group, b.age_group)
            np.testing.assert_array_equal(a.positive, b.positive)
            np.testing.assert_array_equal(a.symptomatic, b.symptomatic)
            np.testing.assert_allclose(a.onset_or_first_pos, b.onset_or_first_pos)
            np.testing.assert_allclose(a.last_negative, b.last_negative)
            np.testing.assert_allclose(a.first_positive, b.first_positive)
            np.testing.assert_allclose(a.last_positive, b.last_positive)
            assert b.followup_end == pytest.approx(a.followup_end)

    def test_decode_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            decode_dataset(np.zeros((3, 8, 14)))
        bad = np.full((1, 8, 15), -1.0)
        with pytest.raises(DataError):
            decode_dataset(bad)

    def test_decode_rejects_mixed_tags(self):
        ds = self._dataset()
        enc = encode_dataset(ds)
        enc[1, : ds.records[1].size, 6] = 1.0  # flip variant of one household
        with pytest.raises(DataError):
            decode_dataset(enc)

    def test_file_round_trip(self, tmp_path):
        ds = self._dataset(scheme="adult", seed=62)
        path = tmp_path / "study.csv"
        write_dataset(path, ds)
        back = read_dataset(path)
        np.testing.assert_array_equal(encode_dataset(back), encode_dataset(ds))
        assert back.scheme == "adult"

    def test_read_missing_and_malformed(self, tmp_path):
        with pytest.raises(DataError):
            read_dataset(tmp_path / "nope.csv")
        bad = tmp_path / "bad.csv"
        bad.write_text("household,wrong\n")
        with pytest.raises(DataError):
            read_dataset(bad)
        bad.write_text("")
        with pytest.raises(DataError):
            read_dataset(bad)


class TestRosters:
    def test_sizes_cycle_and_fields_valid(self):
        rosters = generate_rosters(12, RngStream(1, 8))
        sizes = [r.size for r in rosters]
        assert sizes == [2, 3, 4, 5, 6, 7] * 2
        for r in rosters:
            assert np.all(r.age_years >= 0)
            assert set(np.unique(r.protected)) <= {0, 1}

    def test_contains_children_and_adults(self):
        rosters = generate_rosters(30, RngStream(2, 8))
        ages = np.concatenate([r.age_years for r in rosters])
        assert (ages < 18).any()
        assert (ages >= 18).any()

    def test_roster_validation(self):
        with pytest.raises(ValueError):
            Roster(age_years=np.array([30.0]), protected=np.array([0]))
        with pytest.raises(ValueError):
            Roster(age_years=np.full(9, 30.0), protected=np.zeros(9, dtype=np.int64))
        with pytest.raises(ValueError):
            Roster(age_years=np.array([30.0, -2.0]), protected=np.array([0, 0]))
        with pytest.raises(ValueError):
            generate_rosters(0, RngStream(3, 8))
