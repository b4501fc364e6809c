"""Oracle tests for calibration diagnostics: SBC, C2ST, contraction."""

import numpy as np
import pytest
from scipy import stats

from selbi.diagnostics import (
    C2stResult,
    DiagnosticsReport,
    RankMatrix,
    c2st,
    c2st_pvalue,
    c2st_statistic,
    ecdf_uniformity,
    posterior_contraction,
    render_text,
    sbc_ranks,
    write_report,
)
from selbi.errors import InsufficientSampleError
from selbi.randkit import RngStream


def _normal_simulator(rng):
    gen = rng.generator
    return gen.normal(size=2), None


def _exact_sampler(data, k, rng):
    return rng.generator.normal(size=(k, 2))


class TestSbcRanks:
    def test_exact_sampler_gives_uniform_ranks(self):
        # self-consistency: sampling the posterior from the prior makes
        # every rank value equally likely
        rm = sbc_ranks(_exact_sampler, _normal_simulator, 2000, 100, RngStream(70, 0))
        assert rm.ranks.shape == (2000, 2)
        assert rm.n_failed == 0 and not rm.flagged
        for p in range(2):
            counts = np.bincount(rm.ranks[:, p], minlength=101)
            assert stats.chisquare(counts).pvalue > 0.01

    def test_shifted_sampler_piles_ranks_low(self):
        def shifted(data, k, rng):
            return rng.generator.normal(size=(k, 2)) + 2.0

        rm = sbc_ranks(shifted, _normal_simulator, 500, 100, RngStream(71, 0))
        assert rm.ranks.mean() < 20
        counts = np.bincount(rm.ranks[:, 0], minlength=101)
        assert stats.chisquare(counts).pvalue < 1e-6

    def test_point_mass_ties_jittered_uniform(self):
        def degenerate(data, k, rng):
            return np.tile(data, (k, 1))

        def sim(rng):
            theta = rng.generator.normal(size=1)
            return theta, theta

        rm = sbc_ranks(degenerate, sim, 2000, 100, RngStream(72, 0))
        counts = np.bincount(rm.ranks[:, 0], minlength=101)
        assert stats.chisquare(counts).pvalue > 0.01

    def test_failures_skipped_and_flagged(self):
        def flaky(rng):
            gen = rng.generator
            if gen.uniform() < 0.3:
                raise InsufficientSampleError("no eligible households")
            return gen.normal(size=2), None

        rm = sbc_ranks(_exact_sampler, flaky, 400, 50, RngStream(73, 0))
        assert rm.n_failed > 0
        assert rm.n_sims + rm.n_failed == 400
        assert rm.flagged
        assert rm.failure_fraction == rm.n_failed / 400

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            sbc_ranks(_exact_sampler, _normal_simulator, 10, 0, RngStream(74, 0))
        with pytest.raises(ValueError):
            sbc_ranks(_exact_sampler, _normal_simulator, 0, 10, RngStream(74, 1))

    def test_bad_sampler_shape_rejected(self):
        def bad(data, k, rng):
            return np.zeros((k, 5))

        with pytest.raises(ValueError):
            sbc_ranks(bad, _normal_simulator, 5, 10, RngStream(75, 0))

    def test_rank_matrix_validation(self):
        with pytest.raises(ValueError):
            RankMatrix(ranks=np.array([[0, 120]]), n_draws=100, n_requested=1)
        with pytest.raises(ValueError):
            RankMatrix(ranks=np.array([[0, 5]]), n_draws=5, n_requested=1,
                       param_names=("only_one",))


def _uniform_ranks(m, k, rng, n_params=1):
    return RankMatrix(ranks=rng.generator.integers(0, k + 1, size=(m, n_params)),
                      n_draws=k, n_requested=m)


class TestEcdfUniformity:
    def test_coverage_calibrated(self):
        # nested Monte Carlo: the fraction of null rank sets inside the
        # band must match the nominal level
        rng = RngStream(76, 0)
        inside = 0
        trials = 1000
        for t in range(trials):
            rep = ecdf_uniformity(_uniform_ranks(150, 100, rng.child(t)))
            inside += rep.all_inside
        coverage = inside / trials
        assert abs(coverage - 0.95) <= 0.02, coverage

    def test_degenerate_ranks_exit_band(self):
        rm = RankMatrix(ranks=np.zeros((200, 1), dtype=int), n_draws=100,
                        n_requested=200)
        rep = ecdf_uniformity(rm)
        assert not rep.inside[0]
        assert rep.sup_dev[0] > 0.9

    def test_family_size_widens_band(self):
        rm = _uniform_ranks(200, 100, RngStream(77, 0))
        h1 = ecdf_uniformity(rm, family_size=1).halfwidth
        h11 = ecdf_uniformity(rm, family_size=11).halfwidth
        h33 = ecdf_uniformity(rm, family_size=33).halfwidth
        assert h1 < h11 < h33

    def test_band_geometry(self):
        rm = _uniform_ranks(150, 100, RngStream(78, 0))
        rep = ecdf_uniformity(rm)
        assert rep.lower.min() >= 0 and rep.upper.max() <= 1
        assert np.all(rep.upper - rep.lower >= rep.halfwidth)
        mid = rep.grid.size // 2
        assert rep.upper[mid] - rep.grid[mid] == pytest.approx(rep.halfwidth)

    def test_too_few_sims_rejected(self):
        rm = _uniform_ranks(50, 100, RngStream(79, 0))
        with pytest.raises(ValueError):
            ecdf_uniformity(rm)
        with pytest.raises(ValueError):
            ecdf_uniformity(_uniform_ranks(200, 100, RngStream(79, 1)), level=1.5)
        with pytest.raises(ValueError):
            ecdf_uniformity(_uniform_ranks(200, 100, RngStream(79, 2)), family_size=0)

    def test_deterministic(self):
        rm = _uniform_ranks(150, 100, RngStream(80, 0))
        a = ecdf_uniformity(rm)
        b = ecdf_uniformity(rm)
        assert np.array_equal(a.ecdf, b.ecdf)
        assert a.halfwidth == b.halfwidth


class TestC2stStatistic:
    def test_chance_accuracies_give_zero(self):
        assert c2st_statistic([0.5, 0.5, 0.5]) == 0.0

    def test_perfect_accuracies(self):
        assert c2st_statistic(np.ones(5)) == pytest.approx(0.25)

    def test_single_unit_arithmetic(self):
        assert c2st_statistic([0.7]) == pytest.approx(0.04)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            c2st_statistic([])


class TestC2st:
    def test_matched_distributions_at_chance(self):
        gen = RngStream(81, 0).generator
        a = gen.normal(size=(2000, 3))
        b = gen.normal(size=(2000, 3))
        res = c2st(a, b, rng=RngStream(81, 1))
        assert 0.45 <= res.mean_accuracy <= 0.55
        assert res.unit == "fold" and res.accuracies.shape == (5,)
        assert not res.high_variance

    def test_large_shift_separates(self):
        gen = RngStream(82, 0).generator
        a = gen.normal(size=(200, 2)) + 5.0
        b = gen.normal(size=(200, 2))
        res = c2st(a, b, rng=RngStream(82, 1))
        assert res.mean_accuracy > 0.95
        assert res.t_obs > 0.2

    def test_tiny_sample_flagged(self):
        gen = RngStream(83, 0).generator
        res = c2st(gen.normal(size=(5, 1)), gen.normal(size=(5, 1)),
                   rng=RngStream(83, 1))
        assert res.high_variance

    def test_imbalance_rejected(self):
        gen = RngStream(84, 0).generator
        with pytest.raises(ValueError):
            c2st(gen.normal(size=(70, 2)), gen.normal(size=(30, 2)))

    def test_pair_unit_gives_indicator_per_pair(self):
        gen = RngStream(85, 0).generator
        a = gen.normal(size=(30, 1)) + 5.0
        b = gen.normal(size=(30, 1))
        res = c2st(a, b, rng=RngStream(85, 1), unit="pair")
        assert res.accuracies.shape == (60,)
        assert set(np.unique(res.accuracies)) <= {0.0, 1.0}
        assert res.mean_accuracy > 0.9

    def test_argument_validation(self):
        x = np.zeros((20, 2))
        with pytest.raises(ValueError):
            c2st(x, x, unit="dataset")
        with pytest.raises(ValueError):
            c2st(x, x, folds=1)
        with pytest.raises(ValueError):
            c2st(x, x, epochs=0)
        with pytest.raises(ValueError):
            c2st(x, np.zeros((20, 3)))


class TestC2stPvalue:
    def test_separable_data_significant(self):
        gen = RngStream(86, 0).generator
        a = gen.normal(size=(60, 1)) + 5.0
        b = gen.normal(size=(60, 1))
        res = c2st(a, b, rng=RngStream(86, 1), epochs=40, patience=6)
        out = c2st_pvalue(a, b, res, rng=RngStream(86, 2), epochs=40, patience=6)
        assert out.p_value <= 0.1
        assert out.t_perm.shape == (10,)
        assert out.t_obs > out.t_perm.max()

    def test_chance_accuracies_give_p_one(self):
        gen = RngStream(87, 0).generator
        a, b = gen.normal(size=(20, 1)), gen.normal(size=(20, 1))
        observed = C2stResult(accuracies=np.full(5, 0.5), unit="fold",
                              n_pairs=40, high_variance=True)
        out = c2st_pvalue(a, b, observed, n_permutations=3,
                          rng=RngStream(87, 1), epochs=10, patience=2)
        assert out.t_obs == 0.0
        assert out.p_value == 1.0

    def test_p_on_lattice(self):
        gen = RngStream(88, 0).generator
        a, b = gen.normal(size=(15, 1)), gen.normal(size=(15, 1))
        res = c2st(a, b, rng=RngStream(88, 1), epochs=15, patience=2)
        out = c2st_pvalue(a, b, res, rng=RngStream(88, 2), epochs=15, patience=2)
        assert (out.p_value * 10) == int(out.p_value * 10)
        assert 0.0 <= out.p_value <= 1.0

    def test_zero_permutations_rejected(self):
        observed = C2stResult(accuracies=np.array([0.5]), unit="fold",
                              n_pairs=10, high_variance=True)
        with pytest.raises(ValueError):
            c2st_pvalue(np.zeros((5, 1)), np.zeros((5, 1)), observed,
                        n_permutations=0)

    def test_null_pvalues_super_uniform(self):
        # with the exact (1/B) sum 1(T_b >= T_obs) formula, validity under
        # the null rests on ties between lattice-valued statistics, so the
        # check runs at a fold size where accuracies are coarse
        ps = []
        root = RngStream(0xC25, 5)
        for trial in range(200):
            gen = root.child(trial).child(0).generator
            a = gen.normal(size=(5, 1))
            b = gen.normal(size=(5, 1))
            res = c2st(a, b, rng=root.child(trial).child(1), epochs=25, patience=4)
            out = c2st_pvalue(a, b, res, rng=root.child(trial).child(2),
                              epochs=25, patience=4)
            ps.append(out.p_value)
        assert np.mean(np.array(ps) <= 0.1) <= 0.15


class TestContraction:
    def test_identical_sets_give_zero(self):
        gen = RngStream(89, 0).generator
        x = gen.normal(size=(100, 3))
        assert np.array_equal(posterior_contraction(x, x), np.zeros(3))

    def test_point_mass_gives_one(self):
        gen = RngStream(90, 0).generator
        prior = gen.normal(size=(100, 2))
        post = np.tile([1.0, 2.0], (50, 1))
        assert np.array_equal(posterior_contraction(prior, post), np.ones(2))

    def test_half_sd_gives_three_quarters(self):
        gen = RngStream(91, 0).generator
        prior = gen.normal(size=(400, 2))
        post = prior[:200] * 0.5
        ratio = post.var(axis=0, ddof=1) / prior.var(axis=0, ddof=1)
        expect = 1 - ratio
        assert np.allclose(posterior_contraction(prior, post), expect, atol=1e-12)
        assert np.all(np.abs(expect - 0.75) < 0.1)

    def test_affine_invariance(self):
        gen = RngStream(92, 0).generator
        prior = gen.normal(size=(300, 2))
        post = gen.normal(scale=0.3, size=(300, 2))
        base = posterior_contraction(prior, post)
        scale, shift = np.array([3.0, 0.2]), np.array([-7.0, 11.0])
        mapped = posterior_contraction(prior * scale + shift, post * scale + shift)
        assert np.allclose(base, mapped, atol=1e-12)

    def test_wider_posterior_clamps_to_zero(self):
        gen = RngStream(93, 0).generator
        prior = gen.normal(size=(200, 1))
        post = gen.normal(scale=4.0, size=(200, 1))
        assert posterior_contraction(prior, post)[0] == 0.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            posterior_contraction(np.zeros((1, 2)), np.zeros((10, 2)))
        with pytest.raises(ValueError):
            posterior_contraction(np.ones((10, 2)), np.zeros((10, 2)))
        with pytest.raises(ValueError):
            posterior_contraction(np.zeros((10, 2)), np.zeros((10, 3)))


class TestReport:
    def _report(self):
        rng = RngStream(94, 0)
        rm = _uniform_ranks(150, 100, rng, n_params=2)
        rep = ecdf_uniformity(rm)
        gen = rng.child(5).generator
        res = c2st(gen.normal(size=(30, 1)), gen.normal(size=(30, 1)),
                   rng=rng.child(6), epochs=10, patience=2)
        return DiagnosticsReport(
            title="diagnostic smoke",
            ranks={"demo": rm},
            ecdf={"demo": rep},
            c2st={"demo": res},
            contraction={"demo": (("alpha", "beta"), np.array([0.7, 0.25]))},
        )

    def test_text_sections_complete(self):
        report = self._report()
        text = render_text(report)
        for needle in ("[ranks demo]", "[ecdf demo]", "[c2st demo]",
                       "[contraction demo]", "band vertices", "histogram",
                       "T_obs", "sup_dev"):
            assert needle in text
        hist = [int(x) for x in
                [ln for ln in text.splitlines() if "histogram" in ln][0].split()[2:]]
        assert sum(hist) == 150

    def test_outputs_written_and_deterministic(self, tmp_path):
        report = self._report()
        d1, d2 = tmp_path / "a", tmp_path / "b"
        paths1 = write_report(report, d1)
        paths2 = write_report(report, d2)
        for key in ("text", "csv", "svg"):
            b1 = open(paths1[key], "rb").read()
            b2 = open(paths2[key], "rb").read()
            assert b1 == b2, key
        assert not list(d1.glob("*.tmp"))

    def test_csv_shape(self, tmp_path):
        report = self._report()
        paths = write_report(report, tmp_path)
        lines = open(paths["csv"]).read().splitlines()
        rep = report.ecdf["demo"]
        assert len(lines) == 1 + rep.ecdf.shape[0] * rep.grid.size
        assert lines[0] == "label,param,t,ecdf,lower,upper"
        first = lines[1].split(",")
        assert first[0] == "demo" and 0.0 <= float(first[3]) <= 1.0

    def test_svg_structure(self, tmp_path):
        report = self._report()
        paths = write_report(report, tmp_path)
        svg = open(paths["svg"]).read()
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
        assert svg.count("<polyline") == 2

    def test_report_without_ecdf_skips_plots(self, tmp_path):
        report = DiagnosticsReport(title="bare")
        paths = write_report(report, tmp_path)
        assert set(paths) == {"text"}
        assert "report: bare" in open(paths["text"]).read()
