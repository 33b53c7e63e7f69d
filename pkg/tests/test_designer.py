import logging
import math

import numpy as np
import pytest

from opln import designer as d
from opln import dispersion, jsa, pso
from opln import phasematch as pm


def tiny(**kw):
    base = dict(length=2.0, slice_count=61, grid=40, schedule=d.Schedule(2, 3, 2))
    return d.DesignProblem.for_gvm(3, **(base | kw))


SMALL_PUMP = pso.PsoConfig(((0, 1),) * 2, swarm_size=6)
SMALL_DUTY = pso.PsoConfig(((0, 1),), swarm_size=6, init_spread=0.02)


@pytest.fixture(scope="module")
def tiny_result():
    return d.optimize(tiny(), SMALL_PUMP, SMALL_DUTY, seed=3)


class TestInitialProfile:
    def test_traces_gaussian(self):
        prob = d.DesignProblem.for_gvm(3, length=30.0)
        prof = d.initial_profile(prob)
        L = prof.length_um
        z = (np.arange(prof.period_count) + 0.5) * prof.period
        g = np.exp(-2 * ((z - L / 2) / (L / 3)) ** 2)
        assert np.allclose(np.sin(np.pi * prof.duty_cycles), g, atol=1e-12)
        assert np.all(np.diff(prof.duty_cycles) <= 1e-15)
        assert np.all(prof.duty_cycles[z < L / 2] >= 0.5)
        assert np.all(prof.duty_cycles[z > L / 2] <= 0.5)

    def test_center_duty(self):
        prof = d.initial_profile(d.DesignProblem.for_gvm(3, length=30.0))
        mid = prof.duty_cycles[prof.period_count // 2]
        assert mid == pytest.approx(0.5, abs=0.01)

    def test_flat_override(self):
        prof = d.initial_profile(d.DesignProblem.for_gvm(3, length=5.0), flat=True)
        assert np.all(prof.duty_cycles == 0.5)


class TestTarget:
    def test_peak_and_symmetry(self):
        prob = tiny()
        m = np.arange(1, prob.slice_count + 1)
        x = d.target_pmf(m, 1.75, 3.0, prob)
        assert x[prob.slice_count // 2] == 1.0
        assert np.allclose(x, x[::-1])

    def test_discrete_integral(self):
        prob = d.DesignProblem.for_gvm(3, slice_count=2001)
        sigma = 2.0
        t = prob.slice_offsets()
        step = (t[1] - t[0]) * 1e3
        total = np.sum(d.target_pmf(np.arange(1, 2002), 1.75, sigma, prob))
        assert total == pytest.approx(sigma * math.sqrt(2 * math.pi) / step, rel=0.01)


class TestCost:
    """Shape cost and its invariances."""

    def test_zero_on_target(self):
        x = np.exp(-np.linspace(-3, 3, 50) ** 2)
        assert d.shape_cost(x, x) == 0.0
        assert d.shape_cost(0.3 * x, x) < 1e-15

    def test_nonnegative_and_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            c = d.shape_cost(rng.uniform(0, 1, 30), rng.uniform(0, 1, 30))
            assert 0.0 <= c <= 1.0

    def test_sign_flip_invariance(self):
        prob = tiny()
        prof = d.initial_profile(prob)
        seg = jsa.domain_boundaries(prof)
        flipped = jsa.Segments(seg.start, seg.end, -seg.sign)
        dk = d.slice_mismatch(prob.pump_wavelength, prob)
        t = prob.slice_offsets()
        x = np.exp(-0.5 * (t / 3e-3) ** 2)
        a = d.shape_cost(np.abs(jsa.pmf_from_segments(dk, seg, prof.length_um)), x)
        b = d.shape_cost(np.abs(jsa.pmf_from_segments(dk, flipped, prof.length_um)), x)
        assert a == b

    def test_cached_evaluator_matches_cost(self):
        prob = tiny()
        prof = d.initial_profile(prob)
        sc = d.SliceCost(prob, prof)
        for w in (1.0, 3.0, 7.0):
            assert sc(prob.pump_wavelength, w, prof.duty_cycles) == pytest.approx(
                d.cost(prob.pump_wavelength, w, prof, prob), abs=1e-12)

    def test_flat_costs_more_than_erf(self):
        prob = d.DesignProblem.for_gvm(3, length=30.0)
        widths = np.geomspace(0.5, 15, 30)

        def best(flat):
            prof = d.initial_profile(prob, flat=flat)
            return min(d.cost(prob.pump_wavelength, w, prof, prob) for w in widths)

        assert best(True) > best(False)


class TestBandwidthMapping:
    def test_identity_at_symmetric_point(self):
        prob = d.DesignProblem.for_gvm(3)
        assert d.bandwidth_for_width(2.3, prob.pump_wavelength, prob) == pytest.approx(2.3, rel=1e-3)

    def test_no_finite_bandwidth_at_zero_tilt(self):
        prob = d.DesignProblem.for_gvm(1)
        assert d.bandwidth_for_width(2.0, prob.pump_wavelength, prob) == prob.pump_width_bounds[1]


class TestOptimize:
    def test_result_contract(self, tiny_result):
        r = tiny_result
        assert 0 < r.purity <= 1
        assert np.all(np.diff(r.cost_history) <= 0)
        assert np.all((r.profile.duty_cycles >= 0) & (r.profile.duty_cycles <= 1))
        assert r.cost_history.size == 2 * (2 + 3)
        assert r.provenance["seed"] == 3

    def test_reevaluation_is_idempotent(self, tiny_result):
        p, _ = d.evaluate_design(tiny_result)
        assert p == tiny_result.purity

    def test_not_worse_than_initial_cost(self, tiny_result):
        prob = tiny()
        prof = d.initial_profile(prob)
        widths = np.geomspace(*prob.pump_width_bounds, 41)
        start = min(d.SliceCost(prob, prof)(prob.pump_wavelength, w, prof.duty_cycles) for w in widths)
        assert tiny_result.cost <= start

    def test_deterministic(self, tiny_result):
        again = d.optimize(tiny(), SMALL_PUMP, SMALL_DUTY, seed=3)
        assert np.array_equal(again.profile.duty_cycles, tiny_result.profile.duty_cycles)
        assert again.purity == tiny_result.purity

    def test_resume_matches_uninterrupted(self, tmp_path, tiny_result):
        ck = tmp_path / "ck.yaml"
        d.optimize(tiny(schedule=d.Schedule(2, 3, 1)), SMALL_PUMP, SMALL_DUTY, seed=3, checkpoint=ck)
        # same problem except for the round count: rewrite provenance to the longer job
        inc, prov = d.read_checkpoint(ck)
        prov["problem"] = d.problem_to_dict(tiny())
        d.write_checkpoint(ck, inc, prov)
        resumed = d.optimize(tiny(), SMALL_PUMP, SMALL_DUTY, seed=3, checkpoint=ck, resume=True)
        assert np.array_equal(resumed.profile.duty_cycles, tiny_result.profile.duty_cycles)
        assert np.array_equal(resumed.cost_history, tiny_result.cost_history)

    def test_resume_rejects_other_seed(self, tmp_path):
        ck = tmp_path / "ck.yaml"
        d.optimize(tiny(schedule=d.Schedule(1, 1, 1)), SMALL_PUMP, SMALL_DUTY, seed=1, checkpoint=ck)
        with pytest.raises(ValueError, match="different problem or seed"):
            d.optimize(tiny(schedule=d.Schedule(1, 1, 1)), SMALL_PUMP, SMALL_DUTY, seed=2, checkpoint=ck,
                       resume=True)

    def test_checkpoint_failure_does_not_abort(self, tmp_path, caplog):
        bad = tmp_path / "missing" / "ck.yaml"
        with caplog.at_level(logging.ERROR):
            r = d.optimize(tiny(schedule=d.Schedule(1, 1, 1)), SMALL_PUMP, SMALL_DUTY, checkpoint=bad)
        assert "checkpoint write failed" in caplog.text
        assert 0 < r.purity <= 1

    def test_infeasible_fails_before_search(self):
        toy = dispersion.constant_model(2.0)
        media = pm.Media(toy, toy, dispersion.constant_model(2.0, "e"))
        calls = []
        with pytest.raises(pm.NoPhaseMatchingError):
            d.optimize(d.DesignProblem(3.5, length=1.0), media=media, on_phase=lambda *a: calls.append(a))
        assert calls == []

    def test_problem_validation(self):
        with pytest.raises(ValueError):
            d.DesignProblem(3.5, slice_count=5)
        with pytest.raises(ValueError):
            d.Schedule(0, 1, 1)


class TestFiles:
    def test_design_round_trip(self, tmp_path, tiny_result):
        d.write_design(tiny_result, tmp_path / "d.yaml")
        back = d.read_design(tmp_path / "d.yaml")
        assert np.array_equal(back.profile.duty_cycles, tiny_result.profile.duty_cycles)
        assert back.pump == tiny_result.pump
        assert back.profile.length == tiny_result.profile.length
        assert d.evaluate_design(back, 60.0, 40)[0] == tiny_result.purity

    def test_profile_csv_round_trip(self, tmp_path, tiny_result):
        prof = tiny_result.profile
        d.write_profile_csv(prof, tmp_path / "p.csv")
        back = d.read_profile_csv(tmp_path / "p.csv", prof.length)
        assert np.array_equal(back.duty_cycles, prof.duty_cycles)
        assert back.period == pytest.approx(prof.period, rel=1e-14)
        assert (tmp_path / "p.csv").read_text().splitlines()[0] == "period_index,z_start_um,duty_cycle"
