import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probtransform.core import ProbPair, Regime, classify, extract_deviations, forward_transform
from probtransform.ensemble import (
    BuildMode,
    Ensemble,
    FlipProcedure,
    apply_procedure,
    build_ensemble,
    convergence_study,
    estimate_deviations,
    expected_deviations,
    run_replicas,
    synthesize_flip,
)
from probtransform.errors import DegenerateInput, SizeMismatch
from probtransform.sampling import SeedSpec

GRID = [i / 10 for i in range(1, 10)]


class TestBuildEnsemble:
    def test_exact(self):
        assert build_ensemble(4, ProbPair(0.25, 0.75), BuildMode.EXACT) == Ensemble(1, 3)
        assert build_ensemble(10**6, ProbPair(0.5, 0.5), BuildMode.EXACT) == Ensemble(500000, 500000)

    def test_round_half_up(self):
        assert build_ensemble(2, ProbPair(0.25, 0.75), "exact") == Ensemble(1, 1)
        assert build_ensemble(10, ProbPair(0.05, 0.95), "exact") == Ensemble(1, 9)

    def test_sampled(self):
        e = build_ensemble(10**6, ProbPair(0.5, 0.5), BuildMode.SAMPLED, SeedSpec(2024))
        assert e.total == 10**6
        assert abs(e.n1 - 500000) <= 5 * math.sqrt(250000)

    def test_sampled_needs_seed(self):
        with pytest.raises(ValueError):
            build_ensemble(10, ProbPair(0.5, 0.5), BuildMode.SAMPLED)

    def test_bad_total(self):
        with pytest.raises(ValueError):
            build_ensemble(0, ProbPair(0.5, 0.5))


class TestApplyProcedure:
    def test_identity(self):
        e = Ensemble(123, 877)
        assert apply_procedure(e, FlipProcedure(0, 0), SeedSpec(1)) == e

    def test_expected_flips(self):
        after = apply_procedure(Ensemble(200000, 800000), FlipProcedure(0, 0.5), SeedSpec(77))
        assert abs(after.n1 - 600000) <= 3 * math.sqrt(200000)

    def test_nothing_to_flip(self):
        e = Ensemble(0, 1000)
        assert apply_procedure(e, FlipProcedure(0.7, 0), SeedSpec(1)) == e

    def test_full_flip(self):
        assert apply_procedure(Ensemble(2500, 7500), FlipProcedure(0, 1), SeedSpec(1)) == Ensemble(10000, 0)

    @given(
        st.integers(0, 10**6), st.integers(0, 10**6),
        st.floats(0, 1), st.floats(0, 1), st.integers(0, 2**32),
    )
    @settings(max_examples=200, deadline=None)
    def test_population_conserved(self, n1, n2, q12, q21, seed):
        if n1 + n2 == 0:
            return
        e = Ensemble(n1, n2)
        after = apply_procedure(e, FlipProcedure(q12, q21), SeedSpec(seed))
        assert after.total == e.total
        assert after.n1 >= 0 and after.n2 >= 0

    def test_deterministic(self):
        e = Ensemble(4000, 6000)
        proc = FlipProcedure(0.3, 0.1)
        assert apply_procedure(e, proc, SeedSpec(8, 3)) == apply_procedure(e, proc, SeedSpec(8, 3))


class TestEstimateDeviations:
    def test_integer_example(self):
        est = estimate_deviations(Ensemble(2, 8), Ensemble(6, 4))
        assert (est.lambda_hat1, est.lambda_hat2) == (2.0, -0.5)
        assert (est.delta1, est.delta2) == (0.4, -0.4)
        assert est.sample_size == 10

    def test_unchanged(self):
        est = estimate_deviations(Ensemble(3, 7), Ensemble(3, 7))
        assert (est.lambda_hat1, est.lambda_hat2) == (0.0, 0.0)

    def test_miniature_endpoint(self):
        est = estimate_deviations(Ensemble(1, 3), Ensemble(4, 0))
        assert (est.lambda_hat1, est.lambda_hat2) == (3.0, -1.0)
        assert classify(est.coefficients()) is Regime.HYPER_TRIGONOMETRIC

    def test_errors(self):
        with pytest.raises(DegenerateInput):
            estimate_deviations(Ensemble(0, 10), Ensemble(5, 5))
        with pytest.raises(SizeMismatch):
            estimate_deviations(Ensemble(5, 5), Ensemble(5, 6))

    @given(st.integers(1, 10**6), st.integers(1, 10**6), st.floats(0, 1))
    @settings(max_examples=300)
    def test_delta_identity(self, n1, n2, frac):
        before = Ensemble(n1, n2)
        k = int(frac * (n1 + n2))
        est = estimate_deviations(before, Ensemble(k, n1 + n2 - k))
        assert abs(est.delta1 - est.p_hat1 * est.lambda_hat1) <= 1e-12
        assert abs(est.delta2 - est.p_hat2 * est.lambda_hat2) <= 1e-12
        # finite-N orthogonality holds with the recorded frequencies
        assert abs(est.p_hat1 * est.lambda_hat1 + est.p_hat2 * est.lambda_hat2) <= 1e-12


class TestExpectedDeviations:
    def test_examples(self):
        lam = expected_deviations(ProbPair(0.2, 0.8), FlipProcedure(0, 0.5))
        assert lam.lambda1 == pytest.approx(2.0, abs=1e-12) and lam.lambda2 == pytest.approx(-0.5, abs=1e-12)
        assert tuple(expected_deviations(ProbPair(0.3, 0.7), FlipProcedure(0, 0))) == (0, 0)
        assert tuple(expected_deviations(ProbPair(0.5, 0.5), FlipProcedure(0.25, 0.25))) == (0, 0)

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            expected_deviations(ProbPair(0.0, 1.0), FlipProcedure(0.1, 0.1))

    @given(st.fractions(F(1, 1000), F(999, 1000)), st.fractions(0, 1), st.fractions(0, 1))
    @settings(max_examples=300)
    def test_orthogonality_exact(self, p1, q12, q21):
        p = ProbPair(p1, 1 - p1)
        lam = expected_deviations(p, FlipProcedure(q12, q21))
        assert lam.lambda1 * p.p1 + lam.lambda2 * p.p2 == 0

    @given(st.floats(1e-3, 1 - 1e-3), st.floats(0, 1), st.floats(0, 1))
    @settings(max_examples=300)
    def test_orthogonality_double(self, p1, q12, q21):
        p = ProbPair.from_p1(p1)
        lam = expected_deviations(p, FlipProcedure(q12, q21))
        assert abs(lam.lambda1 * p.p1 + lam.lambda2 * p.p2) <= 1e-15

    @pytest.mark.parametrize(
        "p1,q12,q21", [(0.2, 0.0, 0.5), (0.5, 0.3, 0.1), (0.7, 0.05, 0.6), (0.35, 0.4, 0.0)]
    )
    def test_estimator_consistency(self, p1, q12, q21):
        p, proc = ProbPair.from_p1(p1), FlipProcedure(q12, q21)
        expected = expected_deviations(p, proc)
        (row,) = convergence_study(p, proc, [10**6], 32, SeedSpec(99))
        assert abs(row.mean_lambda1 - expected.lambda1) <= 5 * row.std_lambda1 / math.sqrt(32)
        assert abs(row.mean_lambda2 - expected.lambda2) <= 5 * row.std_lambda2 / math.sqrt(32)


class TestSynthesizeFlip:
    def test_examples(self):
        assert synthesize_flip(ProbPair(0.25, 0.75), ProbPair(1.0, 0.0)) == FlipProcedure(0, 1.0)
        assert synthesize_flip(ProbPair(0.3, 0.7), ProbPair(0.3, 0.7)) == FlipProcedure(0, 0)
        proc = synthesize_flip(ProbPair(0.2, 0.8), ProbPair(0.6, 0.4))
        assert proc.q12 == 0 and proc.q21 == pytest.approx(0.5, abs=1e-15)

    def test_decrease(self):
        proc = synthesize_flip(ProbPair(0.8, 0.2), ProbPair(0.2, 0.8))
        assert proc.q21 == 0 and proc.q12 == pytest.approx(0.75)

    def test_realizes_hyperbolic(self):
        proc = synthesize_flip(ProbPair(0.2, 0.8), ProbPair(0.6, 0.4))
        assert classify(expected_deviations(ProbPair(0.2, 0.8), proc)) is Regime.HYPER_TRIGONOMETRIC

    def test_degenerate(self):
        with pytest.raises(DegenerateInput):
            synthesize_flip(ProbPair(1.0, 0.0), ProbPair(0.5, 0.5))

    @pytest.mark.parametrize("a", GRID)
    @pytest.mark.parametrize("b", GRID)
    def test_grid(self, a, b):
        p_in, target = ProbPair.from_p1(a), ProbPair.from_p1(b)
        proc = synthesize_flip(p_in, target)
        assert 0 <= proc.q12 <= 1 and 0 <= proc.q21 <= 1
        assert min(proc.q12, proc.q21) == 0
        lam = expected_deviations(p_in, proc)
        out = forward_transform(p_in, lam)
        assert abs(out.p1 - target.p1) <= 1e-12 and abs(out.p2 - target.p2) <= 1e-12
        ref = extract_deviations(p_in, target)
        assert abs(lam.lambda1 - ref.lambda1) <= 1e-12 and abs(lam.lambda2 - ref.lambda2) <= 1e-12

    @given(st.floats(1e-6, 1 - 1e-6), st.floats(0, 1))
    @settings(max_examples=500)
    def test_any_target(self, a, b):
        p_in, target = ProbPair.from_p1(a), ProbPair.from_p1(b)
        proc = synthesize_flip(p_in, target)
        out = forward_transform(p_in, expected_deviations(p_in, proc))
        assert abs(out.p1 - target.p1) <= 1e-12


class TestConvergence:
    def test_shrinking_spread(self):
        rows = convergence_study(ProbPair(0.2, 0.8), FlipProcedure(0, 0.5), [10**4, 10**5, 10**6], 32, SeedSpec(4))
        assert [r.size for r in rows] == [10**4, 10**5, 10**6]
        assert rows[0].std_lambda1 > rows[1].std_lambda1 > rows[2].std_lambda1
        assert abs(rows[-1].mean_lambda1 - 2.0) < 0.01

    def test_null_procedure(self):
        rows = convergence_study(ProbPair(0.4, 0.6), FlipProcedure(0, 0), [100, 1000], 8, SeedSpec(1))
        for r in rows:
            assert (r.mean_lambda1, r.mean_lambda2, r.std_lambda1, r.std_lambda2) == (0, 0, 0, 0)

    def test_deterministic(self):
        args = (ProbPair(0.3, 0.7), FlipProcedure(0.1, 0.2), [1000], 1, SeedSpec(5))
        a, b = convergence_study(*args), convergence_study(*args)
        assert repr(a) == repr(b)
        assert math.isnan(a[0].std_lambda1)

    def test_workers_do_not_change_output(self):
        args = (ProbPair(0.3, 0.7), FlipProcedure(0.1, 0.2), [1000, 10000], 16, SeedSpec(5))
        assert convergence_study(*args) == convergence_study(*args, workers=4)

    def test_degenerate_replicas_excluded(self):
        rows = convergence_study(ProbPair(0.02, 0.98), FlipProcedure(0, 0.1), [10, 20], 50, SeedSpec(3))
        for r in rows:
            assert r.excluded > 0
            assert r.replicas_used + r.excluded == 50
        results = run_replicas(10, ProbPair(0.02, 0.98), FlipProcedure(0, 0.1), 50, SeedSpec(3))
        assert any(res.error for res in results)

    def test_exact_mode(self):
        rows = convergence_study(ProbPair(0.2, 0.8), FlipProcedure(0, 0.5), [1000], 4, SeedSpec(1), BuildMode.EXACT)
        assert rows[0].replicas_used == 4

    @pytest.mark.parametrize("sizes", [[100, 10], [0, 10], [10, 10]])
    def test_bad_sizes(self, sizes):
        with pytest.raises(ValueError):
            convergence_study(ProbPair(0.5, 0.5), FlipProcedure(0, 0), sizes, 2, SeedSpec(1))
