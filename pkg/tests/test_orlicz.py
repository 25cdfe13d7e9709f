"""Dyadic piecewise-linear functions: closed forms, oracles, scan reports."""

import math
import threading

import mpmath as mp
import pytest

from orliczlab import (
    LogReal,
    SlopeSequenceError,
    ZERO,
    compute_cq,
    geometric_slopes,
    identity_slopes,
    make_dyadic_plf,
    parse_function_spec,
    ratio_inf,
    ratio_inf_general,
    slopes_from_list,
    slopes_pow2_poly,
    squares_slopes,
)

mp.mp.dps = 60


def mp_breakpoint(log2_slope, n, terms=400):
    """Oracle: M(2^-n) = sum_{j>=n} b(j) 2^(-j-1) in 60-digit arithmetic."""
    return sum(mp.mpf(2) ** (log2_slope(j) - j - 1) for j in range(n, n + terms))


@pytest.fixture(scope="module")
def ident():
    return make_dyadic_plf(identity_slopes())


@pytest.fixture(scope="module")
def geom():
    return make_dyadic_plf(geometric_slopes())


@pytest.fixture(scope="module")
def squares():
    return make_dyadic_plf(squares_slopes())


class TestSlopeSequences:
    def test_constant_unit_slope_gives_identity(self, ident):
        for t in (0.03, 0.25, 0.75, 1.0, 3.7):
            assert ident.eval(LogReal.from_float(t)).to_float() == pytest.approx(t, rel=1e-13)

    def test_rejects_increasing_list(self):
        vals = [LogReal.from_float(v) for v in (1.0, 2.0, 1.0)]
        with pytest.raises(SlopeSequenceError) as err:
            slopes_from_list(vals)
        assert err.value.index == 1

    def test_rejects_nonpositive(self):
        with pytest.raises(SlopeSequenceError):
            slopes_from_list([LogReal.from_float(1.0), ZERO])
        with pytest.raises(SlopeSequenceError):
            slopes_pow2_poly(-1.0, 0.0, 0.0)

    def test_list_holds_last_slope(self):
        seq = slopes_from_list([LogReal.from_float(1.0), LogReal.from_float(0.5)])
        assert seq.b(10).to_float() == 0.5


class TestGeometricClosedForm:
    def test_breakpoints(self, geom):
        # M(2^-n) = (2/3) 4^-n
        for n in range(0, 41):
            assert geom.breakpoint_log2(n) == pytest.approx(
                math.log2(2.0 / 3.0) - 2 * n, rel=1e-14, abs=1e-12
            )
            assert geom.breakpoint_value(n).to_float() == pytest.approx(
                (2.0 / 3.0) * 4.0 ** -n, rel=1e-13
            )

    def test_eval_quarter(self, geom):
        assert geom.eval(LogReal.two_pow(-2)).to_float() == pytest.approx(1 / 24, rel=1e-13)

    def test_inverse_of_closed_form(self, geom):
        got = geom.inverse(LogReal.from_float(1 / 24))
        assert got.to_float() == pytest.approx(0.25, rel=1e-13)

    def test_identity_inverse(self, ident):
        assert ident.inverse(LogReal.from_float(0.3)).to_float() == pytest.approx(
            0.3, rel=1e-13
        )
        assert ident.inverse(ZERO) == ZERO


class TestEvalContract:
    def test_zero(self, geom, ident):
        assert geom.eval(ZERO) == ZERO
        assert ident.eval(ZERO) == ZERO

    def test_negative_rejected(self, geom):
        with pytest.raises(ValueError):
            geom.eval(LogReal.from_float(-0.5))
        with pytest.raises(ValueError):
            geom.inverse(LogReal.from_float(-0.5))

    def test_against_mpmath_oracle(self, squares):
        log2b = squares_slopes().log2_slope
        for n in (0, 1, 5, 17, 40):
            want = mp.log(mp_breakpoint(log2b, n), 2)
            assert squares.breakpoint_log2(n) == pytest.approx(float(want), rel=1e-13, abs=1e-10)
        # off-breakpoint points, including above 1
        for t in (0.7, 1.3, 5.0, 0.2, 0.015):
            n = max(0, int(math.floor(-math.log2(t))))
            want = mp_breakpoint(log2b, n + 1) + mp.mpf(2) ** log2b(n) * (
                mp.mpf(t) - mp.mpf(2) ** (-n - 1)
            )
            got = squares.eval(LogReal.from_float(t)).to_float()
            assert got == pytest.approx(float(want), rel=1e-12)

    def test_vectorized_matches_scalar(self, squares):
        import numpy as np

        us = np.array([-50.3, -7.0, -1.0, -0.2, 0.8, -np.inf])
        vec = squares.eval_log2_array(us)
        for u, v in zip(us, vec):
            assert v == pytest.approx(squares.eval_log2(float(u)), rel=1e-15, abs=1e-300) or (
                v == -math.inf and squares.eval_log2(float(u)) == -math.inf
            )


class TestInvariants:
    def test_sandwich_all_fixtures(self):
        # 2^(-n-1) b(n) <= M(2^-n) <= 2^-n b(n), exact up to log slack
        for slopes in (identity_slopes(), geometric_slopes(), squares_slopes()):
            M = make_dyadic_plf(slopes)
            for n in range(0, 65):
                v = M.breakpoint_log2(n)
                assert v >= slopes.log2_slope(n) - n - 1 - 1e-9
                assert v <= slopes.log2_slope(n) - n + 1e-9

    def test_convexity_random(self, squares):
        import random

        rng = random.Random(11)
        for _ in range(400):
            t1 = 2.0 ** rng.uniform(-12, 0)
            t2 = 2.0 ** rng.uniform(-12, 0)
            if t1 > t2:
                t1, t2 = t2, t1
            lam = rng.uniform(0.01, 0.99)
            mid = lam * t1 + (1 - lam) * t2
            lhs = squares.eval(LogReal.from_float(mid)).to_float()
            rhs = lam * squares.eval(LogReal.from_float(t1)).to_float() + (
                1 - lam
            ) * squares.eval(LogReal.from_float(t2)).to_float()
            assert lhs <= rhs * (1 + 1e-10)

    def test_inverse_of_eval_roundtrip(self, squares, geom):
        import random

        rng = random.Random(13)
        for M in (squares, geom):
            for _ in range(300):
                t = LogReal.from_log2(rng.uniform(-40, 0))
                back = M.inverse(M.eval(t))
                assert back.log2mag == pytest.approx(t.log2mag, rel=1e-10, abs=1e-10)

    def test_strictly_increasing(self, squares):
        prev = -math.inf
        for u in [x / 7.0 for x in range(-200, 10)]:
            v = squares.eval_log2(u)
            assert v > prev
            prev = v


class TestRatioInf:
    def test_identity_constant_two(self, ident):
        rep = ratio_inf(ident, 1, LogReal.from_float(0.25))
        assert rep.infimum.to_float() == pytest.approx(2.0, rel=1e-12)
        assert rep.trend == "bounded"

    def test_geometric_constant_four(self, geom):
        rep = ratio_inf(geom, 1, LogReal.from_float(0.25))
        assert rep.infimum.to_float() == pytest.approx(4.0, rel=1e-12)
        assert rep.trend == "bounded"

    def test_squares_increasing_in_depth(self, squares):
        # infimum over (0, 2^-n0] strictly increasing in n0
        prev = -math.inf
        for n0 in range(1, 65):
            rep = ratio_inf(squares, 1, LogReal.two_pow(-n0), depth=32)
            assert rep.infimum.log2mag > prev
            prev = rep.infimum.log2mag
            assert rep.trend == "increasing"

    def test_infimum_at_scanned_points(self, squares):
        for rep in (
            ratio_inf(squares, 2, LogReal.from_float(0.3), depth=20),
            ratio_inf(squares, 1, LogReal.two_pow(-3), depth=20),
        ):
            vals = [v.log2mag for v in rep.values]
            assert rep.infimum.log2mag == min(vals)
            assert rep.supremum.log2mag == max(vals)

    def test_dense_sampling_oracle(self, squares, geom):
        # per-interval monotonicity: scanned minimum must not be undercut by a
        # dense non-breakpoint sampling at depth <= 20
        for M, m in ((squares, 1), (geom, 1), (squares, 3)):
            t_max = LogReal.from_float(0.4)
            rep = ratio_inf(M, m, t_max, depth=20)
            samples = []
            u_top = t_max.log2mag
            for i in range(2000):
                u = u_top - 20.5 * i / 2000
                samples.append(M.eval_log2(u + m) - M.eval_log2(u))
            assert rep.infimum.log2mag <= min(samples) + 1e-9

    def test_t_max_above_half_allowed(self, geom):
        rep = ratio_inf(geom, 1, LogReal.from_float(0.9), depth=16)
        assert rep.infimum.to_float() <= 4.0 + 1e-9

    def test_input_validation(self, geom):
        with pytest.raises(ValueError):
            ratio_inf(geom, 0, LogReal.from_float(0.25))
        with pytest.raises(ValueError):
            ratio_inf(geom, 1, ZERO)

    def test_general_K_fallback_flagged(self, geom):
        rep = ratio_inf_general(geom, 3.0, LogReal.from_float(0.25), depth=16)
        assert rep.approximate
        # for the geometric fixture the ratio at 3x is between the 2x and 4x values
        assert 2.0 - 1e-9 <= rep.infimum.to_float() <= 16.0

    def test_general_K_agrees_with_exact_path_at_powers_of_two(self, squares):
        exact = ratio_inf(squares, 1, LogReal.from_float(0.25), depth=12)
        approx = ratio_inf_general(squares, 2.0, LogReal.from_float(0.25), depth=12)
        # sampling can only miss the infimum from above
        assert approx.infimum.log2mag >= exact.infimum.log2mag - 1e-9
        assert approx.infimum.log2mag <= exact.infimum.log2mag + 0.1

    def test_oscillating_ratio_stays_inconclusive(self):
        # a slope sequence with crashes between flat stretches never settles
        # into a monotone or flat tail, and the scan must say so at any depth
        from orliczlab import gen_sequences

        M = gen_sequences(40).make_function()
        for depth in (16, 32, 64):
            rep = ratio_inf(M, 1, LogReal.from_float(0.5), depth=depth)
            assert rep.trend == "inconclusive"


class TestComputeCq:
    def test_identity_q1(self, ident):
        rep = compute_cq(ident, 1.0, 10, 10)
        assert rep.supremum.to_float() == pytest.approx(1.0, rel=1e-12)
        assert rep.trend == "bounded"

    def test_geometric_q2(self, geom):
        rep = compute_cq(geom, 2.0, 10, 10)
        assert rep.supremum.to_float() == pytest.approx(1.0, rel=1e-12)
        assert rep.trend == "bounded"

    def test_slope_bound_dominates(self, geom, ident):
        for M, q in ((geom, 2.0), (ident, 1.0), (geom, 3.0)):
            rep = compute_cq(M, q, 8, 8)
            assert rep.supremum.log2mag <= rep.aux["slope_bound_log2"] + 1e-9

    def test_counterexample_grid_stabilizes(self):
        # the slow-ratio construction keeps the q = 3 weighted ratio finite,
        # with the supremum attained inside a 30 x 30 grid and dominated by
        # the slope-side bound
        from orliczlab import gen_sequences

        M = gen_sequences(45).make_function()
        rep = compute_cq(M, 3.0, 30, 30)
        assert rep.trend == "bounded"
        assert rep.supremum.log2mag <= rep.aux["slope_bound_log2"] + 1e-9
        am, an = rep.arg_sup
        assert am < 30 and an < 30

    def test_unstable_grid_flagged(self, ident):
        # for q = 2 on the identity fixture the weighted ratio grows with m,
        # so the grid supremum sits on the expanding edge
        rep = compute_cq(ident, 2.0, 6, 6)
        assert rep.trend == "inconclusive"
        assert rep.arg_sup[0] == 6.0


class TestFunctionSpecs:
    def test_pow2_poly_roundtrip(self):
        M = parse_function_spec("kind = pow2_poly\na = 1\nb = 0\nc = 0\n")
        ref = make_dyadic_plf(squares_slopes())
        assert M.breakpoint_log2(7) == pytest.approx(ref.breakpoint_log2(7), rel=1e-15)

    def test_list_spec(self):
        M = parse_function_spec("kind = list\nslopes = 1 2^-1 2^-3\n")
        assert M.slopes.b(1).to_float() == 0.5
        assert M.slopes.b(9).to_float() == 0.125

    def test_counterexample_spec(self):
        M = parse_function_spec("kind = counterexample\ndepth = 8\n")
        assert M.slopes.kind == "counterexample"

    def test_errors(self):
        with pytest.raises(ValueError):
            parse_function_spec("a = 1\n")
        with pytest.raises(ValueError):
            parse_function_spec("kind = wavelet\n")
        with pytest.raises(ValueError):
            parse_function_spec("kind = list\n")
        with pytest.raises(ValueError):
            parse_function_spec("just some text\n")

    def test_comments_and_tail(self):
        M = parse_function_spec("# header\nkind = pow2_poly  # family\na = 0\ntail_rel = 1e-12\n")
        assert M.tail_tol.rel == 1e-12


class TestConcurrentCache:
    def test_breakpoint_cache_under_concurrent_readers(self):
        M = make_dyadic_plf(squares_slopes())
        errors = []

        def worker(seed):
            try:
                for n in range(seed, 400, 7):
                    v = M.breakpoint_log2(n)
                    assert v == M.breakpoint_log2(n)
            except Exception as exc:  # noqa: BLE001
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(s,)) for s in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        # values are the first-computed ones and stay put
        v = M.breakpoint_log2(123)
        assert M.breakpoint_log2(123) == v
