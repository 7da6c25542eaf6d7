"""Quadrature engine, noncommutative series, path transport."""

import cmath
import math

import mpmath
import numpy as np
import pytest

from iterint.errors import ConfigError, PoleProximityError, ToleranceError
from iterint.paths import (
    ArcSegment,
    LineSegment,
    LoopSpec,
    Path,
    line_path,
    loop_around,
    reverse,
)
from iterint.surfaces import FormBasis, SurfaceConfig
from iterint.transport import (
    IntegralResult,
    NcSeries,
    all_words,
    compose_series,
    factor_closure,
    invert_series,
    iterated_integral,
    quadrature_nodes,
    segment_transport,
    tail_closure,
    transport_series,
)
import iterint.transport as transport_mod
from iterint.words import EMPTY_WORD, GeneralizedWord, Word, shuffle, word

# frozen references (20-digit evaluations of the classical polylogarithm)
LI2_06 = 0.72758630771633338951
LI3_06 = 0.65600251363298068323


@pytest.fixture(scope="module")
def sphere01():
    s = SurfaceConfig(0, (0, 1))
    return s, FormBasis.genus0(s)


class TestQuadrature:
    def test_integrates_polynomials_exactly(self):
        nodes = quadrature_nodes()
        q = transport_mod._INT_MATRIX
        e = transport_mod._END_ROW
        for d in range(16):
            vals = nodes ** d
            want = nodes ** (d + 1) / (d + 1)
            assert np.max(np.abs(q @ vals - want)) < 1e-15
            assert abs(e @ vals - 1.0 / (d + 1)) < 1e-15


class TestWordSets:
    def test_all_words(self):
        ws = all_words(range(2), 3)
        assert len(ws) == 15
        assert ws[0] is EMPTY_WORD
        assert all(len(a) <= len(b) for a, b in zip(ws, ws[1:]))
        with pytest.raises(ConfigError):
            all_words(range(2), -1)

    def test_factor_closure(self):
        ws = factor_closure([word(0, 1, 2)])
        assert set(ws) == {
            EMPTY_WORD,
            word(0), word(1), word(2),
            word(0, 1), word(1, 2),
            word(0, 1, 2),
        }

    def test_tail_closure(self):
        ws = tail_closure([word(0, 1, 2)])
        assert set(ws) == {EMPTY_WORD, word(2), word(1, 2), word(0, 1, 2)}


class TestNcSeries:
    def test_identity_and_coefficient(self):
        support = all_words(range(2), 2)
        e = NcSeries.identity(support, 2)
        assert e.coefficient(EMPTY_WORD) == 1
        assert e.coefficient(word(0, 1)) == 0
        with pytest.raises(KeyError):
            e.coefficient(word(0, 0, 0))

    def test_generalized_word_coefficient(self):
        s = NcSeries({EMPTY_WORD: 1, word(0): 2.0, word(1): 3.0}, 1)
        gw = GeneralizedWord.of(word(0), 2) - GeneralizedWord.of(word(1))
        assert s.coefficient(gw) == 1.0

    def test_product_concatenation(self):
        support = all_words(range(2), 2)
        a = NcSeries({w: 0j for w in support}, 2)
        b = NcSeries({w: 0j for w in support}, 2)
        a.coeffs[EMPTY_WORD] = 1.0
        b.coeffs[EMPTY_WORD] = 1.0
        a.coeffs[word(0)] = 2.0
        b.coeffs[word(1)] = 3.0
        p = a.product(b)
        assert p.coefficient(word(0, 1)) == 6.0
        assert p.coefficient(word(1, 0)) == 0.0
        assert p.coefficient(word(0)) == 2.0 and p.coefficient(word(1)) == 3.0

    def test_product_drops_uncomputable_words(self):
        # right factor lacks the suffix (0): the word (1, 0) must vanish
        # from the result, not silently become zero
        left = NcSeries({EMPTY_WORD: 1, word(1): 2.0, word(1, 0): 0.5}, 2)
        right = NcSeries({EMPTY_WORD: 1, word(1): 1.0}, 2)
        p = left.product(right)
        assert word(1) in p.coeffs
        assert word(1, 0) not in p.coeffs

    def test_invert(self):
        support = all_words(range(2), 3)
        rng = np.random.default_rng(0)
        coeffs = {w: complex(rng.normal(), rng.normal()) for w in support}
        coeffs[EMPTY_WORD] = 1.0 + 0j
        s = NcSeries(coeffs, 3)
        both = s.product(s.invert())
        assert abs(both.coefficient(EMPTY_WORD) - 1) < 1e-14
        nonzero = max(abs(both.coefficient(w)) for w in support if not w.is_empty)
        assert nonzero < 1e-13

    def test_invert_needs_constant_term(self):
        with pytest.raises(ConfigError):
            NcSeries({EMPTY_WORD: 0j, word(0): 1.0}, 1).invert()
        with pytest.raises(ConfigError):
            NcSeries({word(0): 1.0}, 1).invert()


class TestTransportKnownValues:
    def test_log_four(self, sphere01):
        _, b = sphere01
        r = iterated_integral(line_path(0.2, 0.8), word(0), b)
        assert abs(r.value - math.log(4)) < 1e-13
        assert r.error < 1e-12

    def test_depth_one_log_ratio(self, sphere01):
        _, b = sphere01
        a, z = 0.05, 0.6
        t = transport_series(line_path(a, z), b, depth=1)
        assert abs(t.series.coefficient(word(1)) - cmath.log((1 - z) / (1 - a))) < 1e-14

    def test_from_puncture_gives_polylogs(self, sphere01):
        # V-transport anchored at the puncture 0 for words not ending in 0:
        # the (0,1) coefficient is -Li_2(z) and (0,0,1) is -Li_3(z).  This
        # pins the stored-letter convention.
        _, b = sphere01
        req = [word(0, 1), word(0, 0, 1), word(1)]
        full = factor_closure(req)
        zw = [w for w in tail_closure(req) if w.is_empty or w.letters[-1] != 0]
        series, err = segment_transport(
            b, LineSegment(0.0, 0.6), full, zero_words=zw, exempt=0, tol=1e-13
        )
        assert err < 1e-11
        assert abs(series.coefficient(word(0, 1)) + LI2_06) < 1e-13
        assert abs(series.coefficient(word(0, 0, 1)) + LI3_06) < 1e-13
        assert abs(series.coefficient(word(1)) - math.log(0.4)) < 1e-13

    def test_loop_depth_one(self, sphere01):
        s, b = sphere01
        loop = loop_around(LoopSpec(0, 1, basepoint=0.4 + 0.1j), s)
        t = transport_series(loop, b, depth=1, tol=1e-12)
        assert abs(t.series.coefficient(word(0)) - 2j * math.pi) < 1e-12
        assert abs(t.series.coefficient(word(1))) < 1e-12
        back = loop_around(LoopSpec(0, -2, basepoint=0.4 + 0.1j), s)
        t = transport_series(back, b, depth=1, tol=1e-12)
        assert abs(t.series.coefficient(word(0)) + 4j * math.pi) < 1e-12


class TestTransportProperties:
    def test_shuffle_products(self, sphere01):
        _, b = sphere01
        p = line_path(0.1 + 0.2j, 0.7 + 0.1j)
        pairs = [
            (word(0), word(1)),
            (word(0), word(0, 1)),
            (word(0, 1), word(1, 0)),
        ]
        for u, v in pairs:
            sh = shuffle(u, v)
            r = iterated_integral(p, [u, v, sh], b, tol=1e-13)
            assert abs(r.values[0] * r.values[1] - r.values[2]) < 1e-12

    def test_homotopy_invariance(self, sphere01):
        _, b = sphere01
        straight = line_path(0.2 + 0.1j, 0.8 + 0.1j)
        detour = Path((ArcSegment(0.5 + 0.1j, 0.3, math.pi, 0.0),))
        ta = transport_series(straight, b, depth=3, tol=1e-13).series
        tb = transport_series(detour, b, depth=3, tol=1e-13).series
        assert ta.max_abs_diff(tb) < 1e-11

    def test_compose_matches_direct(self, sphere01):
        _, b = sphere01
        p1 = line_path(0.1 + 0.2j, 0.4 + 0.3j)
        p2 = line_path(0.4 + 0.3j, 0.7 + 0.1j)
        joined = Path(p1.segments + p2.segments)
        direct = transport_series(joined, b, depth=3, tol=1e-13).series
        composed = compose_series(
            transport_series(p2, b, depth=3, tol=1e-13).series,
            transport_series(p1, b, depth=3, tol=1e-13).series,
        )
        assert direct.max_abs_diff(composed) < 1e-12

    def test_reverse_is_inverse(self, sphere01):
        _, b = sphere01
        p = Path(
            (
                LineSegment(0.1 + 0.2j, 0.5 + 0.4j),
                LineSegment(0.5 + 0.4j, 0.7 + 0.1j),
            )
        )
        fwd = transport_series(p, b, depth=3, tol=1e-13).series
        bwd = transport_series(reverse(p), b, depth=3, tol=1e-13).series
        assert bwd.max_abs_diff(invert_series(fwd)) < 1e-11

    def test_differential_at_endpoint(self, sphere01):
        # d/dz L[w] = f_{w[0]}(z) * L[tail of w]
        _, b = sphere01
        a = 0.15 + 0.1j
        z = 0.55 + 0.2j
        h = 1e-5
        w = word(0, 1)
        vals = {}
        for dz in (-h, 0.0, h):
            t = transport_series(line_path(a, z + dz), b, depth=2, tol=1e-13)
            vals[dz] = t.series
        fd = (vals[h].coefficient(w) - vals[-h].coefficient(w)) / (2 * h)
        expect = (1.0 / z) * vals[0.0].coefficient(word(1))
        assert abs(fd - expect) / abs(expect) < 1e-5

    def test_magnitude_bound(self, sphere01):
        # |L_w| <= (sup|g|)^r / r! in the global parametrization
        _, b = sphere01
        p = line_path(0.2 + 0.3j, 0.6 + 0.2j)
        ts = np.linspace(0, 1, 200)
        m = max(
            abs(p.velocity(t)) * max(abs(1.0 / p.point(t)), abs(1.0 / (p.point(t) - 1)))
            for t in ts
        )
        t = transport_series(p, b, depth=4, tol=1e-13).series
        for w in all_words(range(2), 4):
            r = len(w)
            if r:
                assert abs(t.coefficient(w)) <= 1.05 * m ** r / math.factorial(r)

    def test_group_like(self, sphere01):
        # exp-of-Lie shape: every shuffle relation at depth 4 in one sweep
        _, b = sphere01
        t = transport_series(line_path(0.3 + 0.2j, 0.6 + 0.35j), b, depth=4, tol=1e-13).series
        for u, v in (
            (word(0), word(1, 0, 1)),
            (word(0, 1), word(0, 1)),
            (word(1), word(0, 0, 1)),
        ):
            sh = shuffle(u, v)
            assert abs(t.coefficient(u) * t.coefficient(v) - t.coefficient(sh)) < 1e-12

    def test_forced_refinement_converges(self, sphere01):
        # a path passing near the second puncture: coarse sweeps are visibly
        # wrong, forced bisection fixes them
        _, b = sphere01
        p = line_path(0.5 + 0.04j, 1.5 + 0.04j)
        ref = transport_series(p, b, depth=2, tol=1e-13).series
        errs = []
        for force in (0, 2, 4):
            t = transport_series(p, b, depth=2, tol=1e30, force_levels=force).series
            errs.append(ref.max_abs_diff(t))
        assert errs[2] < errs[0]
        assert errs[2] < 1e-8


class TestGuardsAndValidation:
    def test_path_through_pole(self, sphere01):
        _, b = sphere01
        # symmetric hit: quadrature errors cancel to a principal value, so
        # only the geometric pre-flight can catch it
        with pytest.raises(PoleProximityError):
            transport_series(line_path(0.5, 1.5), b, depth=1, tol=1e-12)
        with pytest.raises(PoleProximityError):
            transport_series(line_path(0.5, 1.7), b, depth=1, tol=1e-12)
        # near miss inside the guard band
        with pytest.raises(PoleProximityError):
            transport_series(line_path(0.5 + 1e-8j, 1.5 + 1e-8j), b, depth=1)

    def test_lattice_copy_proximity(self):
        s = SurfaceConfig(1, (0.0, 0.3 + 0.2j), tau=1j)
        b = FormBasis.genus1(s)
        # passes through 1.3+1.2j, a lattice copy of puncture 1
        with pytest.raises(PoleProximityError):
            transport_series(line_path(1.0 + 1.2j, 1.6 + 1.2j), b, depth=1)

    def test_tolerance_error(self, sphere01, monkeypatch):
        _, b = sphere01
        monkeypatch.setattr(transport_mod, "_MAX_LEVEL", 2)
        with pytest.raises(ToleranceError):
            transport_series(line_path(0.5 + 0.04j, 1.5 + 0.04j), b, depth=2, tol=1e-14)

    def test_argument_validation(self, sphere01):
        _, b = sphere01
        p = line_path(0.2, 0.8)
        with pytest.raises(ConfigError):
            transport_series(p, b, depth=2, words=[word(0)])
        with pytest.raises(ConfigError):
            transport_series(p, b)
        with pytest.raises(ConfigError):
            transport_series(p, b, depth=2, tol=0.0)
        with pytest.raises(ConfigError):
            transport_series(p, b, words=[word(5)])
        with pytest.raises(ConfigError):
            transport_series(line_path(0.2, 0.8, reg_start=0), b, depth=1)


class TestIteratedIntegral:
    def test_generalized_word_linearity(self, sphere01):
        _, b = sphere01
        p = line_path(0.2 + 0.1j, 0.6 + 0.3j)
        gw = GeneralizedWord.of(word(0), 2) - GeneralizedWord.of(word(1))
        r = iterated_integral(p, [gw, word(0), word(1)], b)
        assert abs(r.values[0] - (2 * r.values[1] - r.values[2])) < 1e-14

    def test_empty_word(self, sphere01):
        _, b = sphere01
        r = iterated_integral(line_path(0.2, 0.8), EMPTY_WORD, b)
        assert r.value == 1.0

    def test_zero_generalized_word(self, sphere01):
        _, b = sphere01
        r = iterated_integral(line_path(0.2, 0.8), GeneralizedWord.zero(), b)
        assert r.value == 0j

    def test_path_id_and_errors(self, sphere01):
        _, b = sphere01
        p = line_path(0.2, 0.8)
        r = iterated_integral(p, word(0), b)
        assert r.path_id == p.content_id()
        assert isinstance(r, IntegralResult)
        with pytest.raises(ConfigError):
            iterated_integral(p, "01", b)
        with pytest.raises(ConfigError):
            iterated_integral(p, [word(0), word(1)], b).value
