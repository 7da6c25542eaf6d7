"""Regularized transport from punctures, zeta values, associators, monodromy.

A path that starts on a puncture has divergent iterated integrals whenever
the innermost form is the one with a pole there.  The finite part kept here
is the epsilon-limit of the integral from a point at distance epsilon after
subtracting a_k log(epsilon); words are reduced to that single scalar by the
shuffle decomposition, so the state of a regularized transport is the pair

    (V, lam):  V  transports the words not ending in the distinguished
               letter (their innermost integrals converge),
    lam        is the regularized line integral of the distinguished form,

and any requested word assembles as  sum_i lam^i/i! * V[w(i)].

Limits toward a second puncture are taken on a geometric radius ladder: the
values carry powers of log r whose coefficients are recovered by weighted
least squares, the constant term being the multiple zeta value.  Words that
begin with the singular letter of the target are first rewritten, through
the mirror-image shuffle decomposition, in terms of words that do not; this
keeps every fit free of log powers in its leading column, which is what
makes the 1e-8 targets reachable in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    ConventionError,
    EndpointMismatchError,
    FitError,
    MissingLabelError,
    NotGoodPunctureError,
    PoleProximityError,
    ToleranceError,
)
from .paths import (
    LineSegment,
    LoopSpec,
    Path,
    Segment,
    line_path,
    log_variation,
    loop_around,
)
from .surfaces import (
    FormBasis,
    dlog_theta,
    dlog_theta_sub,
    eval_form,
    lattice_distance,
)
from .transport import (
    NcSeries,
    _END_ROW,
    _NODES,
    all_words,
    factor_closure,
    segment_transport,
    tail_closure,
    transport_series,
)
from .words import (
    EMPTY_WORD,
    GeneralizedWord,
    Word,
    _as_gw,
    decompose_at,
    decompose_leading,
    word,
)

_START_TOL = 1e-12
_SCALAR_MAX_LEVEL = 40
_LADDER_RATIO = 0.05
_LADDER_RUNGS = 14
_GUARD_MARGIN = 3.0


@dataclass(frozen=True)
class GoodPunctureCtx:
    """A puncture at which exactly one basis form has a (simple) pole, with
    residue 1; regularization is only defined at such punctures."""

    puncture: int
    form_label: int
    residue_probe: complex


def good_puncture_ctx(basis: FormBasis, j: int) -> GoodPunctureCtx:
    if not 0 <= j < basis.surface.n_punctures:
        raise ConfigError(f"puncture index {j} out of range")
    singular = basis.singular_forms_at(j)
    if len(singular) != 1:
        raise NotGoodPunctureError(
            f"puncture {j} appears in {len(singular)} basis forms; need exactly one"
        )
    label = singular[0]
    if basis.residue(label, j) != 1:
        raise NotGoodPunctureError(
            f"form {label} has residue {basis.residue(label, j)} at puncture {j}, need +1"
        )
    eps = 1e-5
    probe_pt = basis.surface.punctures[j] + eps * complex(0.6, 0.8)
    probe = eps * complex(0.6, 0.8) * eval_form(basis, label, probe_pt, guard=0.0)
    if abs(probe - 1.0) > 1e-3:
        raise NotGoodPunctureError(
            f"numeric residue probe {probe} at puncture {j} is not 1"
        )
    return GoodPunctureCtx(j, label, probe)


def _puncture_at(basis: FormBasis, z: complex, hint: int | None) -> int:
    if hint is not None:
        if abs(z - basis.surface.punctures[hint]) > _START_TOL:
            raise EndpointMismatchError(
                f"path start {z} is not puncture {hint} "
                f"({basis.surface.punctures[hint]})"
            )
        return hint
    for idx, p in enumerate(basis.surface.punctures):
        if abs(z - p) <= _START_TOL:
            return idx
    raise EndpointMismatchError(f"path start {z} does not sit on a puncture")


# ---------------------------------------------------------------------------
# scalar quadrature


def _gl_segment(fn, seg: Segment, a: float, b: float) -> complex:
    h = b - a
    total = 0j
    for x, wgt in zip(_NODES, _END_ROW):
        t = a + h * x
        total += wgt * fn(seg.point(t)) * seg.velocity(t)
    return h * total


def _scalar_adaptive(
    fn, seg: Segment, a: float, b: float, tol: float, level: int = 0
) -> tuple[complex, float]:
    mid = 0.5 * (a + b)
    direct = _gl_segment(fn, seg, a, b)
    halves = _gl_segment(fn, seg, a, mid) + _gl_segment(fn, seg, mid, b)
    diff = abs(direct - halves)
    if diff < tol:
        return halves, diff
    if level >= _SCALAR_MAX_LEVEL:
        raise ToleranceError(
            f"scalar refinement stalled at level {level} (residual {diff:.3g})"
        )
    left, el = _scalar_adaptive(fn, seg, a, mid, 0.5 * tol, level + 1)
    right, er = _scalar_adaptive(fn, seg, mid, b, 0.5 * tol, level + 1)
    return left + right, el + er


# ---------------------------------------------------------------------------
# regularized line integral


@dataclass(frozen=True)
class RegularizedValue:
    """Finite part of a line integral from a puncture.

    ``log_coefficient`` is the residue a_k of the form at the start puncture
    (the coefficient of the subtracted a_k log(epsilon)); zero for forms
    regular there.  ``direction`` is the unit start direction of the path.
    """

    value: complex
    log_coefficient: complex
    direction: complex
    error: float


def _subtracted_integrand(basis: FormBasis, k: int, j: int):
    """f_k(z) - res_j(f_k)/(z - P_j), in a form stable near P_j.

    Returns None when the difference vanishes identically.
    """
    f = basis.forms[k]
    s = basis.surface
    p_j = s.punctures[j]
    if f.kind == "genus0_log" and f.pole == j:
        return None
    if f.kind == "elliptic_log" and j in (f.k1, f.k2):
        other = f.k2 if f.k1 == j else f.k1
        sign = 1.0 if f.k1 == j else -1.0
        p_o = s.punctures[other]
        theta = basis.theta
        guard = s.pole_guard

        def h(z: complex) -> complex:
            if lattice_distance(z - p_o, s.tau) < guard:
                raise PoleProximityError(
                    f"evaluation {z} within {guard} of puncture {other} (mod lattice)"
                )
            return sign * (dlog_theta_sub(z - p_j, theta) - dlog_theta(z - p_o, theta))

        return h
    return lambda z: eval_form(basis, k, z)


def reg_line_integral(
    path: Path, k: int, basis: FormBasis, *, tol: float = 1e-12
) -> RegularizedValue:
    """Regularized integral of form ``k`` along a path starting on a puncture.

    The local residue part a_k dz/(z - P_j) integrates in closed form (its
    epsilon-limit is the log variation along the path); the remainder is
    analytic at the start and integrates numerically.
    """
    if not 0 <= k < basis.n_forms:
        raise ConfigError(f"form label {k} out of range")
    j = _puncture_at(basis, path.start, path.reg_start)
    res = basis.residue(k, j)
    integrand = _subtracted_integrand(basis, k, j)
    total = 0j
    err = 0.0
    if integrand is not None:
        seg_tol = tol / len(path.segments)
        for seg in path.segments:
            piece, piece_err = _scalar_adaptive(integrand, seg, 0.0, 1.0, seg_tol)
            total += piece
            err += piece_err
    if res:
        total += res * log_variation(path, basis.surface.punctures[j])
    return RegularizedValue(total, complex(res), path.start_direction(), err)


# ---------------------------------------------------------------------------
# regularized transport


class RegularizedTransport:
    """Iterated integrals along a path whose start sits on a good puncture.

    March segments with :meth:`extend`; read off values of arbitrary words
    (including those ending in the distinguished letter) with :meth:`value`.
    """

    def __init__(
        self,
        basis: FormBasis,
        ctx: GoodPunctureCtx,
        requested: tuple[Word, ...],
        v_series: NcSeries,
        words_full: list[Word],
        lam: complex,
        end: complex,
        error: float,
        tol: float,
    ):
        self.basis = basis
        self.ctx = ctx
        self._requested = requested
        self._v = v_series
        self._words_full = words_full
        self._lam = lam
        self._end = end
        self._error = error
        self._tol = tol
        self._parts: dict[Word, list] = {}

    @classmethod
    def along(
        cls,
        path: Path,
        basis: FormBasis,
        *,
        depth: int | None = None,
        words: Iterable[Word] | None = None,
        puncture: int | None = None,
        tol: float = 1e-12,
        force_levels: int = 0,
    ) -> "RegularizedTransport":
        if (depth is None) == (words is None):
            raise ConfigError("give exactly one of depth= or words=")
        if depth is not None:
            requested = tuple(all_words(range(basis.n_forms), depth))
        else:
            requested = tuple(
                w if isinstance(w, Word) else Word(tuple(w)) for w in words
            )
            for w in requested:
                if any(a >= basis.n_forms for a in w.letters):
                    raise ConfigError(f"word {w} uses letters outside the basis")
        hint = puncture if puncture is not None else path.reg_start
        j = _puncture_at(basis, path.start, hint)
        ctx = good_puncture_ctx(basis, j)
        kj = ctx.form_label

        part_words = {word(kj)}
        for w in requested:
            for _, gw in decompose_at(w, kj):
                part_words.update(gw.terms)
        v_support = tail_closure(part_words - {word(kj)})
        words_full = factor_closure(set(requested) | part_words)

        segs = path.segments
        seg_tol = tol / len(segs)
        v_series, err = segment_transport(
            basis,
            segs[0],
            words_full,
            zero_words=v_support,
            exempt=j,
            tol=seg_tol,
            force_levels=force_levels,
        )
        reg = reg_line_integral(Path((segs[0],)), kj, basis, tol=seg_tol)
        lam = reg.value
        err += reg.error
        out = cls(
            basis,
            ctx,
            requested,
            v_series,
            words_full,
            lam,
            segs[0].point(1.0),
            err,
            tol,
        )
        for seg in segs[1:]:
            out.extend(seg, tol=seg_tol)
        return out

    def extend(self, seg: Segment, *, tol: float | None = None) -> None:
        """Transport across one more segment chained to the current end."""
        if abs(seg.point(0.0) - self._end) > _START_TOL:
            raise EndpointMismatchError(
                f"segment starts at {seg.point(0.0)}, transport ends at {self._end}"
            )
        t, err = segment_transport(
            self.basis, seg, self._words_full, tol=tol if tol is not None else self._tol
        )
        self._v = t.product(self._v)
        self._lam += t.coefficient(word(self.ctx.form_label))
        self._end = seg.point(1.0)
        self._error += err

    @property
    def end(self) -> complex:
        return self._end

    @property
    def lam(self) -> complex:
        """Regularized integral of the distinguished form up to the current end."""
        return self._lam

    @property
    def error(self) -> float:
        return self._error

    def _word_value(self, w: Word) -> complex:
        if w.is_empty:
            return 1.0 + 0j
        parts = self._parts.get(w)
        if parts is None:
            parts = decompose_at(w, self.ctx.form_label)
            self._parts[w] = parts
        total = 0j
        try:
            for i, gw in parts:
                inner = sum(c * self._v.coefficient(u) for u, c in gw.items())
                total += self._lam ** i / math.factorial(i) * inner
        except KeyError:
            raise MissingLabelError(
                f"word {w} was not part of the transported set"
            ) from None
        return total

    def value(self, w) -> complex:
        """Regularized iterated integral of a word or generalized word."""
        gw = _as_gw(w)
        return sum((c * self._word_value(wd) for wd, c in gw.items()), 0j)

    def series(self) -> NcSeries:
        """All requested words as a series (support as requested)."""
        coeffs = {wd: self._word_value(wd) for wd in self._requested}
        coeffs[EMPTY_WORD] = 1.0 + 0j
        depth = max((len(wd) for wd in self._requested), default=0)
        return NcSeries(coeffs, depth)


def reg_iterated(path: Path, w, basis: FormBasis, *, tol: float = 1e-12) -> complex:
    """Regularized iterated integral of ``w`` along a path from a good puncture."""
    gw = _as_gw(w)
    needed = list(gw.terms) or [EMPTY_WORD]
    rt = RegularizedTransport.along(path, basis, words=needed, tol=tol)
    return rt.value(gw)


# ---------------------------------------------------------------------------
# asymptotic limits at a second puncture


@dataclass(frozen=True)
class AsymptoticExpansion:
    """Limit expansion  Li(z) = sum_t a_t log^t r + o(1)  as z -> P_target
    along the recorded direction, r = |z - P_target|."""

    target: int
    base: int
    word: GeneralizedWord
    coefficients: tuple[complex, ...]
    error: float
    direction: complex

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1


def _ladder_radii(r0: float, n_pts: int, floor: float) -> list[float]:
    """Geometric half-ladder r0 * 2^-m; finer half-steps are appended when
    more points are needed, coarser ones as a last resort."""
    exponents = [float(m) for m in range(_LADDER_RUNGS)]
    exponents += [_LADDER_RUNGS - 0.5 - k for k in range(_LADDER_RUNGS - 1)]
    radii = []
    for m in exponents:
        r = r0 * 2.0 ** -m
        if r > floor:
            radii.append(r)
        if len(radii) == n_pts:
            return sorted(radii, reverse=True)
    raise FitError(
        f"only {len(radii)} ladder points clear the pole guard, need {n_pts}; "
        "punctures too close for the requested word"
    )


def _ladder_fit(
    radii: np.ndarray, values: np.ndarray, r0: float, q_max: int, t1: int
) -> tuple[complex, float]:
    """Constant term of  y = a0 + sum_q (r/r0)^q * P_q(log r),  deg P_q <= t1.

    Weighted toward the fine end; the error estimate combines the residual
    with the shift seen when the two coarsest rungs are dropped.
    """
    x = np.log(radii)
    cols = [np.ones_like(x, dtype=complex)]
    for q in range(1, q_max + 1):
        base = (radii / r0) ** q
        for s in range(t1 + 1):
            cols.append(base * x ** s)
    a = np.column_stack(cols)
    wts = (r0 / radii) ** 2
    aw = a * wts[:, None]
    yw = values * wts
    coef, *_ = np.linalg.lstsq(aw, yw, rcond=None)
    trimmed, *_ = np.linalg.lstsq(aw[2:], yw[2:], rcond=None)
    # first-order noise propagation to the constant term, plus the shift
    # seen when the two coarsest rungs (the truncation-dominated ones) drop
    resid = aw @ coef - yw
    dof = max(1, len(yw) - aw.shape[1])
    sigma = math.sqrt(float((np.abs(resid) ** 2).sum()) / dof)
    gain = float(np.linalg.norm(np.linalg.pinv(aw)[0]))
    err = abs(coef[0] - trimmed[0]) + sigma * gain
    return complex(coef[0]), err


def asymptotic_expansion(
    basis: FormBasis,
    i: int,
    j: int,
    w,
    *,
    tol: float = 1e-12,
    analytic_degree: int = 3,
) -> AsymptoticExpansion:
    """Expansion of the regularized integral from P_j as the end approaches P_i.

    Words beginning with the distinguished letter of P_i are rewritten by the
    leading-side shuffle decomposition, so every fitted quantity tends to a
    plain limit; log powers re-enter only through the exactly transported
    depth-one integral.
    """
    if i == j:
        raise ConfigError("target and base punctures must differ")
    ctx_i = good_puncture_ctx(basis, i)
    good_puncture_ctx(basis, j)
    gw = _as_gw(w)
    if gw.is_zero:
        return AsymptoticExpansion(i, j, gw, (0j,), 0.0, 1.0 + 0j)

    ki = ctx_i.form_label
    parts = decompose_leading(gw, ki)
    t1 = gw.max_length()
    p_i = basis.surface.punctures[i]
    p_j = basis.surface.punctures[j]
    direction = (p_j - p_i) / abs(p_j - p_i)
    r0 = _LADDER_RATIO * abs(p_j - p_i)

    n_unknowns = 1 + analytic_degree * (t1 + 1)
    n_pts = max(_LADDER_RUNGS, n_unknowns + 4)
    radii = _ladder_radii(r0, n_pts, _GUARD_MARGIN * basis.surface.pole_guard)
    points = [p_i + r * direction for r in radii]

    needed = {word(ki)}
    for _, g in parts:
        needed.update(g.terms)
    rt = RegularizedTransport.along(
        line_path(p_j, points[0]),
        basis,
        words=sorted(needed, key=lambda wd: (len(wd), wd.letters)),
        puncture=j,
        tol=tol,
    )
    u_vals = [rt.value(word(ki))]
    part_vals: dict[int, list[complex]] = {s: [rt.value(g)] for s, g in parts}
    for prev, nxt in zip(points, points[1:]):
        rt.extend(LineSegment(prev, nxt))
        u_vals.append(rt.value(word(ki)))
        for s, g in parts:
            part_vals[s].append(rt.value(g))

    rs = np.array(radii)
    log_r = np.log(rs)
    c_const, c_err = _ladder_fit(
        rs, np.array(u_vals, dtype=complex) - log_r, r0, analytic_degree, 1
    )
    fitted = {
        s: _ladder_fit(rs, np.array(vals, dtype=complex), r0, analytic_degree, t1)
        for s, vals in part_vals.items()
    }

    t0 = max(fitted)
    coeffs = []
    for t in range(t0 + 1):
        total = 0j
        for s, (a_s, _) in fitted.items():
            if s >= t:
                total += (
                    c_const ** (s - t)
                    / (math.factorial(t) * math.factorial(s - t))
                    * a_s
                )
        coeffs.append(total)

    bound = abs(c_const) + c_err
    err = rt.error
    for s, (a_s, e_s) in fitted.items():
        err += bound ** s / math.factorial(s) * e_s
        if s >= 1:
            err += s * bound ** (s - 1) / math.factorial(s) * abs(a_s) * c_err
    return AsymptoticExpansion(i, j, gw, tuple(coeffs), err, direction)


def mzv(basis: FormBasis, i: int, j: int, w, *, tol: float = 1e-12) -> complex:
    """Constant term of the asymptotic expansion: the multiple zeta value."""
    return asymptotic_expansion(basis, i, j, w, tol=tol).coefficients[0]


def zeta_word(n: int) -> GeneralizedWord:
    """Generalized word whose mzv on the sphere {0, 1} with i=1, j=0 is zeta(n).

    The minus sign compensates the orientation of the transport convention
    (the plain word evaluates to -Li_n at the endpoint).
    """
    if not isinstance(n, int) or n < 2:
        raise ConfigError("zeta(n) needs an integer n >= 2")
    return GeneralizedWord({Word((0,) * (n - 1) + (1,)): -1})


# ---------------------------------------------------------------------------
# associator and monodromy


@dataclass(frozen=True)
class AssociatorSeries:
    """The change-of-basepoint series  L_i(z)^{-1} L_j(z),  z-independent."""

    i: int
    j: int
    series: NcSeries
    probe_residual: float
    error: float


def associator(
    basis: FormBasis,
    i: int,
    j: int,
    *,
    depth: int,
    probe_fractions: Sequence[float] = (0.5, 0.3),
    tol: float = 1e-12,
    consistency_tol: float = 1e-6,
) -> AssociatorSeries:
    """Associator between the regularized transports based at P_i and P_j.

    Computed at interior probe points on the connecting line; disagreement
    between probes signals a convention or depth error and raises.
    """
    if i == j:
        raise ConfigError("associator needs two distinct punctures")
    if len(probe_fractions) < 2:
        raise ConfigError("need at least two probe fractions")
    p_i = basis.surface.punctures[i]
    p_j = basis.surface.punctures[j]
    results = []
    errors = []
    for f in probe_fractions:
        if not 0.0 < f < 1.0:
            raise ConfigError("probe fractions must be strictly inside (0, 1)")
        z = p_j + f * (p_i - p_j)
        l_i = RegularizedTransport.along(
            line_path(p_i, z), basis, depth=depth, puncture=i, tol=tol
        )
        l_j = RegularizedTransport.along(
            line_path(p_j, z), basis, depth=depth, puncture=j, tol=tol
        )
        results.append(l_i.series().invert().product(l_j.series()))
        errors.append(l_i.error + l_j.error)
    residual = max(results[0].max_abs_diff(r) for r in results[1:])
    if residual > consistency_tol:
        raise ConventionError(
            f"associator probes disagree by {residual:.3g} "
            f"(tolerance {consistency_tol:.3g})"
        )
    return AssociatorSeries(i, j, results[0], residual, max(errors) + residual)


def monodromy(
    basis: FormBasis,
    loop: LoopSpec,
    j: int,
    *,
    depth: int,
    tol: float = 1e-12,
) -> NcSeries:
    """Analytic continuation of the regularized transport L_j around a loop.

    Returns the continued series at the loop basepoint: the loop transport
    composed with L_j(basepoint).  Regularized values depend on the approach
    direction at P_j (the leg here is the straight line from P_j); to compare
    against an associator, place the basepoint on the segment between the two
    punctures so the directions agree with its convention.
    """
    circuit = loop_around(loop, basis.surface)
    l_j = RegularizedTransport.along(
        line_path(basis.surface.punctures[j], loop.basepoint),
        basis,
        depth=depth,
        puncture=j,
        tol=tol,
    )
    around = transport_series(circuit, basis, depth=depth, tol=tol)
    return around.series.product(l_j.series())


# ---------------------------------------------------------------------------
# tables


@dataclass(frozen=True)
class MzvRow:
    i: int
    j: int
    word: Word
    value: complex
    error: float


@dataclass(frozen=True)
class MzvTable:
    """Computed zeta values keyed by (target, base, word)."""

    rows: tuple[MzvRow, ...]

    @classmethod
    def compute(
        cls,
        basis: FormBasis,
        entries: Iterable[tuple[int, int, Word]],
        *,
        tol: float = 1e-12,
    ) -> "MzvTable":
        rows = []
        for i, j, wd in entries:
            if not isinstance(wd, Word):
                wd = Word(tuple(wd))
            exp = asymptotic_expansion(basis, i, j, wd, tol=tol)
            rows.append(MzvRow(i, j, wd, exp.coefficients[0], exp.error))
        rows.sort(key=lambda r: (r.i, r.j, len(r.word), r.word.letters))
        return cls(tuple(rows))

    def value(self, i: int, j: int, wd: Word) -> complex:
        for row in self.rows:
            if (row.i, row.j, row.word) == (i, j, wd):
                return row.value
        raise MissingLabelError(f"no table entry for ({i}, {j}, {wd})")

    def to_csv(self) -> str:
        lines = ["i,j,word,re,im,err"]
        for r in self.rows:
            word_s = "-".join(str(a) for a in r.word.letters)
            lines.append(
                f"{r.i},{r.j},{word_s},{r.value.real:.17g},"
                f"{r.value.imag:.17g},{r.error:.3e}"
            )
        return "\n".join(lines) + "\n"
