"""Shuffle algebra over words of 1-form labels.

A :class:`Word` is a finite sequence of integer labels referencing positions
in a form basis.  A :class:`GeneralizedWord` is a finite linear combination of
words.  Coefficients are duck-typed and every routine here uses ring
operations only (``+``, ``-``, ``*``), so exact coefficient types survive
untouched: ``int``, ``fractions.Fraction``, Gaussian integers stored as exact
``complex`` all round-trip without floating error.

The letter at index 0 of a word is attached to the *endpoint* of a path and
the letter at index -1 is integrated first at the path start; see
``transport`` for the one place this convention is pinned down.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Hashable, Iterable, Iterator, Mapping

from .errors import MissingLabelError

FormLabel = int


@dataclass(frozen=True)
class Word:
    """An ordered tuple of basis-form labels."""

    letters: tuple[FormLabel, ...] = ()

    def __post_init__(self) -> None:
        letters = tuple(int(a) for a in self.letters)
        if any(a < 0 for a in letters):
            raise ValueError(f"form labels must be non-negative, got {letters}")
        object.__setattr__(self, "letters", letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[FormLabel]:
        return iter(self.letters)

    def __getitem__(self, i: int) -> FormLabel:
        return self.letters[i]

    @property
    def is_empty(self) -> bool:
        return not self.letters

    def concat(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def trailing_run(self, j: FormLabel) -> int:
        """Number of consecutive copies of ``j`` at the right end."""
        n = 0
        for a in reversed(self.letters):
            if a != j:
                break
            n += 1
        return n

    def leading_run(self, j: FormLabel) -> int:
        """Number of consecutive copies of ``j`` at the left end."""
        n = 0
        for a in self.letters:
            if a != j:
                break
            n += 1
        return n

    def drop_trailing(self, k: int) -> "Word":
        return Word(self.letters[: len(self.letters) - k]) if k else self

    def reversed(self) -> "Word":
        return Word(self.letters[::-1])

    def __repr__(self) -> str:
        if not self.letters:
            return "Word()"
        return "Word(%s)" % ",".join(str(a) for a in self.letters)


EMPTY_WORD = Word(())


def word(*letters: FormLabel) -> Word:
    return Word(tuple(letters))


def word_power(j: FormLabel, k: int) -> Word:
    return Word((j,) * k)


def _sort_key(w: Word) -> tuple:
    return (len(w), w.letters)


class GeneralizedWord:
    """Finite linear combination of words with duck-typed coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Word, Any] | Iterable[tuple[Word, Any]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Word, Any] = {}
        for w, c in items:
            if not isinstance(w, Word):
                w = Word(tuple(w))
            if w in acc:
                acc[w] = acc[w] + c
            else:
                acc[w] = c
        self._terms = {w: c for w, c in acc.items() if c != 0}

    @classmethod
    def zero(cls) -> "GeneralizedWord":
        return cls()

    @classmethod
    def of(cls, w: Word | Iterable[FormLabel], coeff: Any = 1) -> "GeneralizedWord":
        if not isinstance(w, Word):
            w = Word(tuple(w))
        return cls({w: coeff})

    @property
    def terms(self) -> dict[Word, Any]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Word, Any]]:
        return iter(sorted(self._terms.items(), key=lambda t: _sort_key(t[0])))

    def coefficient(self, w: Word | Iterable[FormLabel]) -> Any:
        if not isinstance(w, Word):
            w = Word(tuple(w))
        return self._terms.get(w, 0)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def max_length(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GeneralizedWord):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):  # pragma: no cover - mutability guard
        raise TypeError("GeneralizedWord is not hashable")

    def __add__(self, other: "GeneralizedWord") -> "GeneralizedWord":
        acc = dict(self._terms)
        for w, c in other._terms.items():
            acc[w] = acc.get(w, 0) + c
        return GeneralizedWord(acc)

    def __sub__(self, other: "GeneralizedWord") -> "GeneralizedWord":
        acc = dict(self._terms)
        for w, c in other._terms.items():
            acc[w] = acc.get(w, 0) - c
        return GeneralizedWord(acc)

    def __neg__(self) -> "GeneralizedWord":
        return GeneralizedWord({w: -c for w, c in self._terms.items()})

    def scale(self, c: Any) -> "GeneralizedWord":
        return GeneralizedWord({w: c * v for w, v in self._terms.items()})

    def __rmul__(self, c: Any) -> "GeneralizedWord":
        return self.scale(c)

    def __repr__(self) -> str:
        if not self._terms:
            return "GeneralizedWord(0)"
        bits = []
        for w, c in self.items():
            name = "e" if w.is_empty else "".join(f"w{a}" for a in w)
            bits.append(f"{c!r}*{name}")
        return "GeneralizedWord(%s)" % " + ".join(bits)


def _as_gw(w: Word | GeneralizedWord | Iterable[FormLabel]) -> GeneralizedWord:
    if isinstance(w, GeneralizedWord):
        return w
    return GeneralizedWord.of(w)


@lru_cache(maxsize=None)
def _shuffle_letters(a: tuple, b: tuple) -> tuple[tuple[tuple, int], ...]:
    if not a:
        return ((b, 1),)
    if not b:
        return ((a, 1),)
    acc: dict[tuple, int] = {}
    for tail, mult in _shuffle_letters(a[1:], b):
        key = (a[0],) + tail
        acc[key] = acc.get(key, 0) + mult
    for tail, mult in _shuffle_letters(a, b[1:]):
        key = (b[0],) + tail
        acc[key] = acc.get(key, 0) + mult
    return tuple(sorted(acc.items()))


def shuffle(u: Word, v: Word) -> GeneralizedWord:
    """Shuffle product of two plain words; coefficients are multiplicities."""
    return GeneralizedWord(
        {Word(t): m for t, m in _shuffle_letters(u.letters, v.letters)}
    )


def shuffle_gw(u: Word | GeneralizedWord, v: Word | GeneralizedWord) -> GeneralizedWord:
    """Bilinear extension of the shuffle product to generalized words."""
    gu, gv = _as_gw(u), _as_gw(v)
    acc: dict[Word, Any] = {}
    for wu, cu in gu._terms.items():
        for wv, cv in gv._terms.items():
            c = cu * cv
            for t, m in _shuffle_letters(wu.letters, wv.letters):
                key = Word(t)
                acc[key] = acc.get(key, 0) + c * m
    return GeneralizedWord(acc)


def decompose_at(
    w: Word | GeneralizedWord, j: FormLabel
) -> list[tuple[int, GeneralizedWord]]:
    """Write ``w`` as sum_i  w(i) ⧢ j^i  with no word of w(i) ending in ``j``.

    Returns ``[(i, w(i))]`` sorted by increasing power, zero parts dropped.
    The expansion exists and is unique; it is found by repeatedly stripping
    the summands with the maximal trailing run of ``j`` and subtracting their
    shuffle with the corresponding power word.  Ring operations only, so
    exact coefficients stay exact.
    """
    remaining = _as_gw(w).terms
    parts: dict[int, dict[Word, Any]] = {}
    while remaining:
        k = max(wd.trailing_run(j) for wd in remaining)
        bucket = {
            wd.drop_trailing(k): c
            for wd, c in remaining.items()
            if wd.trailing_run(j) == k
        }
        part = parts.setdefault(k, {})
        for wd, c in bucket.items():
            part[wd] = part.get(wd, 0) + c
        if k == 0:
            for wd in bucket:
                remaining.pop(wd, None)
            remaining = {wd: c for wd, c in remaining.items() if c != 0}
            continue
        jk = (j,) * k
        for wd, c in bucket.items():
            for t, m in _shuffle_letters(wd.letters, jk):
                key = Word(t)
                remaining[key] = remaining.get(key, 0) - c * m
        remaining = {wd: c for wd, c in remaining.items() if c != 0}
    out = []
    for i in sorted(parts):
        gw = GeneralizedWord(parts[i])
        if not gw.is_zero:
            out.append((i, gw))
    return out


def decompose_leading(
    w: Word | GeneralizedWord, j: FormLabel
) -> list[tuple[int, GeneralizedWord]]:
    """Write ``w`` as sum_s  j^s ⧢ w(s)  with no word of w(s) starting with ``j``.

    Mirror image of :func:`decompose_at`.  Shuffles commute with word
    reversal, so reversing, stripping trailing runs and reversing back gives
    the expansion on the leading side.
    """

    def rev(gw: GeneralizedWord) -> GeneralizedWord:
        return GeneralizedWord({wd.reversed(): c for wd, c in gw.items()})

    return [(s, rev(gw)) for s, gw in decompose_at(rev(_as_gw(w)), j)]


@dataclass(frozen=True, eq=False)
class DifferentialStructure:
    """Exterior-derivative and wedge tables for a 1-form basis.

    ``d_table[k]`` maps 2-form labels to coefficients of d(w_k);
    ``wedge_table[(a, b)]`` likewise for w_a ∧ w_b.  Missing labels are an
    error rather than an implicit zero; use :meth:`for_curve` for the
    identically-zero tables of a basis of closed forms on a curve.
    """

    d_table: dict[FormLabel, dict[Hashable, Any]]
    wedge_table: dict[tuple[FormLabel, FormLabel], dict[Hashable, Any]] = field(
        default_factory=dict
    )

    def __post_init__(self) -> None:
        for (a, b), tbl in self.wedge_table.items():
            if a == b and any(c != 0 for c in tbl.values()):
                raise ValueError(f"wedge of {a} with itself must vanish")
            rev = self.wedge_table.get((b, a))
            if a != b and rev is not None:
                keys = set(tbl) | set(rev)
                for om in keys:
                    if tbl.get(om, 0) != -rev.get(om, 0):
                        raise ValueError(
                            f"wedge table not antisymmetric at ({a},{b}) label {om!r}"
                        )

    @classmethod
    def for_curve(cls, n_forms: int) -> "DifferentialStructure":
        """Zero tables: every basis form closed, every wedge of multiples of dz zero."""
        d = {k: {} for k in range(n_forms)}
        wedge = {
            (a, b): {} for a in range(n_forms) for b in range(n_forms) if a != b
        }
        return cls(d, wedge)

    def d_of(self, k: FormLabel) -> dict[Hashable, Any]:
        try:
            return self.d_table[k]
        except KeyError:
            raise MissingLabelError(f"no d-table entry for form label {k}") from None

    def wedge_of(self, a: FormLabel, b: FormLabel) -> dict[Hashable, Any]:
        if a == b:
            return {}
        if (a, b) in self.wedge_table:
            return self.wedge_table[(a, b)]
        if (b, a) in self.wedge_table:
            return {om: -c for om, c in self.wedge_table[(b, a)].items()}
        raise MissingLabelError(f"no wedge-table entry for form pair ({a},{b})")


TensorKey = tuple[tuple, Hashable, tuple]


class TensorElement:
    """Linear combination of words carrying exactly one 2-form slot.

    Keys are ``(prefix letters, 2-form label, suffix letters)``; both the
    derivative terms (slot replaces one letter) and the wedge terms (slot
    replaces two adjacent letters) of Chen's D live here.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[TensorKey, Any] | Iterable[tuple[TensorKey, Any]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[TensorKey, Any] = {}
        for k, c in items:
            acc[k] = acc.get(k, 0) + c
        self._terms = {k: c for k, c in acc.items() if c != 0}

    @property
    def terms(self) -> dict[TensorKey, Any]:
        return dict(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TensorElement):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):  # pragma: no cover - mutability guard
        raise TypeError("TensorElement is not hashable")

    def __add__(self, other: "TensorElement") -> "TensorElement":
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0) + c
        return TensorElement(acc)

    def __repr__(self) -> str:
        if not self._terms:
            return "TensorElement(0)"
        return "TensorElement(%d terms)" % len(self._terms)


def chen_d(w: Word | GeneralizedWord, ds: DifferentialStructure) -> TensorElement:
    """Chen's integrability tensor D(w).

    D(w_1⊗…⊗w_r) = Σ_i w_1⊗…⊗dw_i⊗…⊗w_r
                  + Σ_{i<r} w_1⊗…⊗(w_i ∧ w_{i+1})⊗…⊗w_r.
    Vanishing of D on every subword is Chen's criterion for homotopy
    invariance of the iterated integral.
    """
    acc: dict[TensorKey, Any] = {}
    for wd, coeff in _as_gw(w)._terms.items():
        letters = wd.letters
        r = len(letters)
        for i in range(r):
            for om, c in ds.d_of(letters[i]).items():
                key = (letters[:i], om, letters[i + 1 :])
                acc[key] = acc.get(key, 0) + coeff * c
        for i in range(r - 1):
            for om, c in ds.wedge_of(letters[i], letters[i + 1]).items():
                key = (letters[:i], om, letters[i + 2 :])
                acc[key] = acc.get(key, 0) + coeff * c
    return TensorElement(acc)


def is_homotopy_invariant(w: Word | GeneralizedWord, ds: DifferentialStructure) -> bool:
    """True when D(w) = 0, e.g. always for closed forms on a curve."""
    return chen_d(w, ds).is_zero


def word_to_json(w: Word) -> list[int]:
    return list(w.letters)


def word_from_json(data: Iterable[int]) -> Word:
    return Word(tuple(int(a) for a in data))


def gw_to_json(gw: GeneralizedWord) -> list[dict]:
    out = []
    for w, c in gw.items():
        z = complex(c)
        out.append({"word": word_to_json(w), "re": z.real, "im": z.imag})
    return out


def gw_from_json(data: Iterable[Mapping]) -> GeneralizedWord:
    acc: dict[Word, complex] = {}
    for rec in data:
        w = word_from_json(rec["word"])
        c = complex(float(rec.get("re", 0.0)), float(rec.get("im", 0.0)))
        acc[w] = acc.get(w, 0) + c
    return GeneralizedWord(acc)
