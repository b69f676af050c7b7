"""Symbol sequences over {-1, +1} and the classes M, P_N, S_N."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

MIN_RUN = 3
MIN_PERIOD = 6


class SymbolError(ValueError):
    """Raised for malformed words or sequences outside the admissible classes."""


def parse_word(text: str) -> tuple[int, ...]:
    """'+++---' -> (1, 1, 1, -1, -1, -1)."""
    text = text.strip()
    if not text:
        raise SymbolError("empty symbol word")
    out = []
    for ch in text:
        if ch == "+":
            out.append(1)
        elif ch in "-−":
            out.append(-1)
        else:
            raise SymbolError(f"invalid symbol {ch!r} in {text!r}; use '+' and '-'")
    return tuple(out)


def format_word(symbols: Sequence[int]) -> str:
    return "".join("+" if s > 0 else "-" for s in symbols)


def _coerce(symbols) -> tuple[int, ...]:
    if isinstance(symbols, str):
        return parse_word(symbols)
    if isinstance(symbols, SymbolWord):
        return symbols.symbols
    out = tuple(int(s) for s in symbols)
    if not out:
        raise SymbolError("empty symbol word")
    if any(s not in (-1, 1) for s in out):
        raise SymbolError("symbols must be -1 or +1")
    return out


@dataclass(frozen=True)
class SymbolWord:
    symbols: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", _coerce(self.symbols))

    def __len__(self):
        return len(self.symbols)

    def __getitem__(self, i):
        return self.symbols[i]

    def __str__(self):
        return format_word(self.symbols)


def runs(symbols, cyclic: bool = False) -> list[tuple[int, int]]:
    """Maximal runs as (sign, length) pairs, in order.

    In cyclic mode a leading run that continues the trailing one is folded
    into the trailing run.
    """
    s = _coerce(symbols)
    out: list[list[int]] = []
    for v in s:
        if out and out[-1][0] == v:
            out[-1][1] += 1
        else:
            out.append([v, 1])
    if cyclic and len(out) > 1 and out[0][0] == out[-1][0]:
        first = out.pop(0)
        out[-1][1] += first[1]
    return [(sgn, n) for sgn, n in out]


def block_lengths(symbols, cyclic: bool = False) -> list[int]:
    return [n for _, n in runs(symbols, cyclic)]


def in_M(symbols, cyclic: bool = True) -> bool:
    """Every run of equal symbols has length >= 3.

    For a cyclic word this is membership of its periodic extension in M;
    a constant word is in M (its single run is infinite).
    """
    if isinstance(symbols, ConnectionSpec):
        return symbols.check_runs() is None
    return all(n >= MIN_RUN for n in block_lengths(symbols, cyclic))


@dataclass(frozen=True)
class PeriodicSymbols:
    """Periodic sequence b with b_n = word[n mod N], validated against P_N."""

    word: SymbolWord

    def __post_init__(self):
        w = self.word if isinstance(self.word, SymbolWord) else SymbolWord(self.word)
        object.__setattr__(self, "word", w)
        s = w.symbols
        if len(s) < MIN_PERIOD:
            raise SymbolError(f"period N={len(s)} < {MIN_PERIOD}")
        if len(set(s)) == 1:
            raise SymbolError("constant sequences e+ / e- are excluded from P_N")
        short = [n for n in block_lengths(s, cyclic=True) if n < MIN_RUN]
        if short:
            raise SymbolError(
                f"word {format_word(s)} has a cyclic run of length {min(short)} < {MIN_RUN}"
            )

    @classmethod
    def parse(cls, text: str) -> "PeriodicSymbols":
        return cls(SymbolWord(parse_word(text)))

    @property
    def N(self) -> int:
        return len(self.word)

    @property
    def symbols(self) -> tuple[int, ...]:
        return self.word.symbols

    def __call__(self, n: int) -> int:
        return self.word.symbols[n % self.N]

    at = __call__

    @property
    def symmetric(self) -> bool:
        return in_S(self)

    def repeat(self, k: int) -> "PeriodicSymbols":
        if k < 1:
            raise SymbolError("repeat count must be >= 1")
        return PeriodicSymbols(SymbolWord(self.symbols * k))

    def shifted(self, s: int) -> "PeriodicSymbols":
        """Sequence n -> b_{n+s}."""
        return PeriodicSymbols(SymbolWord(tuple(self(n + s) for n in range(self.N))))

    def negated(self) -> "PeriodicSymbols":
        return PeriodicSymbols(SymbolWord(tuple(-v for v in self.symbols)))

    def __str__(self):
        return str(self.word)


def in_S(b: PeriodicSymbols) -> bool:
    N = b.N
    return all(b.symbols[j] == b.symbols[(N - j) % N] for j in range(N))


def _as_periodic(b) -> PeriodicSymbols:
    if isinstance(b, PeriodicSymbols):
        return b
    return PeriodicSymbols.parse(b) if isinstance(b, str) else PeriodicSymbols(SymbolWord(b))


@dataclass(frozen=True)
class ConnectionSpec:
    """Bi-infinite sequence a built from tails b-/b+ and a middle word.

    The middle occupies [K_minus, K_plus]; a_n = b-_n below and b+_n above.
    The tight offsets are available via ``kpm_offsets``.
    """

    b_minus: PeriodicSymbols
    b_plus: PeriodicSymbols
    middle: SymbolWord
    K_minus: int
    K_plus: int

    def __post_init__(self):
        object.__setattr__(self, "b_minus", _as_periodic(self.b_minus))
        object.__setattr__(self, "b_plus", _as_periodic(self.b_plus))
        if not isinstance(self.middle, SymbolWord):
            object.__setattr__(self, "middle", SymbolWord(_coerce(self.middle)))
        if self.K_minus >= self.K_plus:
            raise SymbolError("need K_minus < K_plus")
        if len(self.middle) != self.K_plus - self.K_minus + 1:
            raise SymbolError(
                f"middle has length {len(self.middle)}, expected "
                f"K_plus - K_minus + 1 = {self.K_plus - self.K_minus + 1}"
            )
        for name, b in (("b_minus", self.b_minus), ("b_plus", self.b_plus)):
            if not in_S(b):
                raise SymbolError(f"{name}={b} is not symmetric (not in S_N)")
        problem = self.check_runs()
        if problem:
            raise SymbolError(problem)
        if self.kpm_offsets() == (None, None):
            raise SymbolError("sequence coincides with its tails everywhere: no connection problem")

    @classmethod
    def build(cls, b_minus, b_plus, middle, K_minus: Optional[int] = None, K_plus: Optional[int] = None):
        mid = SymbolWord(_coerce(middle))
        if K_minus is None and K_plus is None:
            K_minus = 0
        if K_minus is None:
            K_minus = K_plus - len(mid) + 1
        if K_plus is None:
            K_plus = K_minus + len(mid) - 1
        return cls(_as_periodic(b_minus), _as_periodic(b_plus), mid, int(K_minus), int(K_plus))

    def __call__(self, n: int) -> int:
        if n < self.K_minus:
            return self.b_minus(n)
        if n > self.K_plus:
            return self.b_plus(n)
        return self.middle.symbols[n - self.K_minus]

    def window(self, lo: int, hi: int) -> tuple[int, ...]:
        return tuple(self(n) for n in range(lo, hi + 1))

    @property
    def homoclinic(self) -> bool:
        return self.b_minus.symbols == self.b_plus.symbols

    def _pad(self) -> int:
        return 2 * max(self.b_minus.N, self.b_plus.N)

    def check_runs(self) -> Optional[str]:
        """None if the assembled sequence lies in M, else a diagnostic."""
        lo = self.K_minus - self._pad()
        hi = self.K_plus + self._pad()
        rs = runs(self.window(lo, hi))
        # the outermost runs are cut by the window; they live in the periodic tails
        n = lo
        for i, (sgn, length) in enumerate(rs):
            if 0 < i < len(rs) - 1 and length < MIN_RUN:
                return f"run of length {length} starting at n={n} violates M (need >= {MIN_RUN})"
            n += length
        return None

    def kpm_offsets(self) -> tuple[Optional[int], Optional[int]]:
        """Tight (K-, K+): first deviation from b-, last from b+."""
        span = self.b_minus.N * self.b_plus.N
        k_plus = None
        for n in range(self.K_plus, self.K_minus - span - 1, -1):
            if self(n) != self.b_plus(n):
                k_plus = n
                break
        k_minus = None
        for n in range(self.K_minus, self.K_plus + span + 1):
            if self(n) != self.b_minus(n):
                k_minus = n
                break
        return k_minus, k_plus

    def offsets(self) -> tuple[int, int]:
        """Ordered defect region [K-, K+] satisfying the tail hypothesis.

        Equal to the tight values when those are ordered.  For an abrupt
        heteroclinic junction they come out reversed, and we return them
        swapped (widened by one if they coincide).
        """
        km, kp = self.kpm_offsets()
        if km is None:
            km = kp
        if kp is None:
            kp = km
        lo, hi = min(km, kp), max(km, kp)
        if lo == hi:
            hi = lo + 1
        return lo, hi

    def reflected(self) -> "ConnectionSpec":
        """Spec of n -> a_{-n}; tails swap (they are symmetric)."""
        return ConnectionSpec(
            self.b_plus,
            self.b_minus,
            SymbolWord(tuple(reversed(self.middle.symbols))),
            -self.K_plus,
            -self.K_minus,
        )

    def negated(self) -> "ConnectionSpec":
        return ConnectionSpec(
            self.b_minus.negated(),
            self.b_plus.negated(),
            SymbolWord(tuple(-v for v in self.middle.symbols)),
            self.K_minus,
            self.K_plus,
        )

    def to_dict(self) -> dict:
        return {
            "b_minus": str(self.b_minus),
            "b_plus": str(self.b_plus),
            "middle": str(self.middle),
            "K_minus": self.K_minus,
            "K_plus": self.K_plus,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConnectionSpec":
        missing = [k for k in ("b_minus", "b_plus", "middle") if k not in d]
        if missing:
            raise SymbolError(f"connection spec missing fields: {', '.join(missing)}")
        return cls.build(d["b_minus"], d["b_plus"], d["middle"], d.get("K_minus"), d.get("K_plus"))


def assemble(spec: ConnectionSpec):
    """Evaluator n -> a_n for the spec (validated at construction)."""
    return spec
