"""Symbol words, shift dynamics, cylinders, and seeded Bernoulli sampling.

Letters live in {1..k}. All randomness flows through numpy's Philox4x64-10
counter generator keyed by (seed, stream); trial t of a Monte Carlo run uses
stream t, so trials are reproducible and order-independent. A letter is drawn
from a uniform u in [0,1) by inverse CDF on the cumulative weights: the
letter is 1 + (number of cumulative sums <= u).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParameterError, OutOfRangeError, TooLargeError

MAX_SEED = 2**64

# hard cap on total letters a single universal word may hold
UNIVERSAL_WORD_CAP = 2**20


def philox_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Fresh generator for (seed, stream); same key always yields the same draws."""
    if not 0 <= seed < MAX_SEED:
        raise InvalidParameterError(f"seed must be in [0, 2^64), got {seed}")
    if not 0 <= stream < MAX_SEED:
        raise InvalidParameterError(f"stream must be in [0, 2^64), got {stream}")
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class ProbabilityVector:
    """Strictly positive weights (p_1..p_k) summing to 1 within 1e-12."""

    p: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if len(self.p) < 1:
            raise InvalidParameterError("weights must have at least one entry")
        if any(v <= 0.0 for v in self.p):
            raise InvalidParameterError(f"weights must be strictly positive, got {self.p}")
        total = float(sum(self.p))
        if abs(total - 1.0) > 1e-12:
            raise InvalidParameterError(f"weights sum must be 1 within 1e-12, got {total!r}")

    @property
    def k(self) -> int:
        return len(self.p)

    def cumulative(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.p, dtype=np.float64))

    @staticmethod
    def uniform(k: int) -> "ProbabilityVector":
        if k < 1:
            raise InvalidParameterError(f"alphabet size must be >= 1, got {k}")
        return ProbabilityVector(tuple(1.0 / k for _ in range(k)))


@dataclass(frozen=True)
class FiniteWord:
    """Finite sequence of letters from {1..k}; the empty word is allowed."""

    letters: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(int(v) for v in self.letters))
        if any(v < 1 for v in self.letters):
            raise InvalidParameterError(f"letters must be >= 1, got {self.letters}")

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, i):
        return self.letters[i]


@dataclass(frozen=True)
class WordStream:
    """Immutable view of an infinite sampled word at a given position.

    The underlying right-infinite word is fully determined by (seed, weights,
    stream); position only marks how many letters have been consumed. peek
    regenerates the prefix and slices, so equal streams always agree.
    """

    seed: int
    weights: ProbabilityVector
    position: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.position < 0:
            raise InvalidParameterError(f"position must be >= 0, got {self.position}")

    def peek(self, count: int) -> FiniteWord:
        """Letters at offsets [position, position + count), without consuming."""
        if count < 0:
            raise OutOfRangeError(f"count must be >= 0, got {count}")
        gen = philox_generator(self.seed, self.stream)
        u = gen.random(self.position + count)
        return FiniteWord(tuple(letters_from_uniform(self.weights, u[self.position:])))

    def take(self, count: int) -> tuple[FiniteWord, "WordStream"]:
        """Consume count letters: (word, advanced stream)."""
        word = self.peek(count)
        return word, replace(self, position=self.position + count)


@dataclass(frozen=True)
class Cylinder:
    """Set of infinite words agreeing with prefix on [offset, offset + len)."""

    prefix: FiniteWord
    offset: int = 0

    def __post_init__(self):
        if len(self.prefix) == 0:
            raise InvalidParameterError("cylinder prefix must be nonempty")
        if self.offset < 0:
            raise InvalidParameterError(f"cylinder offset must be >= 0, got {self.offset}")


def letters_from_uniform(weights: ProbabilityVector, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF letters in {1..k} for uniforms in [0,1); vectorized."""
    cum = weights.cumulative()
    idx = np.searchsorted(cum, np.asarray(u, dtype=np.float64), side="right")
    # guard the measure-zero edge where u lands at or above the final sum
    return np.minimum(idx, weights.k - 1).astype(np.int64) + 1


def sample_word(weights: ProbabilityVector, n: int, seed: int, stream: int = 0) -> FiniteWord:
    """First n letters of the (seed, stream) word under the given weights."""
    return WordStream(seed=seed, weights=weights, stream=stream).peek(n)


def sample_letter_matrix(
    weights: ProbabilityVector, trials: int, length: int, base_seed: int, first_stream: int = 0
) -> np.ndarray:
    """(trials, length) letter matrix; row t comes from stream first_stream + t."""
    if trials < 0 or length < 0:
        raise OutOfRangeError("trials and length must be >= 0")
    out = np.empty((trials, length), dtype=np.int64)
    for t in range(trials):
        gen = philox_generator(base_seed, first_stream + t)
        out[t] = letters_from_uniform(weights, gen.random(length))
    return out


def cylinder_measure(weights: ProbabilityVector, w) -> float:
    """Product of the letter weights of w (a FiniteWord, or a Cylinder's prefix).

    The empty word has measure 1; the measure ignores a cylinder's offset
    because the product measure is shift invariant.
    """
    word = w.prefix if isinstance(w, Cylinder) else w
    m = 1.0
    for letter in word:
        if letter > weights.k:
            raise InvalidParameterError(
                f"letter {letter} outside alphabet of size {weights.k}"
            )
        m *= weights.p[letter - 1]
    return m


def shift_word(word, n: int):
    """Drop the first n letters. Words shrink; streams advance their position."""
    if n < 0:
        raise OutOfRangeError(f"shift amount must be >= 0, got {n}")
    if isinstance(word, FiniteWord):
        if n > len(word):
            raise OutOfRangeError(f"cannot shift a word of length {len(word)} by {n}")
        return FiniteWord(word.letters[n:])
    if isinstance(word, WordStream):
        return replace(word, position=word.position + n)
    raise InvalidParameterError(f"cannot shift object of type {type(word).__name__}")


def universal_word(k: int, max_factor_len: int, cap: int = UNIVERSAL_WORD_CAP) -> FiniteWord:
    """Concatenation of all k^L words of length L in lexicographic order.

    Every word of length <= L occurs as a factor: it is a prefix of some
    length-L block. Total letters L * k^L; above cap raises TooLargeError.
    """
    if k < 1:
        raise InvalidParameterError(f"alphabet size must be >= 1, got {k}")
    if max_factor_len < 1:
        raise InvalidParameterError(f"factor length must be >= 1, got {max_factor_len}")
    total = max_factor_len * k**max_factor_len
    if total > cap:
        raise TooLargeError(f"universal word needs {total} letters, cap is {cap}")
    letters = []
    for block in itertools.product(range(1, k + 1), repeat=max_factor_len):
        letters.extend(block)
    return FiniteWord(tuple(letters))


def find_cylinder_occurrence(word: FiniteWord, cylinder: Cylinder, horizon: int) -> int | None:
    """Least i <= horizon with shift^i(word) in the cylinder, or None.

    Membership means word[i + offset : i + offset + len(prefix)] equals the
    prefix, and requires the window to lie inside the word.
    """
    if horizon < 0:
        raise OutOfRangeError(f"horizon must be >= 0, got {horizon}")
    pat = cylinder.prefix.letters
    off = cylinder.offset
    w = word.letters
    for i in range(0, horizon + 1):
        start = i + off
        if start + len(pat) > len(w):
            return None
        if w[start : start + len(pat)] == pat:
            return i
    return None


def word_to_text(word: FiniteWord, k: int) -> str:
    """Digit string when k <= 9, else comma-separated letters."""
    if any(v > k for v in word.letters):
        raise InvalidParameterError(f"word uses letters above alphabet size {k}")
    if k <= 9:
        return "".join(str(v) for v in word.letters)
    return ",".join(str(v) for v in word.letters)


def word_from_text(text: str, k: int) -> FiniteWord:
    """Inverse of word_to_text for the same alphabet size."""
    text = text.strip()
    if text == "":
        return FiniteWord(())
    if k <= 9:
        letters = tuple(int(c) for c in text)
    else:
        letters = tuple(int(part) for part in text.split(","))
    if any(v < 1 or v > k for v in letters):
        raise InvalidParameterError(f"letters must lie in 1..{k}, got {letters}")
    return FiniteWord(letters)
