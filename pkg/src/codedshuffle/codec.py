"""GF(2^w) arithmetic and Vandermonde multicast coding.

Multiplication runs on log/antilog tables built once per field; addition
is XOR. Message symbols are fixed-length word vectors; a payload of b
bits becomes ceil(b/w) words, MSB-aligned, with the zero padding length
recorded so load accounting can stay exact on the unpadded bit count.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .errors import (
    CountMismatch,
    DuplicateCoefficient,
    FieldTooSmall,
    SingularMatrix,
)

# Primitive polynomials (sans the x^w term) for the supported widths,
# both with x as a primitive element.
_POLYS = {4: 0x3, 8: 0x1D, 16: 0x100B}


class GaloisField:
    """GF(2^w) for w in {4, 8, 16} with table-based multiplication."""

    def __init__(self, width: int = 16):
        if width not in _POLYS:
            raise ValueError(f"unsupported field width {width}; choose from {sorted(_POLYS)}")
        self.width = width
        self.order = 1 << width
        poly = _POLYS[width] | self.order
        self.exp = [0] * (2 * self.order)
        self.log = [0] * self.order
        x = 1
        for i in range(self.order - 1):
            self.exp[i] = x
            self.log[x] = i
            x <<= 1
            if x & self.order:
                x ^= poly
        for i in range(self.order - 1, 2 * (self.order - 1)):
            self.exp[i] = self.exp[i - (self.order - 1)]

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return self.exp[self.order - 1 - self.log[a]]

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            return 0 if e else 1
        return self.exp[(self.log[a] * e) % (self.order - 1)]

    def coefficients(self, count: int) -> list[int]:
        """First `count` nonzero elements in generator-power order."""
        if count >= self.order:
            raise FieldTooSmall(f"GF(2^{self.width}) has only {self.order - 1} nonzero elements, need {count}")
        return [self.exp[i] for i in range(count)]


@lru_cache(maxsize=4)
def default_field(width: int = 16) -> GaloisField:
    return GaloisField(width)


@dataclass(frozen=True)
class SymbolVector:
    """One message symbol: a word vector plus its true (unpadded) bit length."""

    words: tuple[int, ...]
    bit_length: int

    def __post_init__(self):
        if self.bit_length < 0:
            raise ValueError("bit_length must be nonnegative")


def padding_bits(sym: SymbolVector, field: GaloisField) -> int:
    return len(sym.words) * field.width - sym.bit_length


def symbol_from_bits(value: int, bit_length: int, field: GaloisField) -> SymbolVector:
    """Chunk a bit string (as an int) into field words, MSB first."""
    w = field.width
    n_words = (bit_length + w - 1) // w if bit_length else 0
    shifted = value << (n_words * w - bit_length) if n_words else 0
    words = tuple(
        (shifted >> (w * (n_words - 1 - i))) & (field.order - 1) for i in range(n_words)
    )
    return SymbolVector(words, bit_length)


def symbol_to_bits(sym: SymbolVector, field: GaloisField) -> int:
    w = field.width
    value = 0
    for word in sym.words:
        value = (value << w) | word
    return value >> (len(sym.words) * w - sym.bit_length) if sym.words else 0


def _xor(a: SymbolVector, b: SymbolVector) -> SymbolVector:
    return SymbolVector(tuple(x ^ y for x, y in zip(a.words, b.words)), a.bit_length)


def _scale(field: GaloisField, sym: SymbolVector, c: int) -> SymbolVector:
    if c == 0:
        return SymbolVector((0,) * len(sym.words), sym.bit_length)
    if c == 1:
        return sym
    return SymbolVector(tuple(field.mul(word, c) for word in sym.words), sym.bit_length)


def encode_vandermonde(
    field: GaloisField,
    symbols: list[SymbolVector],
    n_coded: int,
    alphas: list[int] | None = None,
) -> list[SymbolVector]:
    """n_coded power-row combinations of the message symbols.

    Row i is sum_j alphas[j]^i * symbols[j]; row 0 is the plain XOR of all
    symbols. Any n_coded-subset of columns of the power matrix is
    invertible because the alphas are distinct.
    """
    n = len(symbols)
    if n == 0:
        raise CountMismatch("no symbols to encode")
    if n_coded > n:
        raise CountMismatch(f"cannot emit {n_coded} combinations of {n} symbols")
    lengths = {(len(s.words), s.bit_length) for s in symbols}
    if len(lengths) != 1:
        raise CountMismatch("all symbols in one encode call must have equal length")
    if alphas is None:
        alphas = field.coefficients(n)
    if len(alphas) != n:
        raise CountMismatch(f"need {n} coefficients, got {len(alphas)}")
    if len(set(alphas)) != n:
        raise DuplicateCoefficient("encoding coefficients must be distinct")
    if n >= field.order:
        raise FieldTooSmall(f"field order {field.order} too small for {n} symbols")

    out = []
    for i in range(n_coded):
        acc = _scale(field, symbols[0], field.pow(alphas[0], i))
        for j in range(1, n):
            acc = _xor(acc, _scale(field, symbols[j], field.pow(alphas[j], i)))
        out.append(acc)
    return out


def decode_vandermonde(
    field: GaloisField,
    coded: list[SymbolVector],
    alphas: list[int],
    known: dict[int, SymbolVector],
) -> list[SymbolVector]:
    """Recover all message symbols from coded rows plus known symbols.

    The receiver subtracts the known columns from each row and inverts the
    square power submatrix over the unknown columns. Needs at least as
    many rows as unknowns; extra rows are ignored.
    """
    n = len(alphas)
    unknown = sorted(set(range(n)) - set(known))
    if any(i < 0 or i >= n for i in known):
        raise CountMismatch("known index outside symbol range")
    if not unknown:
        return [known[i] for i in range(n)]
    if len(unknown) > len(coded):
        raise CountMismatch(f"{len(unknown)} unknowns but only {len(coded)} coded rows")

    rows = coded[: len(unknown)]
    width = len(rows[0].words)
    bit_length = rows[0].bit_length

    # Residuals after removing known contributions.
    residuals = []
    for i, row in enumerate(rows):
        acc = row
        for j, sym in known.items():
            acc = _xor(acc, _scale(field, sym, field.pow(alphas[j], i)))
        residuals.append(list(acc.words))

    matrix = [[field.pow(alphas[j], i) for j in unknown] for i in range(len(unknown))]

    # Gaussian elimination over the field, applied to every word column.
    m = len(unknown)
    for col in range(m):
        pivot = next((r for r in range(col, m) if matrix[r][col]), None)
        if pivot is None:
            raise SingularMatrix("decode matrix singular despite distinct coefficients")
        matrix[col], matrix[pivot] = matrix[pivot], matrix[col]
        residuals[col], residuals[pivot] = residuals[pivot], residuals[col]
        inv = field.inv(matrix[col][col])
        matrix[col] = [field.mul(v, inv) for v in matrix[col]]
        residuals[col] = [field.mul(v, inv) for v in residuals[col]]
        for r in range(m):
            if r != col and matrix[r][col]:
                factor = matrix[r][col]
                matrix[r] = [
                    v ^ field.mul(factor, p) for v, p in zip(matrix[r], matrix[col])
                ]
                residuals[r] = [
                    v ^ field.mul(factor, p) for v, p in zip(residuals[r], residuals[col])
                ]

    solved = {
        idx: SymbolVector(tuple(residuals[t]), bit_length)
        for t, idx in enumerate(unknown)
    }
    if any(len(sym.words) != width for sym in solved.values()):
        raise CountMismatch("decoded symbol width mismatch")
    return [known[i] if i in known else solved[i] for i in range(n)]
