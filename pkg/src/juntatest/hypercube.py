"""Points, Hamming balls, restrictions and query-counted function sources.

Conventions used throughout the package:

* A point of ``{-1,+1}^n`` is an unsigned integer mask; bit ``i`` is set iff
  coordinate ``i`` equals ``+1``.  The Hamming weight ``|x|`` is therefore the
  popcount of the mask.
* Coordinate subsets are masks as well.
* A truth table is indexed by the point mask.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

MAX_TABLE_BITS = 30
MAX_EXACT_BITS = 24


class DimensionError(ValueError):
    """Raised when dimensions or coordinate sets are inconsistent."""


class BudgetError(RuntimeError):
    """Raised when a request exceeds the desk-scale computational budget."""


def popcount(x: int) -> int:
    return int(x).bit_count()


def popcount_array(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(a, dtype=np.uint64)).astype(np.int64)


def as_mask(coords: int | Iterable[int], n: int | None = None) -> int:
    """Convert a coordinate collection (or an existing mask) to a mask."""
    if isinstance(coords, (int, np.integer)):
        mask = int(coords)
        if mask < 0:
            raise DimensionError("coordinate mask must be non-negative")
    else:
        mask = 0
        for c in coords:
            c = int(c)
            if c < 0:
                raise DimensionError(f"negative coordinate {c}")
            mask |= 1 << c
    if n is not None and mask >> n:
        raise DimensionError(f"coordinate set {mask:#x} exceeds dimension {n}")
    return mask


def mask_to_coords(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def k_subsets(n: int, k: int) -> Iterator[int]:
    """All k-subsets of {0..n-1} as masks, ascending (Gosper's next-combination step)."""
    if k < 0 or k > n:
        return
    if k == 0:
        yield 0
        return
    s = (1 << k) - 1
    limit = 1 << n
    while s < limit:
        yield s
        c = s & -s
        t = s + c
        s = (((t ^ s) >> 2) // c) | t


def k_subsets_of(mask: int, k: int) -> list[int]:
    """k-subsets of the coordinates in ``mask``, ascending by mask value."""
    coords = mask_to_coords(mask)
    return sorted(sum(1 << c for c in combo) for combo in combinations(coords, k))


def ball_size(n: int, r: int) -> int:
    return sum(comb(n, i) for i in range(min(r, n) + 1))


@lru_cache(maxsize=64)
def _ball_masks(n: int, r: int) -> np.ndarray:
    masks = [sum(1 << c for c in combo) for i in range(r + 1) for combo in combinations(range(n), i)]
    out = np.array(sorted(masks), dtype=np.int64)
    out.setflags(write=False)
    return out


def ball_masks(n: int, r: int) -> np.ndarray:
    """Flip masks of weight <= r, ascending by unsigned value."""
    if not 0 <= r <= n:
        raise DimensionError(f"radius {r} outside [0, {n}]")
    return _ball_masks(n, r)


def scatter_bits(values: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    """Place bit j of each value at ``positions[j]`` (a vectorised pdep)."""
    values = np.asarray(values, dtype=np.int64)
    out = np.zeros_like(values)
    for j, p in enumerate(positions):
        out |= ((values >> j) & 1) << p
    return out


def gather_bits(values: np.ndarray, positions: Sequence[int]) -> np.ndarray:
    """Collect bit ``positions[j]`` of each value into bit j (a vectorised pext)."""
    values = np.asarray(values, dtype=np.int64)
    out = np.zeros_like(values)
    for j, p in enumerate(positions):
        out |= ((values >> p) & 1) << j
    return out


@dataclass(frozen=True)
class Point:
    n: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.n:
            raise DimensionError(f"dimension must be positive, got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise DimensionError(f"bits {self.bits:#x} exceed dimension {self.n}")

    @classmethod
    def from_signs(cls, signs: Sequence[int]) -> "Point":
        bits = 0
        for i, s in enumerate(signs):
            if s not in (1, -1):
                raise ValueError(f"coordinate {i} is {s}, expected +1 or -1")
            if s == 1:
                bits |= 1 << i
        return cls(len(signs), bits)

    @property
    def signs(self) -> tuple[int, ...]:
        return tuple(1 if (self.bits >> i) & 1 else -1 for i in range(self.n))

    @property
    def weight(self) -> int:
        return popcount(self.bits)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(i)
        return 1 if (self.bits >> i) & 1 else -1


def flip(x: Point, T: int | Iterable[int]) -> Point:
    """x with the coordinates in T negated."""
    return Point(x.n, x.bits ^ as_mask(T, x.n))


def ball(x: Point, r: int) -> list[Point]:
    """All points within Hamming distance r of x, ordered by flip mask."""
    return [Point(x.n, x.bits ^ int(m)) for m in ball_masks(x.n, r)]


def hamming(x: Point, y: Point) -> int:
    if x.n != y.n:
        raise DimensionError("points of different dimension")
    return popcount(x.bits ^ y.bits)


# ---------------------------------------------------------------------------
# Truth tables


class PackedTruthTable:
    """A Boolean function on {-1,+1}^n stored as 2^n packed sign bits.

    Bit ``idx`` of the packed buffer is set iff f(idx) = +1.  Instances are
    immutable.
    """

    __slots__ = ("n", "_packed", "_values")

    def __init__(self, n: int, packed: np.ndarray):
        if not 0 <= n <= MAX_TABLE_BITS:
            raise DimensionError(f"table dimension {n} outside [0, {MAX_TABLE_BITS}]")
        packed = np.ascontiguousarray(packed, dtype=np.uint8)
        if packed.size != max(1, (1 << n) // 8 + (1 if (1 << n) % 8 else 0)):
            raise DimensionError("packed buffer has the wrong length")
        packed.setflags(write=False)
        self.n = n
        self._packed = packed
        self._values = None

    @classmethod
    def from_values(cls, values: Sequence[int] | np.ndarray) -> "PackedTruthTable":
        v = np.asarray(values)
        size = v.size
        n = size.bit_length() - 1
        if size == 0 or (1 << n) != size:
            raise DimensionError(f"table length {size} is not a power of two")
        if not np.all((v == 1) | (v == -1)):
            raise ValueError("truth table entries must be +1 or -1")
        packed = np.packbits((v == 1).astype(np.uint8), bitorder="little")
        return cls(n, packed)

    @classmethod
    def from_function(cls, n: int, func: Callable[[np.ndarray], np.ndarray]) -> "PackedTruthTable":
        """Tabulate ``func`` (vectorised over point masks)."""
        return cls.from_values(np.asarray(func(np.arange(1 << n, dtype=np.int64))))

    @classmethod
    def from_int(cls, n: int, value: int) -> "PackedTruthTable":
        nbytes = max(1, ((1 << n) + 7) // 8)
        packed = np.frombuffer(int(value).to_bytes(nbytes, "little"), dtype=np.uint8).copy()
        if (1 << n) < 8:
            packed &= (1 << (1 << n)) - 1
        return cls(n, packed)

    def to_int(self) -> int:
        return int.from_bytes(self._packed.tobytes(), "little") & ((1 << (1 << self.n)) - 1)

    @property
    def size(self) -> int:
        return 1 << self.n

    @property
    def packed(self) -> np.ndarray:
        return self._packed

    def values(self) -> np.ndarray:
        """The table as an int8 array of +-1 (cached, read-only)."""
        if self._values is None:
            bits = np.unpackbits(self._packed, bitorder="little")[: self.size]
            vals = (2 * bits.astype(np.int8) - 1).astype(np.int8)
            vals.setflags(write=False)
            self._values = vals
        return self._values

    def lookup(self, masks: np.ndarray) -> np.ndarray:
        """Vectorised evaluation at point masks, read directly from the packed bits."""
        idx = np.asarray(masks, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.size):
            raise DimensionError("point outside the cube")
        bits = (self._packed[idx >> 3] >> (idx & 7).astype(np.uint8)) & 1
        return (2 * bits.astype(np.int8) - 1).astype(np.int8)

    def __call__(self, x: Point | int) -> int:
        bits = x.bits if isinstance(x, Point) else int(x)
        return 1 if (self._packed[bits >> 3] >> (bits & 7)) & 1 else -1

    def __eq__(self, other) -> bool:
        return isinstance(other, PackedTruthTable) and self.n == other.n and self.to_int() == other.to_int()

    def __hash__(self) -> int:
        return hash((self.n, self._packed.tobytes()))

    def __repr__(self) -> str:
        return f"PackedTruthTable(n={self.n})"

    # -- text formats ------------------------------------------------------

    def to_text(self) -> str:
        chars = np.where(self.values() == 1, ord("+"), ord("-")).astype(np.uint8).tobytes().decode()
        return f"n={self.n}\n{chars}\n"

    def to_hex(self) -> str:
        width = max(1, self.size // 4)
        return "hex:" + format(self.to_int(), f"0{width}x")


def parse_table(text: str) -> PackedTruthTable:
    """Parse either ``n=<int>\\n<+/- string>`` or ``hex:<digits>``.

    In the hex form the table length is 4 * len(digits) (so n >= 2) and bit i
    of the hex integer is the entry at index i.
    """
    text = text.strip()
    if text.startswith("hex:"):
        digits = text[4:].strip()
        nbits = 4 * len(digits)
        n = nbits.bit_length() - 1
        if not digits or (1 << n) != nbits:
            raise DimensionError("hex table length must be 2^n / 4 digits")
        return PackedTruthTable.from_int(n, int(digits, 16))
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) != 2 or not lines[0].startswith("n="):
        raise ValueError("expected 'n=<int>' followed by a line of +/- characters")
    n = int(lines[0][2:])
    body = lines[1]
    if len(body) != 1 << n:
        raise DimensionError(f"expected {1 << n} entries, got {len(body)}")
    if set(body) - {"+", "-"}:
        raise ValueError("table characters must be '+' or '-'")
    raw = np.frombuffer(body.encode(), dtype=np.uint8)
    return PackedTruthTable.from_values(np.where(raw == ord("+"), 1, -1))


def read_table(path: str | Path) -> PackedTruthTable:
    return parse_table(Path(path).read_text())


def write_table(table: PackedTruthTable, path: str | Path, hex_format: bool = False) -> None:
    Path(path).write_text(table.to_hex() + "\n" if hex_format else table.to_text())


# ---------------------------------------------------------------------------
# Query-counted sources


class QueryCounter:
    """Thread-safe monotone counter shared between a source and its restrictions."""

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    def add(self, k: int) -> None:
        with self._lock:
            self._count += int(k)

    @property
    def count(self) -> int:
        return self._count


class FunctionSource:
    """Query access to a Boolean function, counting every evaluation."""

    def __init__(self, n: int, counter: QueryCounter | None = None):
        if n < 0:
            raise DimensionError("negative dimension")
        self.n = n
        self.counter = counter if counter is not None else QueryCounter()

    @property
    def queries(self) -> int:
        return self.counter.count

    def _eval(self, masks: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, masks) -> np.ndarray:
        """Evaluate at an array of point masks; counts one query per entry."""
        masks = np.asarray(masks, dtype=np.int64)
        if masks.size and (masks.min() < 0 or (masks.max() >> self.n) != 0):
            raise DimensionError("query outside the cube")
        out = np.asarray(self._eval(masks.ravel()), dtype=np.int8).reshape(masks.shape)
        self.counter.add(masks.size)
        return out

    def __call__(self, x: Point | int) -> int:
        if isinstance(x, Point):
            if x.n != self.n:
                raise DimensionError(f"point of dimension {x.n} given to a source of dimension {self.n}")
            x = x.bits
        return int(self.evaluate(np.array([x]))[0])

    def tabulate(self) -> PackedTruthTable:
        """Materialise as a table (uncounted; verification only)."""
        if self.n > MAX_EXACT_BITS:
            raise BudgetError(f"cannot tabulate n={self.n} > {MAX_EXACT_BITS}")
        return PackedTruthTable.from_values(self._eval(np.arange(1 << self.n, dtype=np.int64)))


class TableSource(FunctionSource):
    def __init__(self, table: PackedTruthTable, counter: QueryCounter | None = None):
        super().__init__(table.n, counter)
        self.table = table

    def _eval(self, masks):
        return self.table.lookup(masks)

    def tabulate(self):
        return self.table


class FormulaSource(FunctionSource):
    """A source backed by a vectorised function of point masks."""

    def __init__(self, n: int, func: Callable[[np.ndarray], np.ndarray], counter: QueryCounter | None = None):
        super().__init__(n, counter)
        self.func = func

    def _eval(self, masks):
        return self.func(masks)


class RestrictedSource(FunctionSource):
    """f restricted by fixing the coordinates J to the values of z.

    The free coordinates are relabelled 0..n-|J|-1 in increasing order.
    Queries are charged to the base source's counter.
    """

    def __init__(self, base: FunctionSource, J: int, z_bits: int):
        self.base = base
        self.J = J
        self.free = [i for i in range(base.n) if not (J >> i) & 1]
        self.fixed_bits = z_bits & J
        super().__init__(len(self.free), base.counter)

    def expand(self, masks: np.ndarray) -> np.ndarray:
        return scatter_bits(masks, self.free) | self.fixed_bits

    def _eval(self, masks):
        return self.base._eval(self.expand(masks))


def restrict(f: FunctionSource, J: int | Iterable[int], z: Point | int) -> FunctionSource:
    """The restriction f|_{J -> z}.

    ``z`` may be a full point of dimension n (only its J-coordinates are used)
    or a mask already aligned with the coordinates of f.
    """
    J = as_mask(J, f.n)
    if isinstance(z, Point):
        if z.n != f.n:
            raise DimensionError(f"restriction point has dimension {z.n}, expected {f.n}")
        z = z.bits
    if int(z) >> f.n:
        raise DimensionError("restriction values exceed the dimension")
    return RestrictedSource(f, J, int(z))


class GuardedSource(FunctionSource):
    """Wraps a source and rejects queries outside an allowed mask set."""

    def __init__(self, base: FunctionSource, allowed: Iterable[int]):
        super().__init__(base.n, base.counter)
        self.base = base
        self.allowed = np.unique(np.fromiter(allowed, dtype=np.int64))

    def _eval(self, masks):
        pos = np.searchsorted(self.allowed, masks)
        pos = np.minimum(pos, self.allowed.size - 1)
        if not np.all(self.allowed[pos] == masks):
            bad = masks[self.allowed[pos] != masks][0]
            raise AssertionError(f"query {int(bad):#x} outside the permitted set")
        return self.base._eval(masks)
