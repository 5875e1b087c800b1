"""Shipped CSS codes and the plain-text code-definition format.

File format::

    [HX]
    1100
    ...
    [HZ]
    ...
    [LX]
    ...
    [LZ]
    ...

One 0/1 row per line; the column count is the qubit count. Blank lines and
lines starting with '#' are ignored.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .pauli import CssCode, PauliOp

SECTIONS = ("HX", "HZ", "LX", "LZ")
SHIPPED = ("bitflip3", "surface_d5", "toric_L3", "toric_L5", "toric_L7", "toric_L9")


def parse_code(text: str, name: str = "css") -> CssCode:
    rows: dict[str, list[list[int]]] = {s: [] for s in SECTIONS}
    current = None
    n = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().upper()
            if current not in rows:
                raise ValueError(f"line {lineno}: unknown section [{current}]")
            continue
        if current is None:
            raise ValueError(f"line {lineno}: row outside a section")
        if set(line) - {"0", "1"}:
            raise ValueError(f"line {lineno}: rows must be 0/1 strings")
        if n is None:
            n = len(line)
        elif len(line) != n:
            raise ValueError(f"line {lineno}: expected {n} columns, got {len(line)}")
        rows[current].append([int(c) for c in line])
    if n is None:
        raise ValueError("empty code file")
    hx = np.array(rows["HX"], dtype=np.uint8).reshape(-1, n)
    hz = np.array(rows["HZ"], dtype=np.uint8).reshape(-1, n)
    lx = [PauliOp.x_type(n, r) for r in rows["LX"]]
    lz = [PauliOp.z_type(n, r) for r in rows["LZ"]]
    return CssCode(n, len(lx), hx, hz, lx, lz, name=name)


def format_code(code: CssCode) -> str:
    def fmt(bits) -> str:
        return "".join(str(int(b)) for b in bits)

    out = [f"# {code.name}: n={code.n} k={code.k}"]
    out.append("[HX]")
    out += [fmt(r) for r in code.h_x]
    out.append("[HZ]")
    out += [fmt(r) for r in code.h_z]
    out.append("[LX]")
    out += [fmt(p.x_bits) for p in code.logical_x]
    out.append("[LZ]")
    out += [fmt(p.z_bits) for p in code.logical_z]
    return "\n".join(out) + "\n"


def read_code(path) -> CssCode:
    p = Path(path)
    return parse_code(p.read_text(encoding="utf-8"), name=p.stem)


def write_code(code: CssCode, path) -> None:
    Path(path).write_text(format_code(code), encoding="utf-8", newline="\n")


def load_code(name: str) -> CssCode:
    """A shipped code by name, or a path to a code file."""
    if name in SHIPPED:
        text = resources.files("ftqlab").joinpath("data", "codes", f"{name}.txt").read_text(encoding="utf-8")
        return parse_code(text, name=name)
    if Path(name).exists():
        return read_code(name)
    raise ValueError(f"unknown code {name!r}; shipped codes: {', '.join(SHIPPED)}")


# constructors -----------------------------------------------------------


def bitflip3() -> CssCode:
    hz = np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8)
    hx = np.zeros((0, 3), dtype=np.uint8)
    return CssCode(3, 1, hx, hz, [PauliOp.from_string("XXX")], [PauliOp.from_string("ZII")], name="bitflip3")


def rotated_surface(d: int) -> CssCode:
    """Rotated surface code on a d x d grid, qubit (r, c) -> r*d + c.

    Faces (r, c) with corners (r..r+1, c..c+1) are X-type when r + c is even.
    Weight-2 X faces sit on the top/bottom edges, weight-2 Z faces on the left/right.
    """
    if d < 2:
        raise ValueError("d must be at least 2")

    def q(r, c):
        return r * d + c

    hx, hz = [], []
    for r in range(-1, d):
        for c in range(-1, d):
            corners = [(rr, cc) for rr in (r, r + 1) for cc in (c, c + 1) if 0 <= rr < d and 0 <= cc < d]
            is_x = (r + c) % 2 == 0
            if len(corners) == 4:
                pass
            elif len(corners) == 2:
                horizontal_edge = r in (-1, d - 1)
                if horizontal_edge != is_x:
                    continue
            else:
                continue
            row = np.zeros(d * d, dtype=np.uint8)
            for rr, cc in corners:
                row[q(rr, cc)] = 1
            (hx if is_x else hz).append(row)
    # Z boundaries are left/right, so logical Z runs along a row and logical X down a column
    lz = np.zeros(d * d, dtype=np.uint8)
    lz[[q(0, c) for c in range(d)]] = 1
    lx = np.zeros(d * d, dtype=np.uint8)
    lx[[q(r, 0) for r in range(d)]] = 1
    return CssCode(
        d * d, 1, np.array(hx), np.array(hz), [PauliOp.x_type(d * d, lx)], [PauliOp.z_type(d * d, lz)],
        name=f"surface_d{d}",
    )


def toric_edge(L: int, kind: str, i: int, j: int) -> int:
    """Qubit index of a horizontal ('h', from (i,j) to (i,j+1)) or vertical ('v', (i,j) to (i+1,j)) edge."""
    i %= L
    j %= L
    return i * L + j if kind == "h" else L * L + i * L + j


def toric_code(L: int) -> CssCode:
    """Toric code on an L x L torus.

    X checks are vertex stars, Z checks are plaquettes with top-left corner (i, j).
    Logical Z_1 is the row of horizontal edges h(0, *), Z_2 the column of vertical
    edges v(*, 0); X_1 crosses h(*, 0) and X_2 crosses v(0, *).
    """
    if L < 2:
        raise ValueError("L must be at least 2")
    n = 2 * L * L
    e = lambda kind, i, j: toric_edge(L, kind, i, j)  # noqa: E731
    hx = np.zeros((L * L, n), dtype=np.uint8)
    hz = np.zeros((L * L, n), dtype=np.uint8)
    for i in range(L):
        for j in range(L):
            v = i * L + j
            for q in (e("h", i, j), e("h", i, j - 1), e("v", i, j), e("v", i - 1, j)):
                hx[v, q] ^= 1
            for q in (e("h", i, j), e("h", i + 1, j), e("v", i, j), e("v", i, j + 1)):
                hz[v, q] ^= 1
    z1 = [e("h", 0, j) for j in range(L)]
    z2 = [e("v", i, 0) for i in range(L)]
    x1 = [e("h", i, 0) for i in range(L)]
    x2 = [e("v", 0, j) for j in range(L)]

    def op(kind, qs):
        bits = np.zeros(n, dtype=np.uint8)
        bits[qs] = 1
        return PauliOp.x_type(n, bits) if kind == "X" else PauliOp.z_type(n, bits)

    return CssCode(n, 2, hx, hz, [op("X", x1), op("X", x2)], [op("Z", z1), op("Z", z2)], name=f"toric_L{L}")


def build_shipped(name: str) -> CssCode:
    if name == "bitflip3":
        return bitflip3()
    if name == "surface_d5":
        return rotated_surface(5)
    if name.startswith("toric_L"):
        return toric_code(int(name[len("toric_L"):]))
    raise ValueError(name)


def regenerate_files(directory) -> None:
    """Write every shipped code to ``directory`` (used to produce the data files)."""
    for name in SHIPPED:
        write_code(build_shipped(name), Path(directory) / f"{name}.txt")


def sector_distance(code: CssCode, sector: str, wmax: int = 8) -> int | None:
    """Minimum weight of an X- ('X') or Z-type ('Z') logical operator, searched up to wmax."""
    from itertools import combinations

    checks = code.hz_rows if sector == "X" else code.hx_rows
    duals = [p.z for p in code.logical_z] if sector == "X" else [p.x for p in code.logical_x]
    cols = np.zeros(code.n, dtype=np.int64)
    for i, r in enumerate(checks):
        for q in range(code.n):
            if (r >> q) & 1:
                cols[q] |= 1 << i
    lcols = np.zeros(code.n, dtype=np.int64)
    for i, r in enumerate(duals):
        for q in range(code.n):
            if (r >> q) & 1:
                lcols[q] |= 1 << i
    for w in range(1, wmax + 1):
        combos = np.array(list(combinations(range(code.n), w)), dtype=np.int64)
        syn = np.bitwise_xor.reduce(cols[combos], axis=1)
        lg = np.bitwise_xor.reduce(lcols[combos], axis=1)
        if np.any((syn == 0) & (lg != 0)):
            return w
    return None


def distance(code: CssCode, wmax: int = 8) -> int | None:
    dx, dz = sector_distance(code, "X", wmax), sector_distance(code, "Z", wmax)
    if dx is None or dz is None:
        return dx if dz is None else dz
    return min(dx, dz)
