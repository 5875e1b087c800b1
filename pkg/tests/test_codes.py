import numpy as np
import pytest

from ftqlab.codes import SHIPPED, build_shipped, distance, format_code, load_code, parse_code, rotated_surface, toric_code
from ftqlab.pauli import PauliOp, commutes, gf2_rank


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_files_match_constructors(name):
    a, b = load_code(name), build_shipped(name)
    assert (a.n, a.k) == (b.n, b.k)
    assert np.array_equal(a.h_x, b.h_x) and np.array_equal(a.h_z, b.h_z)
    assert a.logical_x == b.logical_x and a.logical_z == b.logical_z


@pytest.mark.parametrize("name", SHIPPED)
def test_css_invariants(name):
    code = load_code(name)
    for a in code.hx_rows:
        for b in code.hz_rows:
            assert (a & b).bit_count() % 2 == 0
    gens = code.generators()
    for i in range(code.k):
        for j in range(code.k):
            assert commutes(code.logical_x[i], code.logical_z[j]) == (i != j)
        assert all(commutes(code.logical_x[i], g) and commutes(code.logical_z[i], g) for g in gens)
    assert gf2_rank(code.hx_rows) + gf2_rank(code.hz_rows) + 2 * code.k == code.n + code.k


def test_toric_l3():
    code = toric_code(3)
    assert (code.n, code.k) == (18, 2)
    assert gf2_rank(code.hx_rows) + gf2_rank(code.hz_rows) == 16
    assert distance(code) == 3


def test_toric_logical_pairs_cross_once():
    code = toric_code(5)
    for i in range(2):
        assert (code.logical_x[i].x & code.logical_z[i].z).bit_count() == 1


def test_toric_rejects_small():
    with pytest.raises(ValueError):
        toric_code(1)


def test_surface_d5():
    code = rotated_surface(5)
    assert (code.n, code.k) == (25, 1)
    assert code.max_generator_weight() == 4
    assert len(code.hx_rows) == len(code.hz_rows) == 12
    assert distance(code) == 5


def test_bitflip():
    code = load_code("bitflip3")
    assert code.n == 3 and code.k == 1 and len(code.hx_rows) == 0
    assert distance(code) == 1  # a single Z flips the logical phase


def test_generator_order_is_hx_then_hz(toric3):
    order = toric3.generator_order
    assert order[0] == ("X", 0) and order[len(toric3.hx_rows)] == ("Z", 0)
    assert len(order) == toric3.num_generators


def test_format_round_trip(tmp_path):
    for name in SHIPPED:
        code = load_code(name)
        again = parse_code(format_code(code))
        assert np.array_equal(again.h_x, code.h_x) and again.logical_z == code.logical_z
    path = tmp_path / "c.txt"
    path.write_text(format_code(load_code("bitflip3")))
    assert load_code(str(path)).n == 3


@pytest.mark.parametrize("text, msg", [
    ("", "empty"),
    ("101\n", "outside a section"),
    ("[HQ]\n101\n", "unknown section"),
    ("[HZ]\n1102\n", "0/1"),
    ("[HZ]\n110\n0111\n", "columns"),
])
def test_parse_errors(text, msg):
    with pytest.raises(ValueError, match=msg):
        parse_code(text)


def test_unknown_code():
    with pytest.raises(ValueError, match="unknown code"):
        load_code("nope")


def test_parse_minimal():
    code = parse_code("[HX]\n[HZ]\n110\n011\n[LX]\n111\n[LZ]\n100\n")
    assert code.logical_x[0] == PauliOp.from_string("XXX")
