from fractions import Fraction as F

import pytest

from code_lab.analysis import (CSV_HEADER, CapacityError, ChainSpec, p_reach_bound, p_reach_bruteforce,
                               p_reach_formula, rows_to_csv, tabulate)

HALF = F(1, 2)
# under "stay" the agent sits at 0 until its first right move, so 7 of the 8 three-step strings hit state 1
STAY_N1_L1_HALF = F(7, 8)


def test_formula_examples():
    assert p_reach_formula(ChainSpec(1, 0, HALF)) == HALF
    assert p_reach_formula(ChainSpec(2, 1, HALF)) == HALF
    for n in range(1, 5):
        for p in (F(3, 10), F(7, 10)):
            assert p_reach_formula(ChainSpec(n, 0, p)) == p ** n
            assert p_reach_formula(ChainSpec(n, 2, p)) >= p ** n


def test_bound_examples():
    assert p_reach_bound(ChainSpec(3, 0, F(3, 10))) == F(3, 10) ** 3
    assert p_reach_bound(ChainSpec(1, 1, HALF)) == F(5, 8)


def test_bruteforce_examples():
    assert p_reach_bruteforce(ChainSpec(1, 0, HALF)) == HALF
    assert p_reach_bruteforce(ChainSpec(1, 1, HALF, "stay")) == STAY_N1_L1_HALF
    assert p_reach_bruteforce(ChainSpec(1, 1, HALF, "no-op-forbidden")) == F(5, 8)


def test_bruteforce_below_formula_and_monotone():
    for L in range(4):
        for p in (F(3, 10), F(1, 2), F(7, 10)):
            prev = None
            for n in range(1, 7):
                spec = ChainSpec(n, L, p)
                bf = p_reach_bruteforce(spec)
                assert bf <= p_reach_formula(spec)
                if prev is not None:
                    assert bf <= prev
                prev = bf


def test_capacity_and_spec_errors():
    with pytest.raises(CapacityError):
        p_reach_bruteforce(ChainSpec(5, 10, HALF))
    with pytest.raises(ValueError):
        ChainSpec(0, 1, HALF)
    with pytest.raises(ValueError):
        ChainSpec(1, 1, F(1))
    with pytest.raises(ValueError):
        ChainSpec(1, 1, HALF, "teleport")


def test_float_p_is_exact():
    assert ChainSpec(1, 0, 0.3).p == F(3, 10)


def test_csv():
    rows = tabulate(2, 1, [0.5])
    text = rows_to_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 2 * 2 * 1
    assert lines[1].split(",")[3] == "0.5"
