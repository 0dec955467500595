import random
from fractions import Fraction

from qcontract._linalg import in_row_span, nullspace, rank, rref, solve
from qcontract.scalar import QV_ONE, QVScalar, v_power


def F(rows):
    return [[Fraction(x) for x in r] for r in rows]


def test_rref_and_rank_small():
    m, piv = rref(F([[1, 2, 3], [2, 4, 6], [1, 0, 1]]))
    assert piv == [0, 1]
    assert rank(F([[1, 2, 3], [2, 4, 6], [1, 0, 1]])) == 2
    assert rank([]) == 0
    assert rank(F([[0, 0], [0, 0]])) == 0


def test_nullspace_matches_rank():
    rng = random.Random(5)
    for _ in range(40):
        nr, nc = rng.randint(1, 5), rng.randint(1, 5)
        m = F([[rng.randint(-3, 3) for _ in range(nc)] for _ in range(nr)])
        ns = nullspace(m, nc, Fraction(1))
        assert len(ns) == nc - rank(m)
        for vec in ns:
            for row in m:
                assert sum(a * b for a, b in zip(row, vec)) == 0


def test_solve_consistent_and_not():
    a = F([[1, 1], [1, -1]])
    x = solve(a, [Fraction(3), Fraction(1)])
    assert x == [Fraction(2), Fraction(1)]
    bad = solve(F([[1, 1], [2, 2]]), [Fraction(1), Fraction(3)])
    assert bad is None
    under = solve(F([[1, 1]]), [Fraction(5)])
    assert under is not None
    assert under[0] + under[1] == 5


def test_over_qv_field():
    v = v_power(1)
    m = [[QV_ONE, v], [v, v * v]]
    assert rank(m) == 1
    ns = nullspace(m, 2, QV_ONE)
    assert len(ns) == 1
    assert ns[0][0] + v * ns[0][1] == QVScalar.from_rat(0)
    assert in_row_span(m, [v, v * v])
    assert not in_row_span(m, [QV_ONE, QV_ONE])
