"""Random expression trees for property tests and the round-trip corpus."""

import numpy as np
from hypothesis import strategies as st

from holonomylab import expr as ex

SAFE_FUNCS = ("sin", "cos", "exp")


def leaves(dim):
    return st.one_of(
        st.integers(0, 50).map(lambda v: ex.Num(float(v))),
        st.floats(0.0, 10.0, allow_nan=False, allow_infinity=False).map(lambda v: ex.Num(float(v))),
        st.just(ex.PI),
        st.integers(1, dim).map(ex.Var),
    )


def smooth_exprs(dim=3, max_leaves=12):
    """Trees that evaluate everywhere: no division, log, sqrt or tan."""

    def extend(children):
        return st.one_of(
            st.builds(ex.Neg, children),
            st.builds(ex.BinOp, st.sampled_from("+-*"), children, children),
            st.builds(ex.Call, st.sampled_from(SAFE_FUNCS), children.map(lambda c: ex.Call("sin", c))),
            st.builds(lambda c, p: ex.BinOp("^", c, ex.Num(float(p))), children, st.integers(0, 3)),
        )

    return st.recursive(leaves(dim), extend, max_leaves=max_leaves)


def any_exprs(dim=3, max_leaves=15):
    """Any well-formed tree the parser can produce (evaluation may fail)."""

    def extend(children):
        exponent = st.one_of(
            st.integers(0, 5).map(lambda v: ex.Num(float(v))),
            st.integers(1, 5).map(lambda v: ex.Neg(ex.Num(float(v)))),
            st.tuples(st.integers(1, 5), st.integers(1, 5)).map(
                lambda pq: ex.BinOp("/", ex.Num(float(pq[0])), ex.Num(float(pq[1])))
            ),
        )
        return st.one_of(
            st.builds(ex.Neg, children),
            st.builds(ex.BinOp, st.sampled_from("+-*/"), children, children),
            st.builds(ex.Call, st.sampled_from(ex.FUNCTIONS), children),
            st.builds(lambda c, e: ex.BinOp("^", c, e), children, exponent),
        )

    return st.recursive(leaves(dim), extend, max_leaves=max_leaves)


def random_source(rng: np.random.Generator, depth: int = 4, dim: int = 3) -> str:
    """Random expression text with irregular spacing and redundant parentheses."""

    def gen(d):
        roll = rng.random()
        if d == 0 or roll < 0.25:
            choice = rng.integers(4)
            if choice == 0:
                return str(int(rng.integers(0, 100)))
            if choice == 1:
                return f"{rng.random() * 10:.{int(rng.integers(1, 6))}f}"
            if choice == 2:
                return "pi"
            return f"x{int(rng.integers(1, dim + 1))}"
        kind = rng.integers(5)
        if kind == 0:
            return f"-{gen(d - 1)}"
        if kind == 1:
            op = rng.choice(list("+-*/"))
            sp = " " * int(rng.integers(0, 3))
            return f"{gen(d - 1)}{sp}{op}{sp}{gen(d - 1)}"
        if kind == 2:
            return f"{rng.choice(list(ex.FUNCTIONS))}({gen(d - 1)})"
        if kind == 3:
            return f"({gen(d - 1)})"
        exponent = rng.choice(["2", "3", "-1", "(1/2)", "0.5", "-2"])
        return f"({gen(d - 1)})^{exponent}"

    return gen(depth)
