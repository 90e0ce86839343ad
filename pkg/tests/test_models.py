import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from subtree_census.models import (
    ModelSpecError,
    a0_threshold,
    parse_model,
    phi_eval,
    validate_admissibility,
    zeta3,
    zeta4,
)


def test_zeta_constants():
    assert zeta3() == pytest.approx(float(special.zeta(3)), rel=1e-15)
    assert zeta4() == pytest.approx(math.pi ** 4 / 90, rel=1e-15)
    assert a0_threshold() == pytest.approx(0.0996073, abs=1e-7)


def test_parse_named_models():
    b = parse_model("binary-full")
    assert b.weights == (1, 0, 1)
    assert b.span == 2 and math.isinf(b.radius)
    c = parse_model("catalan")
    assert c.span == 1 and c.radius == 1.0
    p = parse_model("poisson")
    assert math.isinf(p.radius)
    z = parse_model("zeta4:a=0.09")
    assert z.kind == "zeta4" and z.radius == 1.0 and z.a == pytest.approx(0.09)


def test_parse_weights():
    m = parse_model("weights:1,0,0.5,0,0")
    assert m.weights == (Fraction(1), Fraction(0), Fraction(1, 2))
    assert m.span == 2
    assert parse_model("weights:1,1,1").span == 1
    assert parse_model("weights:1,0,0,3").span == 3


@pytest.mark.parametrize(
    "text",
    ["weights:1", "weights:0,0,1", "weights:0,0,0", "weights:1,-1,1", "zeta4:a=1.5",
     "zeta4:a=0", "zeta4:b=0.1", "weights:1,x", "motzkin", ""],
)
def test_parse_errors(text):
    with pytest.raises(ModelSpecError):
        parse_model(text)


def test_phi_examples():
    assert phi_eval(parse_model("binary-full"), 1.0, 1) == 2.0
    assert phi_eval(parse_model("catalan"), 0.5, 0) == 2.0
    z = parse_model("zeta4:a=0.09")
    assert phi_eval(z, 1.0, 1) == pytest.approx(0.91 * zeta3() / zeta4(), rel=1e-14)
    with pytest.raises(ValueError):
        phi_eval(parse_model("catalan"), 1.0, 0)
    with pytest.raises(ValueError):
        phi_eval(z, 1.0, 3)


@pytest.mark.parametrize("x", [0.1, 0.5, 0.89, 0.9, 0.93, 0.99])
@pytest.mark.parametrize("p", [0, 1, 2, 3])
def test_zeta4_against_mpmath(x, p):
    a = 0.05
    m = parse_model(f"zeta4:a={a}")
    c = (1 - a) / zeta4()
    with mpmath.workdps(40):
        ref = mpmath.nsum(lambda k: mpmath.ff(k, p) * mpmath.mpf(x) ** (k - p) / k ** 4, [max(p, 1), mpmath.inf])
    want = float(c * ref) + (a if p == 0 else 0.0)
    assert phi_eval(m, x, p) == pytest.approx(want, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(["binary-full", "catalan", "poisson", "zeta4:a=0.05", "weights:1,2,0,1"]),
       u=st.floats(0.0, 0.95), v=st.floats(0.0, 0.95))
def test_phi_monotone_convex(name, u, v):
    m = parse_model(name)
    top = 3.0 if math.isinf(m.radius) else m.radius
    x, y = sorted((u * top, v * top))
    assert phi_eval(m, x, 0) <= phi_eval(m, y, 0) + 1e-12
    assert phi_eval(m, x, 1) <= phi_eval(m, y, 1) + 1e-12
    assert phi_eval(m, x, 2) >= 0


def test_admissibility():
    r = validate_admissibility(parse_model("binary-full"))
    assert r.nu == 2 and r.philm_holds and r.philmx_holds and r.span == 2
    r = validate_admissibility(parse_model("catalan"))
    assert math.isinf(r.nu) and r.philmx_holds
    r = validate_admissibility(parse_model("zeta4:a=0.09"))
    assert r.philm_holds and not r.philmx_holds


@pytest.mark.parametrize("a", [0.01, 0.05, 0.09, 0.0996])
def test_zeta4_nu(a):
    r = validate_admissibility(parse_model(f"zeta4:a={a}"))
    assert r.nu == pytest.approx((1 - a) / (1 - a0_threshold()), abs=1e-12)
