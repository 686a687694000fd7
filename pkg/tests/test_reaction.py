import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fltwave.errors import DomainError, ValidationError
from fltwave.reaction import (
    F_prime,
    K_at_0,
    K_prime_at_1,
    ModelParams,
    ReactionSpec,
    eval_F,
    eval_K,
    lipschitz_constant,
)

FKPP = ModelParams()
P21 = ModelParams(reaction=ReactionSpec.power_law(2, 1))
P12 = ModelParams(reaction=ReactionSpec.power_law(1, 2))


def test_eval_F_examples():
    assert eval_F(FKPP, 0.5) == 0.25
    assert eval_F(FKPP, 1.0) == 0.0
    assert eval_F(P21, 0.5) == pytest.approx(0.125, abs=1e-15)


def test_eval_K_examples():
    assert eval_K(FKPP, 0.0) == 1.0
    assert eval_K(FKPP, 0.25) == 0.75
    assert eval_K(P21, 0.0) == 0.0
    assert K_at_0(P12) == 1.0


def test_K_prime_at_1_examples():
    assert K_prime_at_1(FKPP) == -1.0
    assert K_prime_at_1(P21) == -1.0
    assert K_prime_at_1(P12) == -2.0


def test_domain_errors():
    with pytest.raises(DomainError):
        eval_F(FKPP, 1.1)
    with pytest.raises(DomainError):
        eval_K(FKPP, -0.01)
    # rounding-level excursions are tolerated
    assert eval_F(FKPP, 1.0 + 1e-14) == 0.0


@pytest.mark.parametrize("kw", [dict(m=1.0), dict(m=0.5), dict(nu=0.0), dict(c=-1.0),
                                dict(nu=float("nan"))])
def test_invalid_params(kw):
    with pytest.raises(ValidationError):
        ModelParams(**kw)


def test_invalid_reaction():
    with pytest.raises(ValidationError):
        ReactionSpec("allen-cahn")
    with pytest.raises(ValidationError):
        ReactionSpec.power_law(0.5, 1)


def test_dict_roundtrip():
    p = ModelParams(nu=0.5, c=2.0, m=3.0, reaction=ReactionSpec.power_law(2, 3))
    d = p.to_dict()
    assert set(d) == {"nu", "c", "m", "reaction.kind", "reaction.p", "reaction.q"}
    assert ModelParams.from_dict(d) == p
    nested = {"nu": "0.5", "c": 2, "m": 3, "reaction": {"kind": "powerlaw", "p": 2, "q": 3}}
    assert ModelParams.from_dict(nested) == p


def test_decimal_comma_rejected():
    with pytest.raises(ValidationError):
        ModelParams.from_dict({"nu": "0,5"})


def test_F_equals_u_K_and_positive():
    u = np.linspace(0, 1, 2001)[1:-1]
    for p in (FKPP, P21, P12):
        F = eval_F(p, u)
        assert np.all(F > 0)
        np.testing.assert_allclose(F, u * eval_K(p, u), rtol=1e-14)


def test_K_continuous_at_zero():
    h = 2.0 ** -np.arange(1, 40)
    for p in (FKPP, P12, P21):
        gaps = np.abs(eval_K(p, h) - eval_K(p, 0.0))
        assert gaps[-1] < 1e-10
        assert np.all(np.diff(gaps) <= 1e-15)


def test_derivative_matches_finite_difference():
    h = 1e-6
    for p in (FKPP, P21, P12):
        for u in (0.2, 0.5, 0.8):
            fd = (eval_F(p, u + h) - eval_F(p, u - h)) / (2 * h)
            assert F_prime(p, u) == pytest.approx(fd, rel=1e-7, abs=1e-9)
        assert F_prime(p, 1.0) == K_prime_at_1(p)


def test_lipschitz():
    assert lipschitz_constant(FKPP) == 1.0
    assert lipschitz_constant(P12) == pytest.approx(2.0, rel=1e-6)


@given(st.floats(1.0, 4.0), st.floats(1.0, 4.0), st.floats(0.0, 1.0))
def test_power_law_property(p, q, u):
    params = ModelParams(reaction=ReactionSpec.power_law(p, q))
    F = eval_F(params, u)
    assert F >= 0
    assert math.isclose(F, u**p * (1 - u**q), rel_tol=1e-12, abs_tol=1e-300)
    assert K_prime_at_1(params) == -q
