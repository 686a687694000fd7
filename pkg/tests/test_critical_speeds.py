import json

import numpy as np
import pytest

from fltwave.critical_speeds import (
    CriticalSpeeds,
    audit_is_monotone,
    check_bounds,
    critical_speeds,
    find_sigma_ent,
    find_sigma_smooth,
    u_plus,
)
from fltwave.errors import DomainError, InvalidBracket
from fltwave.phase_plane import IntegratorOptions, classify, u_star
from fltwave.reaction import ModelParams, ReactionSpec


def test_fkpp_values(crit):
    assert crit.sigma_smooth == pytest.approx(0.661621, abs=1e-3)
    assert crit.sigma_ent == pytest.approx(0.437803, abs=1e-3)


def test_bracket_endpoints(fkpp):
    assert classify(fkpp, 0.0).variant == "II"
    assert classify(fkpp, 2.0 * (1 - 1e-6)).variant == "I"


def test_smooth_is_type2_and_bouncing(fkpp, crit):
    assert classify(fkpp, crit.sigma_smooth).variant == "II"
    assert abs(u_plus(fkpp, crit.sigma_smooth) - u_star(fkpp, crit.sigma_smooth)) <= 1e-4
    assert u_star(fkpp, crit.sigma_smooth) == pytest.approx(0.3308, abs=1e-3)


def test_g_sign_checks(fkpp, crit):
    g = lambda s: s - u_plus(fkpp, s)
    assert g(crit.sigma_smooth) > 0
    assert g(crit.sigma_smooth / 2) < 0


def test_audit_and_bounds(fkpp, crit):
    assert audit_is_monotone(crit.audit)
    assert check_bounds(crit, fkpp) == []
    assert crit.n_probes == len(crit.audit) > 20
    assert {"stage", "sigma", "class"} <= set(crit.audit[0])


def test_u_plus_decreasing_along_audit(fkpp, crit):
    # stay clear of the grazing speed, where u_plus is only resolved to ~1e-6
    probes = sorted(a["sigma"] for a in crit.audit if a["stage"] == "smooth"
                    and a["class"] == "II" and a["sigma"] < crit.sigma_smooth - 1e-4)
    ups = [u_plus(fkpp, s) for s in probes[-8:]]
    assert np.all(np.diff(ups) < 0)


def test_u_plus_rejects_type1(fkpp):
    with pytest.raises(DomainError):
        u_plus(fkpp, 1.0)


def test_json_report(crit):
    doc = json.loads(crit.to_json())
    assert set(doc) == {"sigma_ent", "sigma_smooth", "tol", "n_probes", "audit"}
    assert crit.summary().splitlines()[0].startswith("sigma_ent=0.43")


def test_separate_entry_points(fkpp, crit):
    ss = find_sigma_smooth(fkpp, 1e-4)
    assert abs(ss - crit.sigma_smooth) < 2e-4
    se = find_sigma_ent(fkpp, 1e-4, sigma_smooth=ss)
    assert abs(se - crit.sigma_ent) < 2e-4


def test_invalid_tol(fkpp):
    with pytest.raises(ValueError):
        find_sigma_smooth(fkpp, 0.0)


def test_invalid_bracket_detected(fkpp):
    # a classification that never escapes makes the lower end invalid
    with pytest.raises(InvalidBracket):
        find_sigma_ent(fkpp, 1e-4, sigma_smooth=0.3)


@pytest.mark.parametrize("params", [
    ModelParams(nu=0.5, c=1.0, m=2.0),
    ModelParams(nu=1.0, c=2.0, m=3.0),
    ModelParams(reaction=ReactionSpec.power_law(1, 2)),
])
def test_bounds_other_models(params):
    cs = critical_speeds(params, 1e-5)
    assert check_bounds(cs, params) == []
    assert audit_is_monotone(cs.audit)


def test_launch_offset_bias_small(fkpp, crit):
    cs = critical_speeds(fkpp, 1e-6, IntegratorOptions(launch_offset=1e-8))
    assert abs(cs.sigma_smooth - crit.sigma_smooth) < 1e-4
    assert abs(cs.sigma_ent - crit.sigma_ent) < 1e-4


def test_dataclass_defaults():
    cs = CriticalSpeeds(0.4, 0.6, 1e-6)
    assert cs.n_probes == 0 and cs.audit == []
