import math

import numpy as np
import pytest

islt = pytest.importorskip("islt")


def test_version():
    assert islt.__version__ == "0.1.0"


def test_beta_parsing():
    assert islt.parse_beta_level("1/4") == 2
    with pytest.raises(ValueError):
        islt.parse_beta_level("0.25")
    p = islt.ModelParams.from_beta("1/2", 2)
    assert (p.k, p.nu, p.d) == (1, 2, 2)


def test_half_density_is_folded_gaussian():
    p = islt.ModelParams(1, 1)
    t, s = 0.8, 0.6
    ref = math.exp(-s * s / (4 * t)) / math.sqrt(math.pi * t)
    assert islt.isl_density(p, t, s) == pytest.approx(ref, rel=1e-10)


def test_heat_kernel_and_l2():
    p = islt.ModelParams(0, 1)
    assert islt.isltbm_kernel(p, 1.0, [0.3]) == pytest.approx(math.exp(-0.09 / 2) / math.sqrt(2 * math.pi))
    for d in (1, 2, 3):
        assert islt.l2_norm_continuum(islt.ModelParams(0, d), 2.0) == pytest.approx((8 * math.pi) ** (-d / 2))


def test_lattice_rows_sum_to_one():
    p = islt.ModelParams(1, 1)
    r = islt.tail_radius(p, 0.2, 1.0)
    total = sum(islt.isltrw_kernel(p, 0.2, 1.0, [n]) for n in range(-r, r + 1))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_fit_recovers_power_law():
    lags = [2.0**-i for i in range(8, 0, -1)]
    f = islt.fit_loglog(lags, [3.0 * x**0.75 for x in lags])
    assert f["slope"] == pytest.approx(0.75, abs=1e-12)


def test_verify_l2_summary_fields():
    v = islt.verify_l2(islt.ModelParams(1, 1))
    assert v["exponent_expected"] == pytest.approx(-0.25)
    assert v["pass"]
    assert len(v["x"]) == len(v["y"])


def test_zero_coefficient_returns_the_deterministic_part():
    c = islt.SIEConfig.defaults(1, 1)
    c.set_lattice(0.1, 1.0)
    c.steps = 32
    c.a = "zero"
    c.u0 = "cosine"
    s = islt.SIESolver(c)
    u, det = s.solve(0)
    assert u.shape == (33, s.sites)
    assert np.array_equal(u, det)


def test_gaussian_variance_matches_exact():
    c = islt.SIEConfig.defaults(1, 1)
    c.set_lattice(0.1, 1.0)
    c.steps = 32
    s = islt.SIESolver(c)
    var = s.variance(400)
    centre = c.half_width
    exact = s.exact_variance(32, [0])
    # Gaussian field: relative SE of the sample variance is sqrt(2 / R) ~ 0.07
    assert abs(var[32, centre] - exact) < 3.5 * math.sqrt(2 / 400) * exact


def test_bad_input_raises_value_error():
    with pytest.raises(ValueError):
        islt.ModelParams(5, 1)
