import math

import numpy as np
import pytest

import biot_st


def test_quadrature_rules():
    x, w = biot_st.gauss_legendre(3)
    assert np.isclose(w.sum(), 2.0)
    assert np.isclose(np.dot(w, x**4), 2.0 / 5.0)
    x, w = biot_st.gauss_radau(2)
    assert x[-1] == pytest.approx(1.0)
    assert np.isclose(np.dot(w, x**2), 2.0 / 3.0)
    x, w = biot_st.gauss_lobatto(2)
    assert np.allclose(x, [-1.0, 1.0]) and np.allclose(w, [1.0, 1.0])


def test_lame_parameters():
    lam, mu = biot_st.lame_from_E_nu(20000.0, 0.3)
    assert lam == pytest.approx(20000.0 * 0.3 / (1.3 * 0.4))
    assert mu == pytest.approx(20000.0 / 2.6)


def test_describe_and_errors():
    text = biot_st.describe(study="benchmark", E=20000, nu=0.3)
    assert "lambda=11538.46154" in text and "mu=7692.307692" in text
    with pytest.raises(biot_st.ConfigError):
        biot_st.describe(scheme="cG", k=0)
    with pytest.raises(biot_st.ConfigError):
        biot_st.describe(no_such_key=1)
    assert "scheme" in biot_st.config_keys()


def test_manufactured_solution_at_rest():
    fields = biot_st.manufactured_solution(0.3, 0.7, 0.0)
    assert fields["u"] == pytest.approx((0.0, 0.0), abs=1e-14)
    assert math.isfinite(fields["p"])


def test_convergence_small():
    res = biot_st.convergence(scheme="cG", k=2, r=2, levels=[0, 1], T=0.2, base_cells=2)
    assert list(res["level"]) == [0, 1]
    errors = res["err_grad_u"]
    assert errors.shape == (2,) and np.all(errors > 0)
    assert errors[1] < errors[0]
    assert res["h"][1] == pytest.approx(0.5 * res["h"][0])


def test_benchmark_small():
    res = biot_st.benchmark(level=0, r=2, k=1, tau=0.25, T=1)
    t = res["t"]
    assert t[0] == 0.0 and t[-1] == pytest.approx(1.0)
    assert res["G_u"].shape == t.shape == res["G_p"].shape
    assert res["min_G_u"] <= res["max_G_u"]


def test_dominant_period():
    t = np.linspace(0.0, 4.0, 513)
    assert biot_st.dominant_period(t, np.sin(8 * math.pi * t)) == pytest.approx(0.25, abs=0.01)


def test_run_writes_csv(tmp_path):
    out = tmp_path / "conv"
    status = biot_st.run("convergence", scheme="dG", k=1, r=2, levels=[0], T=0.2, base_cells=2, out=str(out))
    assert status == biot_st.EXIT_SUCCESS
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0].startswith("# study=convergence")
    assert lines[1].startswith("level,h,tau")
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert biot_st.run("convergence", out=str(blocker)) == biot_st.EXIT_CONFIG_ERROR
