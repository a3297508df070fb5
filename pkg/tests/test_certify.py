import copy
import json

import numpy as np
import pytest

from intsos.boundary import Pin
from intsos.certify import Certificate, check_certificate, dumps, fingerprint_text
from intsos.lyapunov import StabilityProblem
from intsos.polycore import PolyMatrix, coef_val
from intsos.problems import PoincareProblem


def const(*rows):
    return PolyMatrix(np.array(rows, dtype=float)[:, :, None])


@pytest.fixture(scope="module")
def poincare():
    prob = PoincareProblem(deg_h=7)
    return prob, prob.solve()


@pytest.fixture(scope="module")
def transport():
    prob = StabilityProblem((const([0.0]), const([-1.0])), (Pin(0, 0, 0),), rate=2.0, deg_P=8)
    res = prob.solve_raw()
    return prob, prob.certificate(res)


def test_valid_poincare_certificate_passes(poincare):
    prob, out = poincare
    assert out.report.passed
    assert out.value == pytest.approx(0.169397, abs=1e-5)
    assert "=> PASS" in out.report.summary()


def test_valid_transport_certificate_passes(transport):
    prob, cert = transport
    rep = check_certificate(prob, cert)
    assert rep.passed, rep.summary()
    assert cert.params["eps"] > prob.floor


def test_negative_gram_eigenvalue_rejected(poincare):
    prob, out = poincare
    cert = copy.deepcopy(out.certificate)
    Q = cert.constraints[0].gram_main
    w, V = np.linalg.eigh(Q)
    w[0] = -1e-3
    cert.constraints[0].gram_main = (V * w) @ V.T
    rep = check_certificate(prob, cert)
    assert not rep.gram_psd and not rep.passed
    assert rep.details["poincare.gram_min_eig"][0] == pytest.approx(-1e-3, rel=1e-6)


def test_violated_endpoint_sign_rejected(transport):
    prob, cert = transport
    bad = copy.deepcopy(cert)
    rec = next(c for c in bad.constraints if c.name == "derivative")
    h = rec.multipliers[0]
    h[0] += 0.1 - coef_val(h, 1.0, rec.basis)  # T_0 = 1 shifts the whole polynomial
    assert coef_val(h, 1.0, rec.basis) == pytest.approx(0.1)
    rep = check_certificate(prob, bad)
    assert not rep.multipliers_admissible and not rep.passed


def test_tampered_parameter_rejected(poincare):
    prob, out = poincare
    cert = copy.deepcopy(out.certificate)
    cert.params["kappa"] = 0.09  # below the true constant 1/pi^2
    rep = check_certificate(prob, cert)
    assert not rep.passed
    assert not rep.coefficient_residual


def test_eps_below_floor_rejected(transport):
    prob, cert = transport
    bad = copy.deepcopy(cert)
    bad.params["eps"] = 0.0
    rep = check_certificate(prob, bad)
    assert not rep.multipliers_admissible
    assert rep.details["sign:eps - eps_floor"] < 0


def test_fingerprint_and_shape_mismatch_raise(poincare):
    prob, out = poincare
    with pytest.raises(ValueError, match="fingerprint"):
        check_certificate(PoincareProblem(deg_h=5), out.certificate)
    cert = copy.deepcopy(out.certificate)
    cert.constraints = []
    with pytest.raises(ValueError, match="constraint records"):
        check_certificate(prob, cert)
    cert = copy.deepcopy(out.certificate)
    cert.constraints[0].name = "other"
    with pytest.raises(ValueError, match="does not match"):
        check_certificate(prob, cert)


def test_json_round_trip(transport, tmp_path):
    prob, cert = transport
    path = tmp_path / "cert.json"
    cert.save(path)
    back = Certificate.load(path)
    assert back.to_json() == cert.to_json()
    for a, b in zip(back.constraints, cert.constraints):
        assert np.array_equal(a.gram_main, b.gram_main) and np.array_equal(a.gram_loc, b.gram_loc)
        assert all(np.array_equal(x, y) for x, y in zip(a.multipliers, b.multipliers))
    assert back.params == cert.params
    assert check_certificate(prob, back).passed
    data = json.loads(path.read_text())
    assert set(data) == {"fingerprint", "kind", "params", "weights", "constraints", "metadata"}
    assert data["metadata"]["tool_version"]
    g = data["constraints"][0]["gram_main"]
    assert len(g["lower"]) == g["dim"] * (g["dim"] + 1) // 2


def test_bad_lower_triangle_length(transport):
    _, cert = transport
    d = cert.to_dict()
    d["constraints"][0]["gram_main"]["lower"].pop()
    with pytest.raises(ValueError, match="lower-triangle"):
        Certificate.from_dict(d)


def test_dumps_full_precision():
    assert dumps(0.1) == "0.10000000000000001"
    assert float(dumps(1 / 3)) == 1 / 3
    assert json.loads(dumps({"a": [1, 2.5], "b": {"c": None, "d": True}})) == {"a": [1, 2.5],
                                                                               "b": {"c": None, "d": True}}
    with pytest.raises(ValueError):
        dumps(float("nan"))
    with pytest.raises(TypeError):
        dumps(object())


def test_fingerprint_is_sha256_of_canonical_text():
    prob = PoincareProblem(deg_h=7)
    assert prob.fingerprint() == fingerprint_text(prob.canonical())
    assert len(prob.fingerprint()) == 64
    assert PoincareProblem(deg_h=9).fingerprint() != prob.fingerprint()
