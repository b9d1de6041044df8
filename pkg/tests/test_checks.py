import pytest

from hypckn.checks import CHECKS, check_volume_factors, positivity_params, run_checks


@pytest.fixture(scope="module")
def results():
    return {r.name: r for r in run_checks()}


def test_all_checks_pass(results):
    assert len(results) == len(CHECKS)
    failed = [r for r in results.values() if not r.passed]
    assert not failed, failed


def test_weight_fault_trips_quadrature_only():
    (r,) = run_checks(["quadrature"], fault="weight")
    assert not r.passed and r.worst > 1e-6


def test_subset_and_unknown():
    assert [r.name for r in run_checks(["hardy"])] == ["hardy"]
    with pytest.raises(ValueError):
        run_checks(["nope"])


def test_positivity_parameter_set_satisfies_hypotheses():
    assert len(positivity_params()) >= 10
    assert check_volume_factors().passed
