"""Acceptance criteria, one test each.

Every test prints ``criterion N: PASS|FAIL value=<worst> tol=<tolerance>``
(also repeated in the terminal summary) and then asserts the outcome.  The
worst value is the report farthest from its tolerance in the failing
direction.
"""

import time

import pytest

from fracwave.cli import main
from fracwave.verify import SuiteSettings, run_suite

from conftest import ACCEPTANCE_LINES

SETTINGS = SuiteSettings()


def _worst(reports):
    """The report with the least margin: failing ones first, then closest to the tolerance."""
    def margin(r):
        if r.passed is False:
            return -float("inf") if r.value != r.value else -abs(r.value - r.tolerance) - 1.0
        if r.relation in ("<=", "<"):
            return (r.tolerance - r.value) / max(abs(r.tolerance), 1e-300)
        return (r.value - r.tolerance) / max(abs(r.tolerance), 1e-300)

    return min(reports, key=margin)


def _record(n, ok, value, tol, extra=""):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} value={value:.6g} tol={tol:.6g}{extra}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def _run(n, ids, budget):
    start = time.perf_counter()
    reports = run_suite(ids, SETTINGS)
    elapsed = time.perf_counter() - start
    ok = all(r.passed for r in reports) and elapsed < budget
    worst = _worst(reports)
    _record(n, ok, worst.value, worst.tolerance,
            f" ({worst.id}, {worst.relation}) runtime={elapsed:.1f}s/{budget:.0f}s")
    failing = [(r.id, r.params, r.value, r.tolerance) for r in reports if not r.passed]
    assert not failing, failing
    assert elapsed < budget


def test_criterion_01_laplace_identity():
    _run(1, ["laplace_identity"], 10)


def test_criterion_02_kernel_mass():
    _run(2, ["kernel_mass"], 5)


def test_criterion_03_ml_range():
    # E_alpha changes sign on the negative axis for 1 < alpha < 2, so this
    # criterion cannot hold; it is evaluated as stated and left failing.
    _run(3, ["ml_range"], 5)


def test_criterion_04_manufactured():
    _run(4, ["manufactured"], 10)


def test_criterion_05_eigen_forcing():
    _run(5, ["eigen_forcing"], 5)


def test_criterion_06_power_rules():
    _run(6, ["power_rules"], 5)


def test_criterion_07_inversion():
    _run(7, ["inversion"], 10)


def test_criterion_08_cutoff_commutator():
    _run(8, ["cutoff_formula"], 30)


def test_criterion_09_elongated_oscillation():
    _run(9, ["elongated"], 60)


def test_criterion_10_halfspace_reflection():
    _run(10, ["halfspace_reflection"], 10)


def test_criterion_11_apriori_ratio():
    _run(11, ["apriori_ratio"], 300)


def test_criterion_12_oscillation_decay():
    _run(12, ["decay"], 120)


def test_criterion_13_weights():
    _run(13, ["weights"], 10)


def test_criterion_14_determinism(tmp_path):
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        main(["verify", "--seed", "0", "--out", str(out)])
        outputs.append({f: (out / f).read_bytes() for f in ("reports.csv", "weights.csv")})
    differing = [f for f in outputs[0] if outputs[0][f] != outputs[1][f]]
    _record(14, not differing, float(len(differing)), 0.0, " (files differing between two seeded runs)")
    assert not differing
