"""Every verification suite passes at its default settings."""
import pytest

from cxkenergy.errors import ConfigError
from cxkenergy.suites import BACKENDS, SUITES, RunConfig, run_suite

ONLY = {"surface": ("torus-n2",), "futaki": ("cp1",)}
CASES = [(s, b) for s in SUITES for b in ONLY.get(s, BACKENDS)]


@pytest.mark.parametrize("suite,backend", CASES)
def test_suite_passes(suite, backend):
    report = run_suite(RunConfig(backend=backend), suite)
    failed = [c for c in report.checks if not c.passed]
    assert report.checks and not failed, failed


@pytest.mark.parametrize("suite,backend", [("surface", "cp1"), ("futaki", "torus-n1")])
def test_suite_rejects_backend(suite, backend):
    with pytest.raises(ConfigError):
        run_suite(RunConfig(backend=backend), suite)
