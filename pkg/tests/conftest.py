import pytest
from hypothesis import HealthCheck, settings

from termforge import kernels

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

IMPLS = kernels.implementations()


@pytest.fixture(params=sorted(IMPLS))
def kernel_impl(request, monkeypatch):
    """Route every kernel call through one implementation for the test's duration."""
    impl = IMPLS[request.param]
    for name in ("normalize_with_offsets", "scan_spans", "ngram_counts", "clipped_matches"):
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


@pytest.fixture(scope="session")
def hermetic_run(tmp_path_factory):
    """One full mock pipeline run shared by tests that only read its outputs."""
    import pipeline

    return pipeline.run_pipeline(tmp_path_factory.mktemp("hermetic"))


CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        status, title = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {title}")
