import pytest

from nbesov.verify import run_suite


@pytest.fixture(scope="session")
def suite_reports(tmp_path_factory):
    """Run the default verification suite once and share the reports.

    Several test modules assert on the same experiments; running the suite
    a single time keeps the wall clock sane without weakening any check.
    """
    out = tmp_path_factory.mktemp("suite_reports")
    reports = run_suite(out_dir=str(out))
    return {"reports": {r.id: r for r in reports}, "out_dir": out}
