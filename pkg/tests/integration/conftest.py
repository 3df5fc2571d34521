import os

import pytest


def pytest_collection_modifyitems(items):
    """
    Apply a 300-second timeout to all integration tests.
    """
    for item in items:
        item.add_marker(pytest.mark.timeout(300))


@pytest.fixture(scope="function", autouse=True)
def isolated_output(tmp_path):
    """
    Points MFGJUMP_OUTPUT_DIR at a per-test directory so full-size runs
    never write into the working tree.
    """
    out_dir = tmp_path / "out"
    previous = os.environ.get("MFGJUMP_OUTPUT_DIR")
    os.environ["MFGJUMP_OUTPUT_DIR"] = str(out_dir)

    yield out_dir

    if previous is None:
        os.environ.pop("MFGJUMP_OUTPUT_DIR", None)
    else:
        os.environ["MFGJUMP_OUTPUT_DIR"] = previous
