import os

import pytest


@pytest.fixture(autouse=True, scope="session")
def _isolated_omega_cache(tmp_path_factory):
    # keep the sphere-constant calibration cache out of the user's home
    os.environ["JUMPKERNEL_CACHE_DIR"] = str(tmp_path_factory.mktemp("cache"))
    yield
