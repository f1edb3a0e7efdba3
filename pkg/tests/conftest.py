import os

import pytest


@pytest.fixture(autouse=True, scope="session")
def _cache_dir(tmp_path_factory):
    os.environ.setdefault("CSK_CACHE_DIR", str(tmp_path_factory.mktemp("csk-cache")))
