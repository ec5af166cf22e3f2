import importlib
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nof1 import _backend  # noqa: E402

# modules that call into the kernel backend (imported by path: some names are shadowed by functions)
_USERS = tuple(importlib.import_module(f"nof1.{m}") for m in ("chaos_oracle", "estimation", "signal", "simulation", "variance"))
BACKENDS = ["python"] + (["cython"] if _backend.compiled_kernels is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel implementation."""
    mod = _backend.python_kernels if request.param == "python" else _backend.compiled_kernels
    for user in _USERS:
        monkeypatch.setattr(user, "kernels", mod)
    return request.param


def pytest_report_header(config):
    return f"nof1 kernels: default={_backend.NAME}, tested={','.join(BACKENDS)}"
