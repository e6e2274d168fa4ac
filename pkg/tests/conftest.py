import pytest

from cavpass.kernels import available_backends, get_backend


@pytest.fixture(params=available_backends())
def backend(request):
    """Run a test against every kernel backend present in this build."""
    return get_backend(request.param)
