import mpmath as mp
import pytest

from maass_shift.maass import delta_maass_form
from maass_shift.modular import delta_expansion
from maass_shift.numerics import PrecisionContext


@pytest.fixture(scope="session")
def ctx():
    return PrecisionContext()


@pytest.fixture(scope="session")
def delta():
    return delta_expansion(6000)


@pytest.fixture(scope="session")
def hmf(ctx):
    """Calibrated weight -10 form with shadow Δ, shared across the session."""
    return delta_maass_form(ctx)


@pytest.fixture(autouse=True)
def _restore_mp_precision():
    prec = mp.mp.prec
    yield
    mp.mp.prec = prec
