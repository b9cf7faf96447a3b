import pytest
import stopmax as smx


def test_spec_errors_are_value_errors():
    assert issubclass(smx.DistributionSpecError, ValueError)
    assert issubclass(smx.GameSpecError, ValueError)


@pytest.mark.parametrize(
    "error",
    [
        smx.DistributionSpecError,
        smx.GameSpecError,
        smx.ConvergenceError,
        smx.InstanceTooLargeError,
    ],
)
def test_errors_share_root(error):
    assert issubclass(error, smx.StopmaxError)
