import pytest
from pydantic import ValidationError
import stopmax as smx


def test_options_defaults():
    opts = smx.StopmaxOptions()
    assert opts.seed == 0
    assert opts.grid == 4096
    assert opts.gm_grid == 8192
    assert opts.samples == 1_000_000
    assert opts.precision == 6
    assert opts.out == "json"


def test_options_env(monkeypatch):
    monkeypatch.setenv("STOPMAX_GRID", "128")
    monkeypatch.setenv("STOPMAX_SEED", "7")
    opts = smx.StopmaxOptions()
    assert opts.grid == 128
    assert opts.seed == 7


def test_options_validate_assignment():
    opts = smx.StopmaxOptions()
    with pytest.raises(ValidationError):
        opts.grid = 1
    with pytest.raises(ValidationError):
        opts.out = "xml"
