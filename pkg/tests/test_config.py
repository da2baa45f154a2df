import pytest

from adveig import flows
from adveig.config import ConfigError, build_problem, effective_config, load_config, parse_config


def test_preset_merge_and_overrides():
    cfg = parse_config('[problem]\npreset = "p3"\n[domain]\nnx = 33\nny = 33\n[analysis]\nK = 4\n')
    P, eff = build_problem(cfg, ny=17, A=2.0)
    assert P.grid.nx == 33 and P.grid.ny == 17
    assert P.c == "cos(pi*x)" and isinstance(P.flow, flows.StreamFunction)
    assert eff["analysis"]["K"] == 4 and eff["analysis"]["delta"] == 0.01
    assert eff["amplitudes"]["A"] == 2.0
    assert eff["problem"]["preset"] == "P3"


def test_default_amplitude_is_last_value():
    eff = effective_config(parse_config("[amplitudes]\nvalues = [0, 1, 3]\n"))
    assert eff["amplitudes"]["A"] == 3.0


def test_custom_problem():
    text = """
# a Robin channel
[domain]
x = [0, 2]
nx = 33
[bc]
b = 0.25
[coefficients]
a = "1 + x"
c = 1     ; inline comment
[flow]
kind = "constant"
vector = [1.5]
[solver]
tol = 1e-9
"""
    P, eff = build_problem(parse_config(text))
    assert P.grid.x1 == 2.0 and P.b == 0.25 and P.c == "1.0"
    assert P.flow == flows.Constant((1.5,))
    assert P.tol == 1e-9


def test_explicit_flow_replaces_preset():
    P, _ = build_problem(parse_config('[problem]\npreset = "P3"\n[flow]\nkind = "zero"\n'))
    assert isinstance(P.flow, flows.Zero)


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("[problem]\npreset = \"P1\"\n\n[solver]\nbogus = 1\n", 5, "unknown key"),
        ("[domain]\nnx = 9\n[extras]\nx = 1\n", 3, "unknown section"),
        ("[coefficients]\n\nc = \"sin(\"\n", 3, "bad expression"),
        ("[domain]\nnx = \"many\"\n", 2, "expected an integer"),
        ("[domain]\nx = [0, 1, 2]\n", 2, "two numbers"),
        ("nx = 3\n", 1, "outside"),
        ("[bc]\nb = 1\nb = 2\n", 3, ""),
        ("[problem]\npreset = \"P9\"\n", 2, "unknown preset"),
        ("[bc]\nb = 1.5\n", 2, "[0, 1]"),
        ("[flow]\nkind = \"vortex\"\n", 2, "flow.kind"),
        ("[flow]\nkind = \"stream\"\n", 2, "needs flow.expr"),
    ],
)
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as err:
        build_problem(parse_config(text))
    assert err.value.line == line
    assert str(err.value).startswith(f"line {line}: ")
    assert fragment in str(err.value)


def test_bad_grid_and_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="bad domain"):
        build_problem(parse_config("[domain]\nnx = 1\n"))
    with pytest.raises(ConfigError, match="config not found"):
        load_config(tmp_path / "none.ini")


def test_flow_dimension_mismatch():
    with pytest.raises(ConfigError, match="flow"):
        build_problem(parse_config('[flow]\nkind = "constant"\nvector = [1, 0]\n'))
