import os
import subprocess

import pytest

import rcchain


def chain_netlist(n):
    lines = ["* py", "V1 drv 0 SIN(0 1 1G 0 0 90)", "M1 p0 drv 0 0 nmos", "Cp0 p0 0 1f"]
    prev = "p0"
    for i in range(1, n + 1):
        lines += [f"Rp0_{i} {prev} p0_{i} 1", f"Cp0_{i} p0_{i} 0 1f"]
        prev = f"p0_{i}"
    lines += [".model nmos nmos level=1", ".tran 1p 1n", ".end", ""]
    return "\n".join(lines)


def test_detect_and_reduce():
    text = chain_netlist(10)
    chains = rcchain.detect_chains(text)
    assert len(chains) == 1
    assert chains[0]["port"] == "p0" and chains[0]["n"] == 10
    reduced, report = rcchain.reduce(text)
    assert "p0_3" not in reduced
    assert report.startswith("port,n,tau_c,regime,model")
    assert rcchain.roundtrip(text) == text


def test_golden_error():
    _, rel = rcchain.weighted_errors([1e-3, 1e-7], [1.01e-3, 1e-10])
    assert abs(rel - 5.02e-3) <= 1e-5


def test_fn_gn_large_tau():
    F, G = rcchain.fn_gn(3, 1.0, 1.0)
    assert abs(F - 1.0) < 1e-3
    assert abs(G - 0.9998) < 1e-3


def test_admittance_and_simulation():
    y = rcchain.admittance(4, 1.0, 1e-15, 1e9)
    assert y.imag > 0
    t, v0, i = rcchain.simulate_full(4, 1.0, 1e-15, "pulse")
    assert len(t) == len(v0) == len(i) == 1001
    assert i[0] == 0.0
    rows = rcchain.run_sweep("sin", 1e-15, [1, 2, 4], jobs=2)
    assert [r["n"] for r in rows] == [1, 2, 4]
    assert all(r["E_rel"] < 1e-2 for r in rows)


def test_errors_are_python_exceptions():
    with pytest.raises(ValueError):
        rcchain.weighted_errors([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        rcchain.detect_chains("title\nR1 a b notanumber\n")


@pytest.mark.skipif("RCCHAIN_CLI" not in os.environ, reason="CLI path not given")
def test_cli_runs():
    out = subprocess.run([os.environ["RCCHAIN_CLI"], "tabulate-fg", "--n-max", "2"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.count("\n") >= 3
