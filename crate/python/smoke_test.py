"""Smoke test for the Python bindings.

Build and install first:  pip install -e crates/py --no-build-isolation
"""

import json

import kpa


def test_bracket():
    assert kpa.bracket("n1", "x0", "sr") == "x1"
    terms = sorted(kpa.bracket("n1", "P0bar", "dual").split(" + "))
    assert terms == sorted(["P1bar", "kappabar*n1"])


def test_verify_dual_phase_space():
    report = json.loads(kpa.verify("dual", suite="phase-space"))
    entries = report["entries"]
    assert len(entries) == 5
    assert all(e["verdict"] == "pass" and e["residual"] == "0" for e in entries)


def test_derive():
    text = kpa.derive("dsr1")
    assert "B = -1/kappa" in text
    assert "modulo mass shell" in text


def test_errors():
    for call in (lambda: kpa.verify("nope"), lambda: kpa.bracket("n1 +", "x0", "sr")):
        try:
            call()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"ok  {name}")
