"""Smoke test for the pyqsynth extension.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`
or `pip install --no-build-isolation ./crates/py`.
"""

import json

import pyqsynth


def main():
    walk = pyqsynth.Model.walk(5)
    assert walk.functional_width == 6

    flexible = pyqsynth.synthesize_model(walk, objective="cx", max_width=10, seed=1)
    narrow = pyqsynth.synthesize_model(walk, objective="width")
    assert flexible.status == "optimal" and narrow.status == "optimal"
    assert flexible.cx < narrow.cx
    assert narrow.width == 6 < flexible.width <= 10

    width, depth, cx, single = pyqsynth.qasm_metrics(flexible.qasm)
    report = json.loads(flexible.report_json())
    assert report["metrics"] == {"width": width, "depth": depth, "cx": cx, "single": single}

    assert pyqsynth.synthesize_model(walk, max_width=1).status == "infeasible"

    csv = pyqsynth.run_sweep("walk", [3, 4], [None, 9], objective="cx")
    assert len(csv.strip().splitlines()) == 5

    qsvt = pyqsynth.Model.qsvt(2, [0.1, 0.2, 0.3, 0.4])
    print("qsvt:", pyqsynth.synthesize_model(qsvt, objective="cx"))
    print("walk:", flexible, narrow)
    print("smoke test passed")


if __name__ == "__main__":
    main()
