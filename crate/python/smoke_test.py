"""Smoke test for the mqite_py extension.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""
import json
import math
import tempfile
from pathlib import Path

import mqite_py as m


def main():
    x, y = m.PauliString("XI"), m.PauliString("YI")
    phase, z = x.multiply(y)
    assert z.label() == "ZI" and phase == 1, (phase, z)
    assert not x.commutes(y)
    assert m.PauliString("XYZ").weight() == 3

    h = m.Hamiltonian([(-1.0, "ZZ"), (0.5, "XI"), (0.5, "IX")])
    e0, gap, deg = h.exact_ground()
    assert abs(e0 + math.sqrt(2.0)) < 1e-10, e0

    psi = m.StateVector(2)
    psi.apply_rotation(m.PauliString("XI"), math.pi / 4)
    assert abs(sum(abs(a) ** 2 for a in psi.amplitudes()) - 1.0) < 1e-12
    counts = psi.sample(1000, 7)
    assert sum(counts.values()) == 1000 and set(counts) <= {0, 2}

    gates = m.decompose_rotation("XYZ", 0.3)
    assert m.rotation_gate_count("XYZ", 0.3)[1] == 3
    assert any(g[0] == "rxx" for g in gates)

    assert m.presets() == sorted(m.presets())
    cfg = json.loads(m.preset_config("validation-6q"))
    cfg["mqite"]["T"] = 0.9
    with tempfile.TemporaryDirectory() as d:
        res = m.run(json.dumps(cfg), d)
        assert (Path(d) / "trajectory.csv").exists()
    assert len(res["energy"]) == 4
    assert res["energy"][-1] < res["energy"][0]
    assert abs(res["exact_energy"] + 3.118) < 1e-3
    print("ok: E(0.9) = %.4f, exact %.4f" % (res["energy"][-1], res["exact_energy"]))


if __name__ == "__main__":
    main()
