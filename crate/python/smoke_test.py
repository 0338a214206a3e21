"""Smoke test for the pyblockade extension module.

Build first:  cargo build --release -p pyblockade
Then run:     python3 python/smoke_test.py
"""

import math
import os
import shutil
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
ROOT = os.path.dirname(HERE)


def load_module():
    built = os.path.join(ROOT, "target", "release", "libpyblockade.so")
    if not os.path.exists(built):
        sys.exit(f"missing {built}; run `cargo build --release -p pyblockade`")
    stage = tempfile.mkdtemp()
    shutil.copy(built, os.path.join(stage, "pyblockade.so"))
    sys.path.insert(0, stage)
    import pyblockade

    return pyblockade


def main():
    pb = load_module()

    labels = pb.enumerate_basis(1, n_photon_max=1, n_s_max=None, n_r_max=None)
    assert len(labels) == 6, labels
    assert pb.two_level_basis(4) == [(4, 0, 0, 0), (3, 1, 0, 1)]

    p = pb.PhysicalParams(n_atoms=1, detuning=2000.0, signal_coupling=5.0)
    drive = pb.PulseEnvelope.square(40.0, 1.0)
    w = pb.effective_rabi(p, drive, 0.5)
    assert abs(abs(w) - 0.1) < 1e-12, w

    rsn = pb.signal_to_noise(1000.0, 8.0, 0.5)
    assert abs(rsn - 151.98) < 0.01, rsn

    # √N|Ω'| = 10 at N = 100: analytic π/2-area duration π/20
    p100 = pb.PhysicalParams(n_atoms=100, detuning=2000.0, signal_coupling=5.0)
    sol = pb.solve_pi_pulse(pb.PulseEnvelope.square(400.0, 0.1), p100, "duration", "two_level")
    assert abs(sol["pulse"].duration - math.pi / 20) < 1e-9, sol
    assert sol["transfer"] >= 0.9999, sol

    traj = pb.simulate(p100, sol["pulse"], tier="two_level", dt=1e-4)
    assert traj.success_probability >= 0.9999
    assert len(traj.times) == len(traj) == len(traj.population((99, 1, 0, 1)))

    h = pb.hamiltonian(pb.PhysicalParams(n_atoms=2, detuning=100.0, blockade_shift=30.0), drive, 0.3, n_photon_max=1)
    n = len(h)
    assert all(h[i][j] == h[j][i].conjugate() for i in range(n) for j in range(n))

    small = pb.PhysicalParams(n_atoms=3, detuning=200.0, signal_coupling=10.0, blockade_shift=500.0, rydberg_linewidth=0.0)
    dev, residual, _ = pb.oracle_compare(small, pb.PulseEnvelope.gaussian(20.0, 0.5, 0.25, 0.08))
    assert dev < 1e-8 and residual < 1e-10, (dev, residual)

    rows = pb.blockade_sweep(
        pb.PhysicalParams(n_atoms=3, detuning=0.0, signal_coupling=0.0, rydberg_linewidth=0.0),
        pb.PulseEnvelope.square(1.0, math.pi / 2),
        [1000.0, 0.0],
        1e-4,
    )
    assert [r[0] for r in rows] == [0.0, 1000.0]
    assert rows[1][1] < 1e-2 * rows[0][1]

    try:
        pb.simulate(pb.PhysicalParams(detuning=0.0), drive, tier="raman")
    except ValueError as e:
        assert "adiabatic elimination undefined" in str(e)
    else:
        raise AssertionError("zero detuning accepted")

    with tempfile.TemporaryDirectory() as out:
        cfg = os.path.join(out, "run.toml")
        with open(cfg, "w", encoding="utf-8") as f:
            f.write("[physics]\nn_atoms = 1\n")
        assert pb.run_command("rsn", cfg, out=out, no_timestamp=True) == 0
        with open(os.path.join(out, "rsn.csv"), encoding="utf-8") as f:
            assert f.readline().strip() == "density,length,wavelength,rsn"

    print("pyblockade smoke test passed")


if __name__ == "__main__":
    main()
