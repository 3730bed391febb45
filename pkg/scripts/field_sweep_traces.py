#!/usr/bin/env python3
"""Reproduce the standard field-sweep pictures: reduced-tomogram and
entanglement time traces for muonium in quartz (longitudinal and transverse
field) and anomalous muonium in silicon (anisotropy along x, field along z).

Writes plot-ready CSV into ./traces_out/. Plot with anything, e.g.:

    python3 -c "
    import pandas as pd, matplotlib.pyplot as plt
    df = pd.read_csv('traces_out/quartz_longitudinal/evolve_quartz_B790.csv',
                     comment='#')
    z = df[df.axis == 'z']
    plt.plot(z.t_ns, z.w_reduced); plt.show()"
"""

import sys
from pathlib import Path

from musrtomo.cli import main

OUT = Path("traces_out")


def run():
    jobs = [
        # muonium in quartz, longitudinal field sweep 0 .. 2 B_c
        ["evolve", "--material", "quartz", "--B", "0", "790", "1580", "3160",
         "--B-axis", "z", "--t-max-ns", "3.0", "--steps", "1024",
         "--out", str(OUT / "quartz_longitudinal")],
        # muonium in quartz, transverse field
        ["evolve", "--material", "quartz", "--B", "790", "1580", "3160",
         "--B-axis", "x", "--t-max-ns", "3.0", "--steps", "1024",
         "--out", str(OUT / "quartz_transverse")],
        # anomalous muonium in silicon, anisotropy along x, field along z
        ["evolve", "--material", "si-mustar", "--aniso-axis", "x",
         "--B", "0", "10", "33", "100", "--B-axis", "z",
         "--t-max-ns", "400", "--steps", "2048",
         "--out", str(OUT / "silicon_mustar")],
    ]
    for job in jobs:
        rc = main(job)
        if rc != 0:
            return rc
    print(f"all traces under {OUT}/")
    return 0


if __name__ == "__main__":
    sys.exit(run())
