"""Walkthrough: certify the entanglement a device preserves between two
nonorthogonal coherent test states.

The source-replacement picture turns a prepare-and-measure run into a
bipartite state whose negativity is measurable from homodyne data alone.
For a noiseless identity device the answer is known in closed form,
sqrt(1 - s^2) / 2 for overlap s, so this script checks the machinery
against it, then shows the bound degrade as the device adds noise until
the data becomes classically explainable.

Runs in about a minute; push N to 20 for publication-grade convergence.
"""

import math

from qbench.bench import PointSpec, run_point

OVERLAP = 0.6
N = 10


def show(tag: str, spec: PointSpec) -> None:
    result = run_point(spec)
    lo, up = result.lower, result.upper
    print(f"{tag:28s} lower={lo.lower_bound:.6f} [{lo.status.value}]  "
          f"upper={up.lower_bound if math.isfinite(up.lower_bound) else float('nan'):.6f} "
          f"[{up.status.value}]  quantum={result.quantum_domain}")


def main() -> None:
    exact = math.sqrt(1 - OVERLAP**2) / 2
    print(f"two coherent states, overlap {OVERLAP}, cutoff N={N}")
    print(f"noiseless reference value: sqrt(1 - s^2)/2 = {exact:.6f}\n")

    show("identity device", PointSpec("TwoCoherent", N=N, overlap=OVERLAP))
    show("excess noise 0.05", PointSpec("TwoCoherent", N=N, overlap=OVERLAP, V_ex=0.05))
    show("excess noise 0.10", PointSpec("TwoCoherent", N=N, overlap=OVERLAP, V_ex=0.1))
    # variance-only data certifies nothing here already well below one
    # vacuum unit, the heterodyne-and-reprepare level
    show("excess noise 0.30", PointSpec("TwoCoherent", N=N, overlap=OVERLAP, V_ex=0.3))
    show("excess noise 1.00", PointSpec("TwoCoherent", N=N, overlap=OVERLAP, V_ex=1.0))

    print("\nthe lower bound is the certified negativity floor; the hybrid")
    print("upper bound pins the exact truncated moments, so the true")
    print("minimum is sandwiched between the two columns.")


if __name__ == "__main__":
    main()
