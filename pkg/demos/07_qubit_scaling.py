"""Reservoir-size study: relative forecast error versus qubits per stream.

Compares reservoirs with and without cross-stream entanglement across
register widths, against the 0.30 relative-error reference line.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qforecast.bench import RELATIVE_ERROR_THRESHOLD, run_experiment

OUT = __import__("pathlib").Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

config = {
    "kind": "qubit_scaling",
    "output_dir": str(OUT / "qubit_scaling_run"),
    "dataset": {
        "n_customers": 103, "n_hours": 480, "seed": 13,
        "cluster_loading": 0.85, "ar_coeff": 0.3, "daily_amplitude": 0.05,
        "noise_scale": 0.2, "peak_rate": 0.01,
    },
    "subset": {"role": "triplet", "size": 3},
    "scaling": {"qubit_sizes": [2, 3, 4, 5]},
}
report = run_experiment(config)
rows = report.extras["qubit_scaling"]

print("n_q  entangled  avg relative error")
for r in rows:
    print(f"{r['n_qubits']:<4d} {str(r['entangled']):<10} {r['avg_relative_error']:.3f}")

fig, ax = plt.subplots(figsize=(6.5, 4))
for entangled, style, label in ((True, "C0o-", "cross-stream entanglement"),
                                (False, "C1s--", "independent streams")):
    pts = [(r["n_qubits"], r["avg_relative_error"]) for r in rows
           if r["entangled"] == entangled]
    ax.plot(*zip(*pts), style, label=label)
ax.axhline(RELATIVE_ERROR_THRESHOLD, color="gray", ls=":",
           label=f"reference {RELATIVE_ERROR_THRESHOLD}")
ax.set_xlabel("system qubits per stream")
ax.set_ylabel("average relative forecast error")
ax.set_title("Reservoir size and cross-stream coupling")
ax.legend(fontsize=9)
fig.tight_layout()
fig.savefig(OUT / "qubit_scaling.png", dpi=120)
print(f"figure saved under {OUT}")
