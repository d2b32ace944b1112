#!/usr/bin/env python3
"""Survey the built-in model presets: thresholds, decay classes, phases.

Example:

    python scripts/run_model_survey.py
"""

import numpy as np

from ends_scatter.geometry import classify_potential, critical_energy
from ends_scatter.presets import by_name


def main():
    for name in ("free", "A", "B", "C", "D"):
        model = by_name(name)
        lam_crit, diag = critical_energy(model)
        print(f"model {name}: r0={model.r0}, lambda_crit={lam_crit}")
        for i, end in enumerate(model.ends):
            cls, cdiag = classify_potential(model, i)
            print(f"  end {i + 1}: profile={end.name:<11} "
                  f"lambda0={end.lambda0:<7} class={cls:<12} "
                  f"decay_exponent={cdiag['exponent']:.3f}")
        x = np.linspace(-10.0, 10.0, 2001)
        q = model.q(x)
        print(f"  effective potential on |x|<=10: "
              f"[{np.min(q):.4f}, {np.max(q):.4f}]")


if __name__ == "__main__":
    main()
