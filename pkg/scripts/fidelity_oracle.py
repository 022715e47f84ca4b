#!/usr/bin/env python3
"""Independent check of the unit-gain fidelity law F(q) = (1+q)/2.

Integrates exp(-(1-q)^2 |phi|^2) against the Gaussian outcome density
(1-q^2)/pi exp(-(1-q^2)|phi|^2) on a plain Cartesian grid with scipy's
adaptive dblquad, sharing no code with the Gauss-Laguerre path in
cvtele.measurement. Writes a CSV of q, oracle, closed form, quadrature.

Usage:
  python3 scripts/fidelity_oracle.py [--points 20] [--out analysis_outputs/fidelity_oracle.csv]
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import dblquad

ROOT = Path(__file__).resolve().parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from cvtele.fock import coherent_state
from cvtele.measurement import average_fidelity
from cvtele.transfer import TeleportParams

TOLERANCE = 1e-6


def oracle_fidelity(q: float) -> float:
    weight = 1.0 - q * q
    loss = (1.0 - q) ** 2
    # the integrand is below 1e-30 outside |x|, |y| <= 9 for every q in [0, 1)
    limit = 9.0 / math.sqrt(weight)

    def integrand(y: float, x: float) -> float:
        r2 = x * x + y * y
        return weight / math.pi * math.exp(-(weight + loss) * r2)

    value, _ = dblquad(integrand, -limit, limit, -limit, limit, epsabs=1e-12, epsrel=1e-12)
    return value


def main() -> int:
    parser = argparse.ArgumentParser(description="Check the unit-gain fidelity law by direct 2-D integration.")
    parser.add_argument("--points", type=int, default=20)
    parser.add_argument("--out", default=str(ROOT / "analysis_outputs" / "fidelity_oracle.csv"))
    args = parser.parse_args()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    worst = 0.0
    with out.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["q", "oracle", "closed_form", "quadrature"])
        for q in np.linspace(0.0, 0.95, args.points):
            q = float(q)
            oracle = oracle_fidelity(q)
            quad = average_fidelity(TeleportParams(q, 1.0, 20), coherent_state(1.0, 20), alpha=1.0).fidelity_mean
            closed = (1.0 + q) / 2.0
            worst = max(worst, abs(oracle - closed), abs(quad - oracle))
            writer.writerow([format(q, ".17g"), format(oracle, ".17g"), format(closed, ".17g"), format(quad, ".17g")])

    if worst > TOLERANCE:
        print(f"ORACLE_FAIL worst={worst:.3g} tol={TOLERANCE:g}")
        return 1
    print(f"ORACLE_OK points={args.points} worst={worst:.3g} out={out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
