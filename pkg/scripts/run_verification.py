#!/usr/bin/env python3
"""Two-oracle verification sweep.

Checks the closed forms against the transfer-matrix composition on a random
parameter grid and against the stochastic integrator at three spot
configurations.  Exits nonzero on any discrepancy.
"""

import argparse
import sys
import time

from sqzcavity import (
    CavityParams,
    ExternalSqueezeSource,
    InputQuadratureState,
    SdeRunSpec,
    compare_oracles,
    input_state_from_source,
    random_compare_grid,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grid-points", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=20240601)
    parser.add_argument("--skip-sde", action="store_true",
                        help="analytic grid only (fast)")
    args = parser.parse_args()

    cav = CavityParams(t_c=0.11, eps_int=0.012)
    state = input_state_from_source(ExternalSqueezeSource(10.5), 0.08)

    points = random_compare_grid(args.grid_points, args.seed)
    sde_specs = []
    if not args.skip_sde:
        sde_specs = [
            ("vacuum_passive",
             SdeRunSpec(cavity=cav, q=0.0,
                        input_state=InputQuadratureState.vacuum(),
                        eps_read=0.0, seed=args.seed), "sq"),
            ("squeezed_passive",
             SdeRunSpec(cavity=cav, q=0.0, input_state=state, eps_read=0.10,
                        seed=args.seed + 1), "sq"),
            ("anti_with_gain",
             SdeRunSpec(cavity=cav, q=0.0085, input_state=state, eps_read=0.10,
                        seed=args.seed + 2), "anti"),
        ]

    t0 = time.time()
    report = compare_oracles(points, sde_specs=sde_specs)
    print(f"analytic grid: {len(report.analytic)} points, "
          f"max rel diff = {report.max_analytic_diff:.3e} "
          f"(tolerance {report.analytic_tolerance:.0e})")
    for s in report.sde:
        print(f"sde {s.label}: z(0) = {s.z_zero:+.2f}, "
              f"se = {100 * s.stderr_rel_zero:.2f}%, "
              f"band |z|>3 fraction = {100 * s.frac_abs_z_above_3:.2f}% "
              f"-> {'pass' if s.passed else 'FAIL'}")
    print(f"elapsed {time.time() - t0:.1f}s  overall: "
          f"{'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
