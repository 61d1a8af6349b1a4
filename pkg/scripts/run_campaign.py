#!/usr/bin/env python3
"""Run the full desk-scale campaign: every gait crossed with every
wrapper, five seeds each, then the comparison table.

Writes one run directory per (gait, wrapper) under the output root.
With default budgets this is 75 training runs and takes a while; pass
--quick for a fast smoke campaign.
"""

import argparse
import sys

from gaitrm.cli import main as gaitrm_main
from gaitrm.machine import Gait
from gaitrm.wrappers import WrapperKind


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="campaign_out")
    parser.add_argument("--seeds", default="5")
    parser.add_argument("--quick", action="store_true",
                        help="2,000-step runs instead of the full budget")
    args = parser.parse_args()

    budget = ["--total-steps", "2000", "--eval-every", "1000"] if args.quick else []
    for gait in Gait:
        for kind in WrapperKind:
            run_dir = f"{args.out}/{gait.value}_{kind.value}"
            argv = [
                "train",
                "--gait", gait.value,
                "--wrapper", kind.value,
                "--seeds", args.seeds,
                "--out", run_dir,
                *budget,
            ]
            print(f"== gaitrm {' '.join(argv)}")
            code = gaitrm_main(argv)
            if code != 0:
                return code
    return gaitrm_main(["compare", args.out])


if __name__ == "__main__":
    sys.exit(main())
