#!/usr/bin/env python3
"""Write the parity fixture for an existing weights file: 100 random states
and the trainer-side float64 outputs.

    tools/export_parity.py weights/reference_policy.json weights/parity.json
"""

import argparse

from train_policy import write_parity


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("weights")
    ap.add_argument("out")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    write_parity(args.weights, args.out, args.seed)


if __name__ == "__main__":
    main()
