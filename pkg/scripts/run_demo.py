#!/usr/bin/env python3
"""Run the two-agent scheduling scenario from the command line.

Examples:
    python scripts/run_demo.py
    python scripts/run_demo.py --gating
    python scripts/run_demo.py --gating --refuse-trust   # ends rejected
"""
import argparse
import sys

from charlie.demo import run_schedule_demo


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--gating", action="store_true",
                        help="leave permissions/trust ungranted so the flow pauses")
    parser.add_argument("--refuse-trust", action="store_true",
                        help="answer the trust question with refuse (implies --gating)")
    parser.add_argument("--dir", default=None, help="keep fixture state here")
    args = parser.parse_args()
    return run_schedule_demo(
        gating=args.gating or args.refuse_trust,
        refuse_trust=args.refuse_trust,
        workdir=args.dir,
    )


if __name__ == "__main__":
    sys.exit(main())
