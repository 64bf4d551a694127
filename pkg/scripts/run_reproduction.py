"""Recompute every published figure from the bundled trial dataset.

Writes report.json (machine-readable envelope), report.txt (rendered tables),
and deviation.txt (computed vs reference figures) to the output directory,
then prints the deviation report. Output is byte-identical across runs.
"""

from __future__ import annotations

import argparse
import os
import sys

from secspect import analytics, persistence


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out",
        default="reproduction",
        help="output directory (default: ./reproduction)",
    )
    parser.add_argument(
        "--alpha", type=float, default=0.05, help="significance level"
    )
    args = parser.parse_args(argv)

    result = analytics.reproduce(alpha=args.alpha)
    persistence.save_file(result["report"], os.path.join(args.out, "report.json"))
    persistence.write_text_atomic(
        analytics.render_report(result["report"]),
        os.path.join(args.out, "report.txt"),
    )
    deviation_text = analytics.render_reproduction(result)
    persistence.write_text_atomic(
        deviation_text, os.path.join(args.out, "deviation.txt")
    )

    print(deviation_text)
    print("artifacts written to %s" % args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
