"""Run the full synthetic benchmark and print the method comparison table.

Equivalent to `lexipivot pipeline` on the default configuration, plus a
compact stdout summary of every method's MRR / P@K row.
"""

import argparse
import json
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from lexipivot.config import RunConfig, load_config  # noqa: E402
from lexipivot.pipeline import run_pipeline  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", type=Path, default=None)
    parser.add_argument("--out", type=Path, default=Path("runs/benchmark"))
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    config = load_config(args.config) if args.config else RunConfig()
    config.validate()
    if args.seed is not None:
        config.seed = args.seed

    start = time.time()
    result = run_pipeline(config, args.out)
    elapsed = time.time() - start

    report = json.loads((result["induce"]["out_dir"] / "report.json").read_text())
    rows = [r for r in report["reports"] if r["pos"] == "all"]
    print(f"\nbenchmark finished in {elapsed / 60:.1f} min (seed {config.seed})")
    print(f"{'method':12s} {'n':>4s} {'MRR':>7s} {'P@1':>7s} {'P@5':>7s} "
          f"{'P@10':>7s} {'P@20':>7s}")
    for r in rows:
        print(f"{r['method']:12s} {r['n']:4d} {r['mrr']:7.3f} {r['p1']:7.1f} "
              f"{r['p5']:7.1f} {r['p10']:7.1f} {r['p20']:7.1f}")
    print(f"\nfull reports: {result['induce']['out_dir']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
