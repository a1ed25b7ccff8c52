"""
run_corpus.py

Run every corpus problem against its expected.json sidecar.

Typical usage:

    # Whole corpus
    uv run python scripts/run_corpus.py

    # Only some problems, results under out/
    uv run python scripts/run_corpus.py --only parity_steps array_shift --out out
"""

import argparse
import sys
from pathlib import Path

from invsynth.corpus import CORPUS_DIR, check_problem, problems, write_summary
from invsynth.log import configure
from invsynth.smt_client import SmtClient


# ======================================================================
# Main
# ======================================================================
def main() -> int:
    parser = argparse.ArgumentParser(description="Corpus regression runner")
    parser.add_argument("--corpus", default=str(CORPUS_DIR), help="Directory holding *.tcs problems")
    parser.add_argument("--only", nargs="*", help="Problem names (file stems) to run")
    parser.add_argument("--out", default="corpus-out", help="Directory for the results table")
    parser.add_argument("--log-level", default="WARNING")
    args = parser.parse_args()
    configure(args.log_level)

    paths = problems(Path(args.corpus))
    if args.only:
        paths = [p for p in paths if p.stem in set(args.only)]
    if not paths:
        print("[ERROR] No corpus problems found")
        return 1

    checks = []
    with SmtClient() as client:
        for path in paths:
            print(f"\n[CORPUS] {path.stem}")
            for c in check_problem(path, client):
                mark = "OK" if c.passed else "FAIL"
                print(f"  [{mark}] {c.run}: {c.outcome} after {c.iterations} iteration(s)")
                for problem in c.problems:
                    print(f"         {problem}")
                checks.append(c)

    _, md_path = write_summary(checks, Path(args.out))
    failed = [c for c in checks if not c.passed]
    print(f"\n[CORPUS] {len(checks) - len(failed)}/{len(checks)} runs passed → {md_path}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
