"""Run the grid certificate for a range of q and print a one-line summary per q.

    python scripts/certify_sweep.py --sweep 0.1:0.9:0.1 --out certificates.json
"""
import argparse
import json

from qfid.certify import GridSpec, parse_grid, parse_sweep, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sweep", default="0.1:0.9:0.1")
    ap.add_argument("--grid", default=None, help="re_min:re_max:im_min:im_max:nx:ny")
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default=None, help="write all certificates as one JSON array")
    args = ap.parse_args()

    grid = parse_grid(args.grid) if args.grid else GridSpec()
    certs = sweep(parse_sweep(args.sweep), grid, args.tol, workers=args.workers)
    for c in certs:
        print(f"q={c.q:<5} pass={c.passed!s:<5} max_im_phi={c.max_im_phi:+.3e} "
              f"failures={len(c.inversion_failures)} runtime={c.runtime_ms / 1000:.1f}s")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump([c.to_dict() for c in certs], fh, indent=2)
    return 0 if all(c.passed for c in certs) else 1


if __name__ == "__main__":
    raise SystemExit(main())
