"""How well can the predicted zeros of Theta be resolved in double precision?

For each zero w0 = +-q^(n-1), +-q^(-n) this prints |Theta(fl(w0))| from both
evaluators, the exact value at the binary number fl(w0) (mpmath) and the
rounding floor eps |w Theta'(w)|.  When q is not a dyadic rational, fl(w0) is
not a zero, and for large |w0| the exact value there exceeds 1e-10.

    python scripts/theta_zero_conditioning.py --q 0.3 0.5 0.7
"""
import argparse

import mpmath as mp

from qfid.cli import theta_rounding_floor
from qfid.qseries import theta_big


def theta_exact(w, q, dps=60):
    with mp.workdps(dps):
        w, q = mp.mpf(w), mp.mpf(q)
        q2 = q * q

        def g(x):
            s, k = mp.mpf(0), 0
            while True:
                t = (-1) ** k * q2 ** (k * (k + 1) // 2) * x ** (2 * k + 1)
                s += t
                if k > 5 and abs(t) < mp.mpf(10) ** (-dps):
                    return s
                k += 1

        return float(abs(q ** mp.mpf(0.25) * (g(w) - g(1 / w))))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--q", type=float, nargs="+", default=[0.3, 0.5, 0.7])
    ap.add_argument("--n-zeros", type=int, default=5)
    args = ap.parse_args()
    print(f"{'q':>4} {'w':>12} {'product':>10} {'series':>10} {'exact@fl(w)':>12} {'floor':>10}")
    for q in args.q:
        for n in range(1, args.n_zeros + 1):
            for w in (q ** (n - 1), q ** (-n)):
                print(f"{q:>4} {w:>12.6g} {abs(theta_big(w, q, 'product')):>10.2e} "
                      f"{abs(theta_big(w, q, 'series')):>10.2e} {theta_exact(w, q):>12.2e} "
                      f"{theta_rounding_floor(w, q):>10.2e}")


if __name__ == "__main__":
    main()
