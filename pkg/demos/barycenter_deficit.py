"""Deficit of p equal bubbles on a regular simplex below p^(2 gamma/n) Y."""
import sys

from fracbubble import energy, make_params


def main(n=3, gamma=0.75):
    p = make_params(n, gamma)
    for k in (2, 3):
        rows = energy.barycenter_sweep(k, (4.0, 8.0, 16.0, 32.0), 1.0, p)
        for r in rows:
            print(f"p={r.p} sep={r.sep:5.1f} eps_sum={r.eps_sum:.4e} quotient={r.quotient:.6f} "
                  f"bound={r.bound:.6f} deficit={r.deficit:.4e} deficit/eps={r.deficit_per_eps:.3f}")


if __name__ == "__main__":
    main(*(float(a) if i else int(a) for i, a in enumerate(sys.argv[1:3])))
