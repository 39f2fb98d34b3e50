"""Compare fitted gap exponents in the two interaction regimes.

In the scale-ratio regime the fitted exponent tracks the stated error term.
In the separation regime the gap decays faster, like eps^((n + 2 gamma)/(n - 2 gamma)).
"""
from fracbubble import interactions, make_params
from fracbubble.suites import DEFAULT_MATRIX


def main():
    print(f"{'n':>2} {'gamma':>5} {'regime':>10} {'order':>9} {'fitted':>8} {'stated':>8} "
          f"{'(n+2g+k)/s':>10}")
    for n, g in DEFAULT_MATRIX:
        p = make_params(n, g)
        for kind in ("ratio", "separation"):
            for order in interactions.ORDERS:
                sw = interactions.interaction_sweep(kind, order, p)
                guess = "-"
                if kind == "separation":
                    guess = f"{(n + 2 * g + interactions.STATED[order]) / p.s:.3f}"
                print(f"{n:2d} {g:5.2f} {kind:>10} {order:>9} {sw.fitted_exponent:8.3f} "
                      f"{sw.predicted_exponent:8.3f} {guess:>8}")


if __name__ == "__main__":
    main()
