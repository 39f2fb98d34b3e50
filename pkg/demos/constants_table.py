"""Print the model-space constants and their cross-relation residuals for the default matrix."""
from fracbubble import compute_constants, make_params
from fracbubble.suites import DEFAULT_MATRIX


def main():
    for n, g in DEFAULT_MATRIX:
        cs = compute_constants(make_params(n, g))
        print(f"n={n} gamma={g}")
        for k, v in cs.as_dict().items():
            print(f"  {k:14s} {v:.12g}")
        for k, v in cs.residuals.items():
            print(f"  residual {k:20s} {v:+.2e}")


if __name__ == "__main__":
    main()
