"""Residual of the truncated series against eta for several truncation orders."""
import argparse

from fraclind.lindstedt import expand, residual_scaling
from fraclind.model import custom_model


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--orders", default="2,3,4,5,6")
    ap.add_argument("--branch", default="plus")
    args = ap.parse_args()
    model = custom_model()
    print(f"{'K':>3} {'exponent':>9}  residuals at eta = 1e-3, 2e-3, 5e-3, 1e-2")
    for K in (int(v) for v in args.orders.split(",")):
        rep = residual_scaling(expand(model, K, branch=args.branch), (1e-3, 2e-3, 5e-3, 1e-2))
        norms = " ".join(f"{r:.3e}" for r in rep.residual_norms)
        print(f"{K:>3} {rep.fitted_exponent:9.3f}  {norms}")


if __name__ == "__main__":
    main()
