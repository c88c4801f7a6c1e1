"""Excluded parameter measure on the elliptic branch at successive scales."""
import argparse

from fraclind.model import custom3_model
from fraclind.resonance import analyze
from fraclind.selfenergy import eigenvalue_function, excluded_measure_single_scale, self_energy_scale_minus1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta-bar", type=float, default=0.1)
    ap.add_argument("--scales", default="3,4,5,6")
    ap.add_argument("--cutoff", type=int, default=100)
    ap.add_argument("--tau1", type=float, default=4.25)
    args = ap.parse_args()
    model = custom3_model()
    res = analyze(model)
    M = self_energy_scale_minus1(model, res, branch="plus")
    lam = eigenvalue_function(M)
    eps_bar = args.eta_bar ** res.k0
    prev = None
    print(f"{'m':>3} {'measure':>12} {'bound':>12} {'ratio':>8}")
    for m in (int(v) for v in args.scales.split(",")):
        rep = excluded_measure_single_scale(lam, model.omega, m, args.cutoff, args.tau1,
                                            (eps_bar / 4, eps_bar), M.C0, res.k0)
        ratio = rep.measure / prev if prev else float("nan")
        print(f"{m:>3} {rep.measure:12.5e} {rep.bound:12.5e} {ratio:8.5f}")
        prev = rep.measure


if __name__ == "__main__":
    main()
