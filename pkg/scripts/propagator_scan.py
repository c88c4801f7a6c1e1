"""Resummed propagator norm on the small-divisor grid against the bound."""
import argparse

from fraclind.model import custom_model
from fraclind.resonance import analyze
from fraclind.selfenergy import propagator_bound_scan, self_energy_scale_minus1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eta", type=float, default=1e-2)
    ap.add_argument("--rho", type=float, default=10.0)
    ap.add_argument("--cutoff", type=int, default=50)
    ap.add_argument("--norm", choices=("l1", "spectral"), default="l1")
    args = ap.parse_args()
    model = custom_model()
    M = self_energy_scale_minus1(model, analyze(model), branch="plus")
    rep = propagator_bound_scan(M, args.eta, args.rho, omega=model.omega, cutoff=args.cutoff, norm=args.norm)
    print(f"{'x':>12} {'norm':>12} {'bound':>8} checked")
    for x, val, bound, checked in sorted(rep.points):
        print(f"{x:12.6f} {val:12.6e} {bound:8.3f} {bool(checked)}")
    print(f"violations {len(rep.violations)}  empirical rho_min {rep.rho_min:.3g}")


if __name__ == "__main__":
    main()
