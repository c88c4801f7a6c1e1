"""Convergence of the rescaled slow eigenvalue, with and without a quartic slow term."""
import argparse

from fraclind.model import Model, build_function, custom_model
from fraclind.resonance import analyze
from fraclind.selfenergy import FirstBandSelfEnergy, ell_convergence, ell_limit, self_energy_scale_minus1


def with_quartic(base, kappa):
    """Add ``kappa sin^4(beta) / 4`` to the perturbation."""
    terms = dict(base.f.terms)
    for m, c in [(0, 3 / 8), (2, -1 / 4), (-2, -1 / 4), (4, 1 / 16), (-4, 1 / 16)]:
        key = ((0,), m, (0, 0))
        terms[key] = terms.get(key, 0) + kappa / 4 * c
    return Model(2, base.omega, base.H0, build_function(2, terms), f"quartic{kappa:g}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappas", default="0,0.5,-0.3")
    args = ap.parse_args()
    for kappa in (float(v) for v in args.kappas.split(",")):
        model = with_quartic(custom_model(), kappa) if kappa else custom_model()
        res = analyze(model)
        M = self_energy_scale_minus1(model, res, branch="plus")
        limit = ell_limit(res, M.beta1, M.hessian)
        conv = ell_convergence(FirstBandSelfEnergy(model, M, res), limit)
        errs = " ".join(f"{e:.3e}" for e in conv["errors"])
        print(f"kappa={kappa:+.2f} limit={limit:.10f} errors {errs} slope {conv['slope']:.3f}")


if __name__ == "__main__":
    main()
