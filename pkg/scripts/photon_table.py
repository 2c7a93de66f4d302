"""Noise-resolution products for Fock and coherent states in several modes."""
import argparse

from noise_resolution.functionals import cd_tilde
from noise_resolution.modes import BandLimitedPlaneWave, EpanechnikovAmplitude, GaussianMode, TruncatedPlaneWave
from noise_resolution.photon_states import Coherent, Fock, noise_resolution_product

MODES = {
    "plane_wave": TruncatedPlaneWave(3, 1.0),
    "gaussian": GaussianMode(3, 1.0),
    "epanechnikov": EpanechnikovAmplitude(3, 1.0),
    "band_limited": BandLimitedPlaneWave(3, 1.0, 4),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nmax", type=int, default=5)
    args = ap.parse_args()
    states = [Fock(n) for n in range(args.nmax + 1)] + [Coherent(a) for a in (0.5, 1.0, 10.0)]
    print(f"C~_3 = {cd_tilde(3):.6f}, C~_3/4 = {cd_tilde(3) / 4:.6f}")
    print(f"{'mode':14s} {'state':24s} {'product':>10} {'gamma prod':>11} {'gamma bnd':>10} {'Q_3^2':>8}")
    for name, mode in MODES.items():
        for st in states:
            r = noise_resolution_product(st, mode)
            print(f"{name:14s} {r.state:24s} {r.product:10.5f} {r.gamma_product:11.5f} "
                  f"{r.gamma_bound:10.5f} {r.qd_sq:8.5f}")


if __name__ == "__main__":
    main()
