"""SNR_0 and dr dp across mode shapes, including band-limited plane waves.

The ideal truncated plane wave has a divergent momentum width; cutting its
spectrum at the m-th sinc zero gives a finite product that approaches the
plane-wave SNR_0 as m grows.
"""
import argparse

from noise_resolution.heisenberg_ext import dual_noise_resolution, extended_heisenberg, position_noise_resolution
from noise_resolution.modes import BandLimitedPlaneWave, GaussianMode, TruncatedPlaneWave


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lobes", default="1,2,4,8,16")
    args = ap.parse_args()
    modes = [("gaussian", GaussianMode(3, 1.0)), ("plane_wave", TruncatedPlaneWave(3, 1.0))]
    modes += [(f"band_limited m={m}", BandLimitedPlaneWave(3, 1.0, int(m))) for m in args.lobes.split(",")]
    print(f"{'mode':20s} {'SNR_0':>8} {'dr dp':>10} {'bound':>8} {'N_x':>8} {'N_xi':>8}")
    for name, m in modes:
        r = extended_heisenberg(m)
        print(f"{name:20s} {r.snr0:8.4f} {r.product:10.4f} {r.extended_bound:8.4f} "
              f"{position_noise_resolution(m):8.4f} {dual_noise_resolution(m):8.4f}")


if __name__ == "__main__":
    main()
