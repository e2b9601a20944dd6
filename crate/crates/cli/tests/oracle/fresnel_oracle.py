"""Regenerates fresnel_oracle.json: air-to-material reflection coefficients
evaluated with 50-digit arithmetic.

    python3 fresnel_oracle.py > fresnel_oracle.json
"""
import json
import random

import mpmath as mp

mp.mp.dps = 50
EPS0 = mp.mpf("8.854e-12")
FREQ = 6.75e9


def coeffs(eps_r, sigma, theta_deg):
    omega = 2 * mp.pi * mp.mpf(FREQ)
    eta = mp.mpc(eps_r, -mp.mpf(sigma) / (EPS0 * omega))
    th = mp.radians(mp.mpf(theta_deg))
    c, s = mp.cos(th), mp.sin(th)
    q = mp.sqrt(eta - s * s)
    if mp.re(q) < 0:
        q = -q
    r_perp = (c - q) / (c + q)
    r_par = (eta * c - q) / (eta * c + q)
    return r_perp, r_par


def main():
    rng = random.Random(20240675)
    samples = []
    for _ in range(100):
        eps_r = rng.uniform(1.0, 10.0)
        sigma = rng.uniform(0.0, 10.0)
        theta = rng.uniform(0.0, 89.0)
        rp, rl = coeffs(eps_r, sigma, theta)
        samples.append({
            "eps_r": eps_r,
            "sigma": sigma,
            "theta_deg": theta,
            "r_perp": [float(mp.re(rp)), float(mp.im(rp))],
            "r_par": [float(mp.re(rl)), float(mp.im(rl))],
        })
    print(json.dumps({"freq_hz": FREQ, "eps0": 8.854e-12, "samples": samples}, indent=1))


if __name__ == "__main__":
    main()
