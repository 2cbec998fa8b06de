"""Wave front estimates for the signal corpus, exact STFT path.

Prints the Gabor directions and Sobolev thresholds of each signal, and with
--plot-dir writes one polar CSV per signal for plotting.
"""

import argparse
import os
import re

import numpy as np

from gmla import wavefront as W
from gmla.parser import parse_signal

CORPUS = ["gauss(0,0)", "gauss(1,-2)", "hermite(3)", "planewave(5)", "delta", "chirp(2)", "planewave(5)+delta"]


def arcs(deg):
    """Group sorted integer-ish angles into contiguous arcs for printing."""
    if not len(deg):
        return "empty"
    deg = np.round(deg).astype(int)
    out, start, prev = [], deg[0], deg[0]
    for d in deg[1:]:
        if d != prev + 1:
            out.append((start, prev))
            start = d
        prev = d
    out.append((start, prev))
    if len(out) > 1 and out[0][0] == 0 and out[-1][1] == 359:
        out = [(out[-1][0] - 360, out[0][1])] + out[1:-1]
    return ", ".join(f"[{a}, {b}]" for a, b in out)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("signals", nargs="*", default=CORPUS)
    ap.add_argument("--window", default="gaussian")
    ap.add_argument("--plot-dir")
    args = ap.parse_args()

    for text in args.signals:
        est = W.wavefront_closed_form(parse_signal(text), args.window)
        deg = np.degrees(est.thetas)
        fin = est.sobolev == "finite"
        s = f"s* in [{est.s_star[fin].min():.3f}, {est.s_star[fin].max():.3f}]" if fin.any() else "s* = inf"
        print(f"{text:22s} WF_G: {arcs(deg[est.gabor == 'in'])}   {s}")
        if args.plot_dir:
            os.makedirs(args.plot_dir, exist_ok=True)
            name = re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_")
            est.write_polar_csv(os.path.join(args.plot_dir, f"{name}.csv"))


if __name__ == "__main__":
    main()
