"""
Eye diagram and equalized-symbol histogram
==========================================

Runs one capture at a fixed ROP with ``keep=True`` and renders the received
eye and the log histogram of the equalizer outputs as text.
"""
import numpy as np

from imddsim import RunConfig, simulate
from imddsim.metrics import eye_accumulate, log_histogram

cfg = RunConfig(modulation="pam8", shaping="cup", symbol_rate=90.0, n_symbols=1 << 15)
res = simulate(cfg, -10.0, 1, keep=True)
print(f"BER {res.ber:.2e}")

eye = eye_accumulate(res.rx.samples, res.rx.sample_rate / cfg.symbol_rate, time_bins=48, amp_bins=24)
shade = " .:-=+*#%@"
dens = np.log1p(eye.counts.T[::-1])
dens = (dens / dens.max() * (len(shade) - 1)).astype(int)
for row in dens:
    print("".join(shade[v] for v in row))

###############################################################################
# Outer levels of the cup stream show up as the tallest histogram peaks.
h = log_histogram(res.equalizer.outputs, 64)
for c, v in zip(h.centers, h.log_counts):
    print(f"{c:6.2f} {'#' * int(round(8 * v))}")
