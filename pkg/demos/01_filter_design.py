"""Design the default 0.3-35 Hz band-pass and look at what it does.

Run:  python3 demos/01_filter_design.py
"""

import numpy as np

from neosleep.filtering import apply, design_bandpass, frequency_response

fs = 500.0
filt = design_bandpass(fs)
print(f"{filt.n_taps} taps, group delay {filt.delay} samples ({filt.delay / fs:.1f} s)")

# magnitude response at a few frequencies of interest
for f in (0.0, 0.1, 0.3, 1.0, 10.0, 35.0, 40.0, 50.0, 100.0):
    gain = frequency_response(filt, f)
    print(f"  {f:6.1f} Hz  {20 * np.log10(max(gain, 1e-300)):8.2f} dB")

# a 10 Hz rhythm riding on slow drift and mains hum
t = np.arange(int(20 * fs)) / fs
rhythm = 20 * np.sin(2 * np.pi * 10 * t)
x = rhythm + 200 * np.sin(2 * np.pi * 0.05 * t) + 30 * np.sin(2 * np.pi * 50 * t)
y = apply(filt, x)

core = slice(int(4 * fs), int(-4 * fs))  # skip the edges where padding dominates
err = np.sqrt(np.mean((y[core] - rhythm[core]) ** 2))
print(f"residual after filtering: {err:.3f} uV rms (input contamination "
      f"{np.sqrt(np.mean((x - rhythm) ** 2)):.1f} uV rms)")
