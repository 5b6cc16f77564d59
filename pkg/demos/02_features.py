"""Featurize one synthetic sleep epoch and one wake epoch side by side.

Run:  python3 demos/02_features.py
"""

from neosleep import dataio, features, filtering
from neosleep.dataio import Stage, SynthConfig

records, truth = dataio.generate_synthetic(SynthConfig(n_records=1, record_seconds=600, seed=4))
rec = records[0]
filt = filtering.design_bandpass(rec.fs)
epochs = dataio.label_and_filter(dataio.segment(rec, samples=filtering.apply(filt, rec.samples)), rec)

sleep = next(ep for ep in epochs if ep.label is Stage.SLEEP)
wake = next(ep for ep in epochs if ep.label is Stage.WAKE)
fs_sleep, fs_wake = features.featurize(sleep), features.featurize(wake)

print(f"{'feature':<22}{'sleep #' + str(sleep.index):>16}{'wake #' + str(wake.index):>16}")
for name in features.FEATURE_NAMES:
    print(f"{name:<22}{getattr(fs_sleep, name):>16.4g}{getattr(fs_wake, name):>16.4g}")

# The slow, high-amplitude sleep rhythm shows up as low mobility and a low
# spectral centroid; wake activity is faster and flatter.
