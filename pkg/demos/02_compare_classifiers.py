"""
Comparing the three classifiers
===============================

Build a small synthetic corpus, extract features and run the four
experiments with a handful of repetitions. The full-size run is
``walldetect reproduce``; this one trades trees and repetitions for speed.
"""

import tempfile
from pathlib import Path

import numpy as np

from walldetect import eval as ev
from walldetect.classify import ModelSpec
from walldetect.features import extract_features
from walldetect.ingest import load_corpus
from walldetect.simulate import SimConfig, generate_corpus

workdir = Path(tempfile.mkdtemp(prefix="walldetect-demo-"))
manifest = generate_corpus(SimConfig(seed=7), flights_per_class=5, out_dir=workdir / "corpus")
ds = extract_features(load_corpus(manifest))
print({k.value: v for k, v in ds.class_counts().items()})

# %%
# Lighter models than the defaults so the demo finishes in a minute or two.

classifiers = (ModelSpec("knn"), ModelSpec("rf", rf_trees=30), ModelSpec("gb", gb_stages=30))
reports = [
    ev.run_experiment(ds, ev.experiment(eid, repetitions=3, classifiers=classifiers))
    for eid in ev.EXPERIMENTS
]
print(ev.summary_table(reports))

# %%
# Where do the mistakes go? The summed confusion matrix of RF on the
# four-class problem, rows are the true class.

e4 = reports[-1]
cm = np.array(e4.result("rf").confusion)
print(f"{'':>8}" + "".join(f"{c:>8}" for c in e4.classes))
for name, row in zip(e4.classes, cm):
    print(f"{name:>8}" + "".join(f"{v:>8}" for v in row))
