"""Synthetic corpus definition shared by fixtures and the acceptance suite."""
import numpy as np

from comd.signalio import Component, SynthRecipe

FS = 1000.0


def corpus_recipe(index):
    """Three-component mixture with adjacent, leak-prone bands.

    Low and mid AM tones whose sidebands face each other across a narrow
    valley, plus either a slow chirp (signals 0-4) or a windowed burst
    (signals 5-9) up high. Parameters are drawn per-signal from a fixed
    seed so the corpus is stable across runs.
    """
    rng = np.random.default_rng(1000 + index)
    components = [
        Component(kind="am_tone",
                  frequency_hz=float(rng.uniform(20.0, 28.0)),
                  am_frequency_hz=float(rng.uniform(3.0, 5.0)),
                  am_depth=float(rng.uniform(0.3, 0.6)),
                  phase=float(rng.uniform(0.0, 2.0 * np.pi))),
        Component(kind="am_tone",
                  frequency_hz=float(rng.uniform(48.0, 60.0)),
                  am_frequency_hz=float(rng.uniform(5.0, 8.0)),
                  am_depth=float(rng.uniform(0.4, 0.8)),
                  amplitude=float(rng.uniform(0.7, 0.9)),
                  phase=float(rng.uniform(0.0, 2.0 * np.pi))),
    ]
    if index < 5:
        components.append(Component(
            kind="chirp",
            frequency_hz=float(rng.uniform(110.0, 130.0)),
            chirp_rate_hz_s=float(rng.uniform(5.0, 15.0)),
            amplitude=float(rng.uniform(0.5, 0.8)),
            phase=float(rng.uniform(0.0, 2.0 * np.pi))))
    else:
        components.append(Component(
            kind="transient",
            frequency_hz=float(rng.uniform(120.0, 160.0)),
            center_s=float(rng.uniform(0.35, 0.65)),
            width_s=float(rng.uniform(0.03, 0.06)),
            amplitude=float(rng.uniform(0.6, 0.9))))
    return SynthRecipe(components=components, duration_s=1.0,
                       sample_rate_hz=FS, seed=index)
