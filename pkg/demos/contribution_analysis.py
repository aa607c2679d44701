# First-layer contribution analysis: how much absolute pre-activation mass
# each input group (vision / audio / predicted themes / true themes) feeds
# into the match decision of a trained two-stage system.
#
# The measure is sum |W * X| over the first conv's taps, per channel group,
# normalized to proportions. It is exactly invariant to uniform input
# scaling and the proportions always sum to 1.

import numpy as np

from tiavc.dataio import SynthConfig, generate, index_by_id
from tiavc.evaluation import contribution, contribution_report
from tiavc.models import CLModel, ModelConfig, train_system
from tiavc.optim import TrainConfig

# --- the measure itself, on a hand-checkable example -------------------------

cfg = ModelConfig(num_themes=4, num_frames=3, audio_dim=4, visual_dim=5,
                  embed_width=6, fusion_conv1=7, fusion_conv2=7,
                  fusion_hidden=5)
cl = CLModel(cfg)
cl.first_conv.weight.value[:] = 0.0
w = cl.first_conv.weight.value
w[0, 0, 0], w[0, 1, 0], w[0, 6, 0] = 0.5, 0.25, 1.0   # two vision, one audio
x = np.zeros((1, 1, cl.first_conv.in_ch))
x[0, 0, 0], x[0, 0, 1], x[0, 0, 6] = 1.0, -2.0, 3.0
report = contribution(cl, x)
print("hand example: vision |1*0.5|+|-2*0.25| = 1.0, audio |3*1.0| = 3.0")
for group, share in report.proportions.items():
    print(f"  {group:17s} {share:.2f}")

# --- on a trained system ------------------------------------------------------

print("\ntraining a small ti-avc run for a real report...")
ds = generate(SynthConfig(n_records=600, negative_mode="theme-flip", seed=0))
system = train_system("ti-avc", ds.records, ds.pairs,
                      ModelConfig.from_manifest(ds.manifest, seed=0),
                      TrainConfig(lr=6e-4, batch_size=32, max_epochs=20,
                                  patience=5, seed=0))
by_id = index_by_id(ds.records)

for composition in ("positive", "negative", "both"):
    rep = contribution_report(system, by_id, ds.pairs, composition)
    shares = "  ".join(f"{g} {100 * p:.1f}%" for g, p in rep.proportions.items())
    print(f"{composition:9s} ({rep.n_pairs} pairs): {shares}")

print("\nvision and audio carry almost all of the first-layer mass; the theme "
      "channels (12 of 268 inputs) keep a small but nonzero share. the value "
      "of the theme cue shows up in the AUC gap over baseline-1, not in raw "
      "input mass.")
