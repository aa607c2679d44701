# Finite-difference gradient checking, from single layers up to the full
# two-stage system. Everything runs in float64; the reported number is the
# worst relative error over all parameter coordinates.

import numpy as np

from tiavc.dataio import SynthConfig, generate
from tiavc.models import ModelConfig, ThemeTask, TLModel, split_records
from tiavc.nn import (LSTM, AttentionPool, Conv1D, Dense, MaxPoolTime, ReLU,
                      Stack, TimeDistributedDense, grad_check,
                      projection_loss_fn)

rng = np.random.default_rng(0)

# --- individual layers -----------------------------------------------------
# projection_loss_fn turns a layer into a scalar loss L = sum(out * R) for a
# fixed random R, so every output coordinate receives gradient.

print("layer checks (worst relative error):")
for label, layer, x in [
    ("dense 7->5", Dense(7, 5, rng, dtype=np.float64),
     rng.standard_normal((4, 7))),
    ("time-distributed dense", TimeDistributedDense(6, 4, rng, dtype=np.float64),
     rng.standard_normal((3, 5, 6))),
    ("lstm", LSTM(5, 4, rng, dtype=np.float64), rng.standard_normal((3, 6, 5))),
    ("conv1d k=3", Conv1D(4, 6, 3, rng, dtype=np.float64),
     rng.standard_normal((3, 5, 4))),
]:
    fn = projection_loss_fn(layer.forward, layer.backward, layer.params(), x, 0)
    print(f"  {label:24s} {grad_check(fn, layer.params()):.2e}")

# attention returns (pooled, weights); drive the pooled output
attn = AttentionPool(5, rng, dtype=np.float64)
x = rng.standard_normal((3, 7, 5))
fn = projection_loss_fn(lambda h: attn.forward(h)[0], attn.backward,
                        attn.params(), x, 0)
print(f"  {'attention pool':24s} {grad_check(fn, attn.params()):.2e}")

# a composite stack routes gradient through the parameter-free layers too
stack = Stack([TimeDistributedDense(5, 6, rng, dtype=np.float64), ReLU(),
               MaxPoolTime(), Dense(6, 4, rng, dtype=np.float64)])
x = rng.standard_normal((4, 6, 5))
fn = projection_loss_fn(stack.forward, stack.backward, stack.params(), x, 0)
print(f"  {'stack with pool':24s} {grad_check(fn, stack.params()):.2e}")

# --- a whole system through its real loss ----------------------------------
# Tiny dims keep the finite differences fast; the check covers every
# parameter of both towers and the fusion stack at once.

ds = generate(SynthConfig(n_records=12, num_themes=4, latent_dim=3,
                          visual_dim=5, audio_dim=4, num_frames=3,
                          audio_steps=4, negative_mode="theme-flip", seed=25))
cfg = ModelConfig(num_themes=4, num_frames=3, audio_dim=4, visual_dim=5,
                  embed_width=6, fusion_conv1=7, fusion_conv2=7,
                  fusion_hidden=5, seed=25)
model = TLModel(cfg, dtype=np.float64)
task = ThemeTask(model)
records = split_records(ds.records, "train")[:6]
err = grad_check(lambda wg: task._loss(records, train=wg), model.parameters())
print(f"\ntheme learner end to end ({len(model.parameters())} tensors): {err:.2e}")
print("tolerance used by the test suite: 1e-4")
