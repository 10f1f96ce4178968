"""Scratch: probe igniter/ceiling Dice regimes on default synthetic data."""
import time
import numpy as np

from hitlseg import synthdata, segmenter as seg
from hitlseg.core import dice
from hitlseg import annotator as ann

t0 = time.time()
ds_s, ds_u, ds_t = synthdata.generate_datasets(
    synthdata.DEFAULT_SEED_SPEC,
    synthdata.DEFAULT_TARGET_SPEC,
    synthdata.DEFAULT_KNOBS,
    synthdata.DEFAULT_COUNTS,
    master_seed=0,
)
print(f"gen: {time.time()-t0:.1f}s")

# organ fractions
fracs = [float((s.ground_truth.labels > 0).mean()) for s in ds_u.samples[:10]]
print("organ fraction U[:10]:", np.round(fracs, 3))

t0 = time.time()
ig = seg.train([(s.volume, s.ground_truth) for s in ds_s.samples], seg.igniter_config(1))
print(f"igniter train: {time.time()-t0:.1f}s, final loss {ig.train_meta['final_mean_loss']:.3f}, |W| {np.abs(ig.weights).max():.3f}")

def mean_dice(model, samples):
    vals = []
    for s in samples:
        pred, _ = seg.predict(model, s.volume)
        sc = dice(pred, s.ground_truth)
        vals.append((sc.per_class[1], sc.per_class[2], sc.mean))
    arr = np.array(vals)
    return arr.mean(axis=0)

# held-out seed-domain cases (same spec, fresh indices)
from dataclasses import replace
held_spec = replace(synthdata.DEFAULT_SEED_SPEC, rng_seed=9999)
held = [synthdata.generate_sample(held_spec, synthdata.DEFAULT_KNOBS.draw(np.random.default_rng(5), 0.15), i) for i in range(10)]

t0 = time.time()
d_seed = mean_dice(ig, held)
d_u = mean_dice(ig, ds_u.samples[:20])
d_t = mean_dice(ig, ds_t.samples)
print(f"eval: {time.time()-t0:.1f}s")
print(f"igniter dice seed-holdout: A={d_seed[0]:.3f} B={d_seed[1]:.3f} mean={d_seed[2]:.3f}")
print(f"igniter dice U[:20]:      A={d_u[0]:.3f} B={d_u[1]:.3f} mean={d_u[2]:.3f}")
print(f"igniter dice test:        A={d_t[0]:.3f} B={d_t[1]:.3f} mean={d_t[2]:.3f}")

# ceiling: train on all target ground truth + seed
t0 = time.time()
pairs = [(s.volume, s.ground_truth) for s in ds_s.samples] + [
    (s.volume, s.ground_truth) for s in ds_u.samples
]
ceil = seg.train(pairs, seg.TrainConfig(rng_seed=2))
print(f"ceiling train: {time.time()-t0:.1f}s, loss {ceil.train_meta['final_mean_loss']:.3f}, |W| {np.abs(ceil.weights).max():.2f}")
d_c = mean_dice(ceil, ds_t.samples)
print(f"ceiling dice test:        A={d_c[0]:.3f} B={d_c[1]:.3f} mean={d_c[2]:.3f}")

# cost regime stats (raw error masks, before calibration)
cost = ann.CostModel(t_base=0.5, c_vox=1.0, c_comp=1.0, t_scratch=999)  # unit probes
def regime_stats(model, samples):
    ev, ec = [], []
    for s in samples:
        pred, _ = seg.predict(model, s.volume)
        mask = (pred.labels != s.ground_truth.labels).reshape(s.volume.dims)
        ev.append(int(mask.sum()))
        ec.append(ann.error_components(mask))
    return np.mean(ev), np.mean(ec)

v1, c1 = regime_stats(ig, ds_u.samples[:20])
vf, cf = regime_stats(ceil, ds_u.samples[:20])
print(f"round1 regime: err_vox={v1:.0f} comps={c1:.1f}")
print(f"final regime:  err_vox={vf:.0f} comps={cf:.1f}")

# margins / proxy quality under igniter
from hitlseg import strategy as strat
oc, pc = [], []
for s in ds_u.samples[:30]:
    pred, probs = seg.predict(ig, s.volume)
    s2 = replace(s, prediction=pred, status="machine_labelled")
    cm = ann.CostModel()
    est = strat.estimate_difficulty(s2, probs, cm, 0.3)
    oc.append(ann.oracle_cost(s2, cm))
    pc.append(est.predicted_cost_min)
from scipy.stats import spearmanr
rho = spearmanr(pc, oc).statistic
print(f"spearman(predicted, oracle) over U[:30]: {rho:.3f}")
print("proxy scores sample:", np.round(pc[:6], 2), " oracle:", np.round(oc[:6], 2))
