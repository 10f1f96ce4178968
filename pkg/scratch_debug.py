import numpy as np
from hitlseg import synthdata, segmenter as seg
from hitlseg.core import dice, preprocess

ds_s, ds_u, ds_t = synthdata.generate_datasets(
    synthdata.DEFAULT_SEED_SPEC, synthdata.DEFAULT_TARGET_SPEC,
    synthdata.DEFAULT_KNOBS, {"seed_n": 4, "target_n": 2, "test_n": 2}, master_seed=0,
)
s0 = ds_s.samples[0]
v = preprocess(s0.volume)
f = seg.extract_features(v)
lab = s0.ground_truth.labels
print("feature matrix:", f.shape, f.dtype)
for c in range(3):
    sel = lab == c
    print(f"class {c}: n={sel.sum():6d} raw={f[sel,0].mean():+.3f}±{f[sel,0].std():.3f} "
          f"box1={f[sel,1].mean():+.3f} box2={f[sel,2].mean():+.3f} grad={f[sel,3].mean():+.3f}")

model = seg.train([(s.volume, s.ground_truth) for s in ds_s.samples], seg.TrainConfig(rng_seed=0))
print("weights:\n", np.round(model.weights, 3))
print("feat std:", np.round(model.feat_std, 3))
pred, probs = seg.predict(model, s0.volume)
print("pred counts:", np.bincount(pred.labels, minlength=3), " gt:", np.bincount(lab, minlength=3))
print("dice:", dice(pred, s0.ground_truth).per_class)
print("train loss:", model.train_meta["epoch_losses"][:3], "...", model.train_meta["epoch_losses"][-3:])

# sanity: sklearn-style closed check — how separable is it really?
sel = np.random.default_rng(0).choice(f.shape[0], 20000, replace=False)
X = (f[sel] - model.feat_mean) / model.feat_std
y = lab[sel]
# least squares one-vs-rest as a quick probe
import numpy.linalg as la
Y = np.eye(3)[y]
W = la.lstsq(X.astype(np.float64), Y, rcond=None)[0]
acc = (np.argmax(X @ W, axis=1) == y).mean()
print("lstsq argmax acc on sample:", acc)
