"""Phase-2 distillation: train the adaptation network to reproduce the
frozen encoder's latent from common observations alone."""

import numpy as np

from .config import TrainConfig
from .bc import episode_split
from .nets import AdamState, ModelBundle, adam_step, backward, forward_cached

_CHUNK = 8192


def _encode_targets(bundle: ModelBundle, commons, privs):
    out = np.empty((len(commons), bundle.z_dim))
    for s in range(0, len(commons), _CHUNK):
        out[s:s + _CHUNK], _ = forward_cached(
            bundle.encoder,
            np.concatenate([commons[s:s + _CHUNK], privs[s:s + _CHUNK]],
                           axis=1))
    return out


def _agreement(bundle: ModelBundle, commons, z_true, z_pred) -> float:
    hits = 0
    for s in range(0, len(commons), _CHUNK):
        c = commons[s:s + _CHUNK]
        lt, _ = forward_cached(bundle.policy,
                               np.concatenate([c, z_true[s:s + _CHUNK]],
                                              axis=1))
        lp, _ = forward_cached(bundle.policy,
                               np.concatenate([c, z_pred[s:s + _CHUNK]],
                                              axis=1))
        hits += int((np.argmax(lt, axis=1) == np.argmax(lp, axis=1)).sum())
    return hits / len(commons)


def distill_adaptation(dataset, bundle: ModelBundle, config: TrainConfig,
                       epochs: int = 20):
    """MSE-regress adaptation(common) onto encoder(common, privileged) over
    the demonstration transitions; encoder and policy stay frozen.

    Returns (adaptation, metrics).  metrics carries the held-out latent MSE,
    the held-out variance of the target latent (the constant-mean predictor's
    error, which the adaptation should beat), and the held-out rate at which
    the policy's argmax action under z' matches the one under z.
    """
    rng = np.random.default_rng(config.seed + 2)
    train_eps, val_eps = episode_split(len(dataset), rng)

    def stack(idxs):
        c = np.vstack([dataset[i].commons for i in idxs])
        p = np.vstack([dataset[i].privileged for i in idxs])
        return c, p

    xc, xp = stack(train_eps)
    vc, vp = stack(val_eps)
    if len(xc) == 0 or len(vc) == 0:
        raise ValueError("a split has no transitions")
    zt = _encode_targets(bundle, xc, xp)
    vzt = _encode_targets(bundle, vc, vp)

    ada_state = AdamState.for_network(bundle.adaptation)
    n = len(xc)
    train_curve = []
    for _ in range(epochs):
        order = rng.permutation(n)
        se = 0.0
        for s in range(0, n, config.bc_batch):
            mb = order[s:s + config.bc_batch]
            b = len(mb)
            zp, cache = forward_cached(bundle.adaptation, xc[mb])
            err = zp - zt[mb]
            se += float(np.sum(err ** 2))
            gw, gb, _ = backward(bundle.adaptation, cache, (2.0 / b) * err)
            adam_step(bundle.adaptation, gw, gb, ada_state, config.bc_lr)
        train_curve.append(se / n)
    if not bundle.adaptation.finite():
        raise RuntimeError("non-finite adaptation parameters")

    vzp, _ = forward_cached(bundle.adaptation, vc)
    heldout_mse = float(np.mean(np.sum((vzp - vzt) ** 2, axis=1)))
    z_var = float(np.mean(np.sum((vzt - vzt.mean(axis=0)) ** 2, axis=1)))
    metrics = {
        "train_mse": train_curve,
        "heldout_mse": heldout_mse,
        "heldout_z_variance": z_var,
        "action_agreement": _agreement(bundle, vc, vzt, vzp),
    }
    return bundle.adaptation, metrics
