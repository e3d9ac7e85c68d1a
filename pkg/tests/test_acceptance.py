"""Acceptance gate: one test per release criterion, each printing a
PASS/FAIL line. Training-based criteria run on the bundled synthetic credit
benchmark stand-in (same schema profile as the classic 1000-row file:
binary gender + 51-valued age) and the synthetic service log, since real
datasets are not shipped. Directional criteria use 5 seeds on an 80/20
split; tolerances are fixed here, not tuned at runtime.
"""
import itertools
from fractions import Fraction

import numpy as np
import pytest

from fairsiam.augment import AugmentationStrategy, augment, enumerate_subpopulation, no_augmentation
from fairsiam.data import Dataset, normalize, split
from fairsiam.errors import ConfigError
from fairsiam.metrics import (
    GroupSpec,
    accuracy,
    af_rate,
    augmented_union,
    fair_prf,
    fairness_confusion,
    fta_rate,
    group_metrics,
)
from fairsiam.models import (
    architecture,
    backward,
    encode_target,
    forward,
    init_model,
    loss_grads,
    loss_values,
    output_mae_grads,
)
from fairsiam.schema import ColumnSpec, SchemaConfig
from fairsiam.siamese import (
    FairnessSpec,
    TrainConfig,
    input_mae,
    laf_loss,
    member_distances,
    slack,
    train_baseline,
    train_siamese,
)
from fairsiam.synth import synth_credit, synth_ctrip

from conftest import LinearScoreModel, LookupModel, make_toy_dataset


def report(criterion, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {criterion}" + (f" :: {detail}" if detail else ""))
    assert ok, f"{criterion}: {detail}"


# ---------------------------------------------------------------------------
# shared training runs (5 seeds, 80/20 split of the 1000-row credit stand-in)

SEEDS = (0, 1, 2, 3, 4)
FULL = AugmentationStrategy()
EXTREMES = AugmentationStrategy(mode="extremes")


@pytest.fixture(scope="module")
def credit_splits():
    ds = synth_credit(n=1000, seed=7)
    train, test = split(ds, 0.2, seed=1)
    train_n, scaler = normalize(train)
    test_n, _ = normalize(test, scaler)
    return train_n, test_n


def run_lane(train_ds, arch_name, optimizer, lr, epochs, ascent, seeds, strategy):
    arch = architecture(arch_name)
    out = []
    for seed in seeds:
        m0 = init_model(arch, train_ds.schema.n_features,
                        1 if train_ds.schema.label_arity == 2 else train_ds.schema.label_arity,
                        seed=seed)
        cfg = TrainConfig(epochs=epochs, learning_rate=lr, optimizer=optimizer,
                          loss="mse", seed=seed,
                          fairness=FairnessSpec(lipschitz=1.0),
                          strategy=strategy or AugmentationStrategy(),
                          ascent_rate=ascent)
        fn = train_baseline if strategy is None else train_siamese
        out.append(fn(train_ds, m0, cfg))
    return out


@pytest.fixture(scope="module")
def credit_fcnn_runs(credit_splits):
    train_n, _ = credit_splits
    return {
        "bl": run_lane(train_n, "fcnn3", "adam", 1e-3, 40, None, SEEDS, None),
        "sf": run_lane(train_n, "fcnn3", "adam", 1e-3, 40, None, SEEDS, FULL),
        "sf3": run_lane(train_n, "fcnn3", "adam", 1e-3, 40, None, SEEDS, EXTREMES),
    }


@pytest.fixture(scope="module")
def credit_lr_runs(credit_splits):
    train_n, _ = credit_splits
    return {
        "bl": run_lane(train_n, "lr", "sgd", 0.05, 100, None, SEEDS, None),
        "sf": run_lane(train_n, "lr", "sgd", 0.05, 100, 0.003, SEEDS, FULL),
    }


def lane_stats(test_ds, runs, strategy):
    rows = []
    for res in runs:
        counts = fairness_confusion(test_ds, res.params, strategy)
        rows.append((accuracy(test_ds, res.params),
                     fta_rate(test_ds, res.params, strategy),
                     counts.tfr, counts.tbr))
    arr = np.array(rows)
    return {"acc": arr[:, 0].mean(), "fta": arr[:, 1].mean(),
            "tfr": arr[:, 2].mean(), "tbr": arr[:, 3].mean()}


# ---------------------------------------------------------------------------
# criterion 1: identity suite


def test_identity_suite(toy_schema, credit_splits):
    rng = np.random.default_rng(0)
    cases = []
    for trial in range(6):
        ds = make_toy_dataset(toy_schema, n=40, seed=trial)
        cases.append((ds, LinearScoreModel(rng.normal(0, 3, 4), b=rng.normal()), FULL))
    _, test_n = credit_splits
    cases.append((test_n, LinearScoreModel(rng.normal(0, 2, 10), b=-0.5), FULL))

    for ds, model, st in cases:
        c = fairness_confusion(ds, model, st)
        n = c.n_total
        # partition identity, exact on counts
        assert c.n_true_fair + c.n_true_biased + c.n_false_fair + c.n_false_biased == n
        assert abs(c.tfr + c.tbr + c.ffr + c.fbr - 1.0) <= 1e-12
        # ACC = TFR + TBR and FTA = TFR + FFR, exact as rationals
        acc = accuracy(ds, model)
        fta = fta_rate(ds, model, st)
        assert Fraction(c.n_true_fair + c.n_true_biased, n) == Fraction(acc).limit_denominator(10 ** 9)
        assert round(acc * n) == c.n_true_fair + c.n_true_biased
        assert round(fta * n) == c.n_true_fair + c.n_false_fair
        assert abs(acc - (c.tfr + c.tbr)) <= 1e-12
        assert abs(fta - (c.tfr + c.ffr)) <= 1e-12
        # F-F1 harmonic mean with the zero convention
        fp, fr, ff1 = fair_prf(c)
        if fp + fr > 0:
            assert ff1 == pytest.approx(2 * fp * fr / (fp + fr), abs=1e-15)
            assert min(fp, fr) - 1e-12 <= ff1 <= max(fp, fr) + 1e-12
        else:
            assert ff1 == 0.0
    from fairsiam.metrics import FairnessConfusionCounts
    assert fair_prf(FairnessConfusionCounts(0, 3, 4, 2)) == (0.0, 0.0, 0.0)

    # definitional sanity anchors from the published reference means
    assert 0.827 + 0.044 == pytest.approx(0.871, abs=1e-12)  # ACC = TFR + TBR
    assert 0.867 + 0.119 == pytest.approx(0.986, abs=1e-12)  # FTA = TFR + FFR
    report("identity suite (partition, ACC, FTA, F-F1 + reference anchors)", True)


# ---------------------------------------------------------------------------
# criterion 2: gradient suite


def _set_flat(model, vec):
    pos = 0
    for arr in model.weights + model.biases:
        arr[:] = vec[pos:pos + arr.size].reshape(arr.shape)
        pos += arr.size


def _fd_grad(scalar_fn, model, h=1e-5):
    """Central differences, perturbing coordinates in place."""
    grad = []
    for arr in model.weights + model.biases:
        flat = arr.reshape(-1)
        g = np.empty(flat.size)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            up = scalar_fn(model)
            flat[k] = orig - h
            down = scalar_fn(model)
            flat[k] = orig
            g[k] = (up - down) / (2 * h)
        grad.append(g)
    return np.concatenate(grad)


def _max_rel_err(a, b):
    denom = np.maximum(1e-6, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / denom))


GRAD_SCHEMA = SchemaConfig(columns=(
    ColumnSpec("f", "numeric", "nonsensitive"),
    ColumnSpec("s", "categorical", "sensitive", domain=("a", "b"), privileged="a"),
    ColumnSpec("g", "numeric", "nonsensitive"),
    ColumnSpec("y", "numeric", "label"),
))


def test_gradient_suite():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for arch_name, loss_kind in itertools.product(
            ("lr", "svm", "fcnn3", "fcnn5"), ("mse", "hinge")):
        arch = architecture(arch_name)
        for _ in range(20):
            model = init_model(arch, 3, 1, seed=int(rng.integers(1 << 30)))
            _set_flat(model, rng.normal(0.0, 0.8, model.flatten().size))
            x = rng.uniform(-1, 1, 3)
            y_enc = encode_target(int(rng.integers(0, 2)), loss_kind, 1)
            out = forward(model, x[None, :])
            gw, gb = backward(model, x[None, :], loss_grads(loss_kind, y_enc, out))
            analytic = np.concatenate([a.ravel() for a in gw + gb])
            numeric = _fd_grad(
                lambda m: float(loss_values(loss_kind, y_enc, forward(m, x[None, :]))[0]),
                model)
            err = _max_rel_err(analytic, numeric)
            worst = max(worst, err)
            assert err <= 1e-4, f"{arch_name}/{loss_kind}: rel err {err:.2e}"

    # L_AF gradients, multiplier terms included, for each training pairing
    from fairsiam.models import backward_from_cache, forward_cached
    for arch_name, loss_kind in (("lr", "mse"), ("svm", "hinge"),
                                 ("fcnn3", "mse"), ("fcnn5", "mse")):
        arch = architecture(arch_name)
        config = TrainConfig(loss=loss_kind, fairness=FairnessSpec(lipschitz=1.0))
        for _ in range(20):
            model = init_model(arch, 3, 1, seed=int(rng.integers(1 << 30)))
            _set_flat(model, rng.normal(0.0, 0.8, model.flatten().size))
            record = np.array([rng.uniform(), float(rng.integers(0, 2)), rng.uniform()])
            y = int(rng.integers(0, 2))
            sp = enumerate_subpopulation(record, GRAD_SCHEMA, FULL, label=y)
            y_enc = encode_target(y, loss_kind, 1)
            lam = rng.uniform(0, 2, len(sp))
            outs, acts = forward_cached(model, sp.features)
            out_grad = (loss_grads(loss_kind, y_enc, outs)
                        + lam[:, None] * output_mae_grads(y_enc, outs))
            gw, gb = backward_from_cache(model, acts, out_grad)
            analytic = np.concatenate([a.ravel() for a in gw + gb])
            numeric = _fd_grad(lambda m: laf_loss(sp, y_enc, m, lam, config), model)
            err = _max_rel_err(analytic, numeric)
            worst = max(worst, err)
            assert err <= 1e-4, f"L_AF {arch_name}/{loss_kind}: rel err {err:.2e}"
    report("gradient suite (L and L_AF vs central differences, rel <= 1e-4)",
           True, f"worst rel err {worst:.2e}")


# ---------------------------------------------------------------------------
# criterion 3: theorem suite


def test_theorem_suite(toy_schema):
    rng = np.random.default_rng(9)

    # (T1) 100 instances with every slack <= 0: Lipschitz bound holds
    checked = 0
    while checked < 100:
        record = np.array([rng.uniform(), float(rng.integers(0, 2)),
                           rng.uniform(), rng.integers(0, 3) / 2.0])
        y = int(rng.integers(0, 2))
        K = float(rng.uniform(0, 3))
        sp = enumerate_subpopulation(record, toy_schema, FULL, label=y)
        dists = member_distances(sp)
        outs = {tuple(sp.features[0]): float(y)}
        for j in range(1, len(sp)):
            outs[tuple(sp.features[j])] = float(
                np.clip(y + rng.uniform(-1, 1) * K * dists[j], 0, 1))
        model = LookupModel(outs)
        spec = FairnessSpec(lipschitz=K)
        y_enc = np.array([float(y)])
        slacks = [slack(sp.features[j], sp.features[0], y_enc, model, spec)
                  for j in range(len(sp))]
        if not all(s <= 0.0 for s in slacks):
            continue
        checked += 1
        f0 = float(model.decision_function(sp.features[0:1])[0])
        for j in range(len(sp)):
            fj = float(model.decision_function(sp.features[j:j + 1])[0])
            assert abs(f0 - fj) <= K * dists[j] + 1e-9

    # (T2) accurate parity on a synthetic W: group gaps over I(W) exactly 0
    ds = make_toy_dataset(toy_schema, n=14, seed=21)
    table = {}
    for sp in augment(ds, FULL):
        for j in range(len(sp)):
            table[tuple(sp.features[j])] = 0.9 if sp.label else 0.1
    parity_model = LookupModel(table)
    union = augmented_union(ds, FULL)
    for gspec in (GroupSpec("gender", "male", 1), GroupSpec("grade", 2.0, 1)):
        spd, eod, avod = group_metrics(union, parity_model, gspec)
        assert (spd, eod, avod) == (0.0, 0.0, 0.0)

    # (T3) af_rate = 1 instances: both expectation bounds over each slice
    K = 12.0
    ds3 = make_toy_dataset(toy_schema, n=12, seed=40)
    table = {}
    subpops = augment(ds3, FULL)
    for sp in subpops:
        table[tuple(sp.features[0])] = 0.9 if sp.label else 0.1
        for j in range(1, len(sp)):
            table[tuple(sp.features[j])] = 0.9 if rng.uniform() < 0.7 else 0.1
    model3 = LookupModel(table)
    assert af_rate(ds3, model3, FairnessSpec(lipschitz=K), FULL) == 1.0
    combos = sorted({tuple(sp.features[j][[1, 3]]) for sp in subpops
                     for j in range(len(sp))})
    for combo in combos:
        d_sum = treat_sum = pred_sum = 0.0
        for sp in subpops:
            member = sp.features[0].copy()
            member[[1, 3]] = combo
            d_sum += input_mae(sp.features[0], member)
            lab = int(model3.predict(member[None, :])[0])
            lab0 = int(model3.predict(sp.features[0:1])[0])
            treat_sum += abs(lab - sp.label)
            pred_sum += abs(lab - lab0)
        assert treat_sum <= K * d_sum + 1e-9
        assert pred_sum <= K * d_sum + 1e-9
    report("theorem suite (T1 Lipschitz, T2 exact group zeros, T3 bounds)", True)


# ---------------------------------------------------------------------------
# criterion 4: algorithm equivalence


def test_algorithm_equivalence(toy_schema):
    ds = make_toy_dataset(toy_schema, n=16, seed=3)
    ok = True
    for opt, lr in (("sgd", 0.05), ("adam", 1e-3)):
        cfg = TrainConfig(epochs=6, learning_rate=lr, optimizer=opt, loss="mse",
                          seed=11)
        m0 = init_model(architecture("fcnn3"), 4, 1, seed=11)
        bl = train_baseline(ds, m0, cfg)
        frozen = TrainConfig(epochs=6, learning_rate=lr, optimizer=opt, loss="mse",
                             seed=11, strategy=no_augmentation(),
                             multiplier_init=0.0, ascent_rate=0.0)
        sf = train_siamese(ds, m0, frozen)
        ok = ok and np.array_equal(bl.params.flatten(), sf.params.flatten())
    report("algorithm equivalence (lambda frozen at 0, augmentation off -> "
           "bit-identical to baseline)", ok)


# ---------------------------------------------------------------------------
# criterion 5: multiplier contract over a full training run


def test_multiplier_contract(credit_fcnn_runs):
    ok = True
    for res in credit_fcnn_runs["sf"]:
        ok = ok and all(row.lambda_min >= 0.0 for row in res.trace)
        ok = ok and all(np.all(lam >= 0.0) for lam in res.lagrange.multipliers)
    report("multiplier contract (lambda >= 0 after every update, full credit run)",
           ok)


# ---------------------------------------------------------------------------
# criterion 6: directional desk-scale reproduction


def test_directional_fcnn(credit_splits, credit_fcnn_runs):
    _, test_n = credit_splits
    bl = lane_stats(test_n, credit_fcnn_runs["bl"], FULL)
    sf = lane_stats(test_n, credit_fcnn_runs["sf"], FULL)
    detail = (f"FTA {bl['fta']:.3f}->{sf['fta']:.3f}, TFR {bl['tfr']:.3f}->"
              f"{sf['tfr']:.3f}, ACC {bl['acc']:.3f}->{sf['acc']:.3f}")
    ok = (sf["fta"] > bl["fta"] and sf["tfr"] >= bl["tfr"]
          and sf["acc"] >= bl["acc"] - 0.02)
    report("directional FCNN(3), 5 seeds (FTA up, TFR up, ACC within 0.02)",
           ok, detail)


def test_directional_lr(credit_splits, credit_lr_runs):
    _, test_n = credit_splits
    bl = lane_stats(test_n, credit_lr_runs["bl"], FULL)
    sf = lane_stats(test_n, credit_lr_runs["sf"], FULL)
    detail = f"FTA(SF)={sf['fta']:.3f}, ACC {bl['acc']:.3f}->{sf['acc']:.3f}"
    ok = sf["fta"] >= 1.0 - 0.02 and sf["acc"] >= bl["acc"] - 0.01
    report("directional LR, 5 seeds (FTA ~ 1.0, ACC within 0.01)", ok, detail)


# ---------------------------------------------------------------------------
# criterion 7: SF_3 economy


def test_sf3_economy(credit_splits, credit_fcnn_runs):
    schema = SchemaConfig(columns=(
        ColumnSpec("gender", "categorical", "sensitive",
                   domain=("female", "male"), privileged="male"),
        ColumnSpec("race", "numeric", "sensitive",
                   domain=(0.0, 1.0, 2.0, 3.0, 4.0), privileged=0.0),
        ColumnSpec("age", "numeric", "sensitive",
                   domain=tuple(float(v) for v in range(17, 88)), privileged=30.0),
        ColumnSpec("hours", "numeric", "nonsensitive"),
        ColumnSpec("y", "numeric", "label"),
    ))
    record = np.array([0.0, 0.25, 10 / 70, 0.5])
    full_size = len(enumerate_subpopulation(record, schema, FULL, label=0))
    ext_size = len(enumerate_subpopulation(record, schema, EXTREMES, label=0))
    size_ok = ext_size <= 9 and full_size == 710

    _, test_n = credit_splits
    bl = lane_stats(test_n, credit_fcnn_runs["bl"], FULL)
    sf3 = lane_stats(test_n, credit_fcnn_runs["sf3"], FULL)
    dir_ok = (sf3["fta"] > bl["fta"] and sf3["tfr"] >= bl["tfr"]
              and sf3["acc"] >= bl["acc"] - 0.02)
    detail = (f"census-schema members: extremes {ext_size} vs full {full_size}; "
              f"FTA {bl['fta']:.3f}->{sf3['fta']:.3f}, TFR {bl['tfr']:.3f}->"
              f"{sf3['tfr']:.3f}")
    report("SF_3 economy (<= 9 vs 710 members; directional checks hold)",
           size_ok and dir_ok, detail)


# ---------------------------------------------------------------------------
# criterion 8: synthetic service-discrimination direction


def test_ctrip_service_discrimination():
    ds = synth_ctrip(1000, seed=3)
    train, test = split(ds, 0.2, seed=1)
    train_n, scaler = normalize(train)
    test_n, _ = normalize(test, scaler)
    stats = {}
    for name, strategy in (("bl", None), ("sf3", EXTREMES)):
        rows = []
        for seed in (0, 1, 2):
            m0 = init_model(architecture("fcnn3"), train_n.schema.n_features, 3,
                            seed=seed)
            cfg = TrainConfig(epochs=30, learning_rate=1e-3, optimizer="adam",
                              loss="mse", seed=seed,
                              fairness=FairnessSpec(lipschitz=1.0),
                              strategy=strategy or AugmentationStrategy())
            fn = train_baseline if strategy is None else train_siamese
            res = fn(train_n, m0, cfg)
            counts = fairness_confusion(test_n, res.params, EXTREMES)
            rows.append((fta_rate(test_n, res.params, EXTREMES), counts.tbr))
        arr = np.array(rows)
        stats[name] = {"fta": arr[:, 0].mean(), "tbr": arr[:, 1].mean()}
    ok = (stats["sf3"]["fta"] > stats["bl"]["fta"]
          and stats["sf3"]["tbr"] < stats["bl"]["tbr"])
    detail = (f"FTA {stats['bl']['fta']:.3f}->{stats['sf3']['fta']:.3f}, "
              f"TBR {stats['bl']['tbr']:.3f}->{stats['sf3']['tbr']:.3f}")
    report("service-discrimination direction (FTA up, TBR down under SF_3)",
           ok, detail)
