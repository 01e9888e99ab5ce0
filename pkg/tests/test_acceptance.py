"""Acceptance suite: eight system-level checks at stated tolerances.

Each check prints one `[acceptance] ... PASS/FAIL (runtime)` line so the
whole contract is auditable from the pytest log at a glance. Checks 6 and 7
train real models on synthetic data and dominate the suite's runtime.
"""

import contextlib
import itertools
import math
import time
from collections import Counter
from dataclasses import replace

import numpy as np
import torch

from jointrec import (EmbeddingPair, JointModel, ModelConfig, PredictionTable,
                      SWFCConfig, SynthSpec, TrainConfig, evaluate,
                      greedy_ensemble, jrbm, load_checkpoint, macro_f1,
                      modality_dropout, plurality_vote, predict,
                      read_feature_matrix, sample_drop_masks, score_table,
                      swfc_loss, synth_generate, total_loss, train,
                      write_feature_matrix)
from jointrec.training import AugmentParams, ModelParams

from conftest import make_dataset


@contextlib.contextmanager
def criterion(tag, budget_s):
    start = time.monotonic()
    try:
        yield
    except Exception:
        print(f"[acceptance] {tag}: FAIL ({time.monotonic() - start:.1f}s)")
        raise
    elapsed = time.monotonic() - start
    print(f"[acceptance] {tag}: PASS ({elapsed:.1f}s)")
    assert elapsed < budget_s, f"{tag} exceeded {budget_s}s budget"


# --- 1: contrastive loss vs an independent reference -------------------------

def supcon_reference(z, labels, tau):
    """Scalar-loop supervised-contrastive loss, log-sum-exp free."""
    z = z / z.norm(dim=1, keepdim=True)
    n = len(labels)
    total = 0.0
    active = 0
    for i in range(n):
        positives = [p for p in range(n) if p != i and labels[p] == labels[i]]
        if not positives:
            continue
        active += 1
        denom = sum(math.exp(float(z[i] @ z[a]) / tau)
                    for a in range(n) if a != i)
        anchor = sum(-math.log(math.exp(float(z[i] @ z[p]) / tau) / denom)
                     for p in positives)
        total += anchor / len(positives)
    return total / max(1, active)


def test_1_loss_oracle_equivalence():
    with criterion("1 contrastive loss matches supervised-contrastive "
                   "reference (gamma=0, unit weights)", budget_s=5):
        rng = np.random.default_rng(42)
        checked = 0
        for _ in range(20):
            n = int(rng.integers(2, 9))
            h = int(rng.integers(2, 17))
            num_classes = int(rng.integers(2, 4))
            z = torch.tensor(rng.normal(size=(n, h)))
            labels = torch.tensor(rng.integers(0, num_classes, size=n))
            tau = float(rng.uniform(0.07, 0.5))
            cfg = SWFCConfig(weights=torch.ones(num_classes, dtype=z.dtype),
                             gamma=0.0, tau=tau)
            ours = swfc_loss(z, labels, cfg).item()
            ref = supcon_reference(z, labels, tau)
            if ref == 0.0:
                assert ours == 0.0
            else:
                assert abs(ours - ref) / abs(ref) < 1e-6
            checked += 1
        assert checked == 20


# --- 2: analytic gradients vs central finite differences ---------------------

def finite_difference(fn, flat, eps):
    grads = torch.empty_like(flat)
    for k in range(flat.numel()):
        orig = flat[k].item()
        flat[k] = orig + eps
        up = fn()
        flat[k] = orig - eps
        down = fn()
        flat[k] = orig
        grads[k] = (up - down) / (2 * eps)
    return grads


def test_2_gradient_checks():
    with criterion("2 analytic gradients match central finite differences",
                   budget_s=60):
        # direct check on the contrastive loss surface
        gen = torch.Generator().manual_seed(7)
        z0 = torch.randn(5, 8, dtype=torch.float64, generator=gen)
        labels = torch.tensor([0, 1, 0, 2, 1])
        cfg = SWFCConfig(
            weights=torch.tensor([1.3, 0.7, 2.1], dtype=torch.float64),
            gamma=2.0, tau=0.2)

        z = z0.clone().requires_grad_(True)
        swfc_loss(z, labels, cfg).backward()
        analytic = z.grad.flatten()
        work = z0.clone()
        fd = finite_difference(
            lambda: swfc_loss(work, labels, cfg).item(),
            work.flatten(), eps=1e-5)
        rel = (analytic - fd).norm() / fd.norm()
        assert rel < 1e-4, f"swfc gradient rel error {rel:.2e}"

        # whole network + combined objective, sampled parameter coordinates
        mcfg = ModelConfig(d_audio=6, d_video=5, d_text=4, num_emotions=3,
                           num_intents=2, h=8, fusion_layers=1,
                           fusion_heads=2, interaction_heads=2, dropout_p=0.0)
        model = JointModel(mcfg, seed=1).double()
        rng = np.random.default_rng(11)
        features = {m: torch.tensor(rng.normal(size=(4, 3, d)))
                    for m, d in (("audio", 6), ("video", 5), ("text", 4))}
        masks = {m: torch.ones(4, 3, dtype=torch.bool) for m in features}
        for m in masks:
            masks[m][3, 2] = False  # one ragged row keeps pooling honest
        emo = torch.tensor([0, 1, 2, 0])
        intent = torch.tensor([0, 1, 0, 1])
        ecfg = SWFCConfig(weights=torch.tensor([1.0, 2.0, 0.5]).double(),
                          gamma=2.0, tau=0.1)
        icfg = SWFCConfig(weights=torch.tensor([1.5, 0.5]).double(),
                          gamma=1.0, tau=0.1)

        def loss_value():
            out = model(features, masks, training=False)
            return total_loss(out, emo, intent, ecfg, icfg,
                              lambda_ce=1.0, mu_swfc=0.5).total

        model.zero_grad()
        loss_value().backward()

        analytic_coords, fd_coords = [], []
        eps = 1e-5
        for name, param in model.named_parameters():
            flat = param.data.view(-1)
            grad = param.grad.view(-1)
            picks = rng.choice(flat.numel(), size=min(4, flat.numel()),
                               replace=False)
            for k in picks:
                orig = flat[k].item()
                flat[k] = orig + eps
                with torch.no_grad():
                    up = loss_value().item()
                flat[k] = orig - eps
                with torch.no_grad():
                    down = loss_value().item()
                flat[k] = orig
                analytic_coords.append(grad[k].item())
                fd_coords.append((up - down) / (2 * eps))
        analytic_coords = torch.tensor(analytic_coords)
        fd_coords = torch.tensor(fd_coords)
        rel = (analytic_coords - fd_coords).norm() / fd_coords.norm()
        assert rel < 1e-4, f"model gradient rel error {rel:.2e}"


# --- 3: metrics vs brute-force recomputation ---------------------------------

def test_3_metric_oracle():
    with criterion("3 macro-F1 and joint score match brute force", budget_s=10):
        rng = np.random.default_rng(3)
        for _ in range(100):
            c = int(rng.integers(2, 9))
            conf = rng.integers(0, 20, size=(c, c)).astype(np.int64)
            for k in range(c):
                if rng.random() < 0.25:
                    conf[k, :] = 0
                    conf[:, k] = 0
            if conf.sum() == 0:
                conf[0, 0] = 1
            macro, per_class = macro_f1(conf)
            scores = {}
            for k in range(c):
                tp = conf[k, k]
                fp = conf[:, k].sum() - tp
                fn = conf[k, :].sum() - tp
                if tp == 0 and fp == 0 and fn == 0:
                    continue
                prec = tp / (tp + fp) if tp + fp else 0.0
                rec = tp / (tp + fn) if tp + fn else 0.0
                scores[k] = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
            expected = sum(scores.values()) / len(scores)
            assert abs(macro - expected) < 1e-9
            for k, val in scores.items():
                assert abs(per_class[k] - val) < 1e-9
        assert jrbm(1.0, 0.0) == 0.0
        assert jrbm(0.0, 1.0) == 0.0
        for a in [0.7356, 0.25, 1.0] + list(rng.uniform(0.01, 1.0, 50)):
            assert jrbm(float(a), float(a)) == float(a)


# --- 4: modality dropout statistics ------------------------------------------

def test_4_dropout_statistics():
    with criterion("4 dropout rates, identity at p=0, keep-one at p=1",
                   budget_s=20):
        gen = torch.Generator().manual_seed(1234)
        raw, final = sample_drop_masks(10000, 0.3, gen)
        rates = raw.float().mean(dim=0)
        assert raw.shape == (10000, 3)
        for rate in rates.tolist():
            assert 0.28 <= rate <= 0.32, f"pre-fallback rate {rate:.4f}"

        embs_in = {m: EmbeddingPair(torch.randn(6, 4, generator=gen),
                                    torch.randn(6, 4, generator=gen))
                   for m in ("audio", "video", "text")}
        same = modality_dropout(embs_in, p=0.0, training=True, rng=gen)
        for mod, pair in embs_in.items():
            assert torch.equal(same[mod].emotion, pair.emotion)
            assert torch.equal(same[mod].intent, pair.intent)

        _, final_all = sample_drop_masks(10000, 1.0, gen)
        kept = (~final_all).sum(dim=1)
        assert torch.equal(kept, torch.ones(10000, dtype=kept.dtype))


# --- 5: voting against exhaustive oracles ------------------------------------

def test_5_voting_exhaustive():
    with criterion("5 plurality vote and greedy selection match exhaustive "
                   "oracles", budget_s=60):
        labels = ("L0", "L1", "L2")
        patterns = list(itertools.product(range(3), repeat=3))  # 27 per task
        ids = []
        rows = [{}, {}, {}]
        for e_pat, i_pat in itertools.product(patterns, patterns):
            sid = f"p{len(ids)}"
            ids.append(sid)
            for m in range(3):
                rows[m][sid] = (labels[e_pat[m]], labels[i_pat[m]])
        tables = [PredictionTable(f"m{m}", rows[m]) for m in range(3)]
        voted = plurality_vote(tables)
        for sid in ids:
            for task in (0, 1):
                got = [t.rows[sid][task] for t in tables]
                counts = Counter(got)
                top = max(counts.values())
                leaders = [lab for lab, c in counts.items() if c == top]
                expected = got[0] if len(leaders) > 1 else leaders[0]
                assert voted.rows[sid][task] == expected

        # greedy selection vs exhaustive ordered-subset search
        def exhaustive(candidates, golds):
            best = -1.0
            rest = range(1, len(candidates))
            for size in range(len(candidates)):
                for combo in itertools.combinations(rest, size):
                    for order in itertools.permutations((0,) + combo):
                        tabs = [candidates[k] for k in order]
                        score = score_table(plurality_vote(tabs), golds)[2]
                        best = max(best, score)
            return best

        golds = {f"s{k}": ("a", "x") if k % 2 == 0 else ("b", "y")
                 for k in range(12)}

        def flip(pair):
            return ("b" if pair[0] == "a" else "a",
                    "y" if pair[1] == "x" else "x")

        def with_errors(model_id, bad):
            return PredictionTable(model_id, {
                sid: (flip(pair) if int(sid[1:]) in bad else pair)
                for sid, pair in golds.items()})

        # disjoint error regions: the three-way vote is perfect
        complementary = [with_errors("c0", {0, 1, 2}),
                         with_errors("c1", {3, 4, 5, 6}),
                         with_errors("c2", {7, 8, 9, 10}),
                         with_errors("c3", set(range(12)))]
        selected, best = greedy_ensemble(complementary, golds)
        assert best == exhaustive(complementary, golds) == 1.0
        assert [t.model_id for t in selected] == ["c0", "c1", "c2"]

        # all-identical candidates: nothing can improve on the first
        flat = [with_errors(f"f{k}", {0, 1}) for k in range(4)]
        selected, best = greedy_ensemble(flat, golds)
        assert len(selected) == 1
        assert best == exhaustive(flat, golds)
        assert best == score_table(flat[0], golds)[2]


# --- 6: end-to-end learnability on separable data ----------------------------

def test_6_learnability(tmp_path):
    with criterion("6 separable synthetic data reaches val joint score "
                   ">= 0.85 within 30 epochs", budget_s=300):
        spec = SynthSpec(
            emotion_labels=tuple(f"e{k}" for k in range(5)),
            intent_labels=tuple(f"i{k}" for k in range(6)),
            dims={"audio": 12, "video": 10, "text": 8},
            counts={"train": np.full((5, 6), 20),
                    "val": np.full((5, 6), 5),
                    "test": np.full((5, 6), 1)},
            seq_len=(4, 8),
            separation=6.0,
            sigma=1.0,
        )
        dataset = synth_generate(spec, seed=100)
        assert len(dataset.split("train")) == 600
        assert len(dataset.split("val")) == 150
        cfg = TrainConfig(
            epochs=30, batch_size=32, step_size=1e-3, seed=0, patience=30,
            top_k=3,
            model=ModelParams(h=32, fusion_layers=1, fusion_heads=4,
                              interaction_heads=4, dropout_p=0.3),
        )
        history = train(cfg, dataset)
        peak = max(r.val.jrbm for r in history.records)
        assert history.stopped_epoch <= 30
        assert peak >= 0.85, f"best val jrbm {peak:.4f}"


# --- 7: imbalance handling moves scores the right way ------------------------

def _imbalanced_spec():
    train_counts = np.full((4, 6), 9)
    train_counts[:, 4:] = 2  # minority intents: 8 of 160 samples each (5%)
    val_counts = np.full((4, 6), 8)
    val_counts[:, 4:] = 4
    return SynthSpec(
        emotion_labels=tuple(f"e{k}" for k in range(4)),
        intent_labels=tuple(f"i{k}" for k in range(6)),
        dims={"audio": 12, "video": 10, "text": 8},
        counts={"train": train_counts, "val": val_counts,
                "test": np.full((4, 6), 10)},
        seq_len=(4, 8),
        separation=3.0,
        sigma=1.0,
    )


def _minority_intent_f1(report):
    return float(np.mean([report.intent_per_class[4],
                          report.intent_per_class[5]]))


def _vote_top_checkpoints(history, dataset, out_dir):
    tables = []
    for info in history.checkpoints:
        model, _ = load_checkpoint(out_dir / info.path)
        rows = {}
        for sid, e, i in predict(model, dataset, "val"):
            rows[sid] = (dataset.vocab.emotion_labels[e],
                         dataset.vocab.intent_labels[i])
        tables.append(PredictionTable(f"epoch{info.epoch}", rows))
    golds = {s.id: (dataset.vocab.emotion_labels[s.emotion],
                    dataset.vocab.intent_labels[s.intent])
             for s in dataset.split("val")}
    return score_table(plurality_vote(tables), golds)[2]


def test_7_imbalance_direction(tmp_path):
    with criterion("7 weighted contrastive + oversampling beats plain "
                   "cross-entropy on minority intents; voting holds up",
                   budget_s=1200):
        spec = _imbalanced_spec()
        full_scores, plain_scores, vote_wins = [], [], 0
        for s in range(5):
            dataset = synth_generate(spec, seed=500 + s)
            base = TrainConfig(
                epochs=20, batch_size=32, step_size=1e-3, seed=s, patience=20,
                top_k=3,
                model=ModelParams(h=32, fusion_layers=1, fusion_heads=4,
                                  interaction_heads=4, dropout_p=0.3),
                augment=AugmentParams("intent", 0.5, 0.05),
            )
            plain = replace(base, use_swfc=False, use_augmentation=False,
                            loss=replace(base.loss, weighted_ce=False))

            for tag, cfg, bucket in (("full", base, full_scores),
                                     ("plain", plain, plain_scores)):
                out = tmp_path / f"s{s}_{tag}"
                history = train(cfg, dataset, out_dir=out)
                best = history.best_checkpoint()
                model, _ = load_checkpoint(out / best.path)
                report = evaluate(model, dataset, "test")
                bucket.append(_minority_intent_f1(report))
                if tag == "full":
                    voted = _vote_top_checkpoints(history, dataset, out)
                    if voted >= best.val_jrbm:
                        vote_wins += 1

        mean_full = float(np.mean(full_scores))
        mean_plain = float(np.mean(plain_scores))
        print(f"    minority intent F1: full={mean_full:.4f} "
              f"plain={mean_plain:.4f}; vote>=best in {vote_wins}/5 seeds")
        assert mean_full > mean_plain, (
            f"direction violated: {mean_full:.4f} <= {mean_plain:.4f}")
        assert vote_wins >= 4, f"vote held in only {vote_wins}/5 seeds"


# --- 8: determinism and round trips -------------------------------------------

def test_8_determinism_and_round_trips(tmp_path):
    with criterion("8 seeded reruns, file formats, and ablation parity are "
                   "reproducible", budget_s=240):
        dataset = make_dataset()
        cfg = TrainConfig(
            epochs=2, batch_size=4, seed=5, top_k=2,
            model=ModelParams(h=8, fusion_layers=1, fusion_heads=2,
                              interaction_heads=2, dropout_p=0.3))
        h1 = train(cfg, dataset, out_dir=tmp_path / "r1")
        h2 = train(cfg, dataset, out_dir=tmp_path / "r2")
        assert h1.to_dict() == h2.to_dict()
        rel = h1.best_checkpoint().path
        assert (tmp_path / "r1" / rel).read_bytes() == \
            (tmp_path / "r2" / rel).read_bytes()

        # feature file round trip preserves every bit, including -0.0
        matrix = np.random.default_rng(0).normal(size=(7, 5)).astype(np.float32)
        matrix[0, 0] = -0.0
        matrix[1, 1] = np.float32(1e-42)  # subnormal
        fea = tmp_path / "m.fea"
        write_feature_matrix(fea, matrix)
        back = read_feature_matrix(fea)
        assert back.tobytes() == matrix.tobytes()

        # checkpoint round trip: values bit-exact, re-save byte-identical
        model, _ = load_checkpoint(tmp_path / "r1" / rel)
        reloaded, _ = load_checkpoint(tmp_path / "r1" / rel)
        for (name, a), (_, b) in zip(model.state_dict().items(),
                                     reloaded.state_dict().items()):
            assert torch.equal(a, b), name

        # one ablation row equals the standalone run with the same toggles
        from jointrec.cli import ABLATION_ROWS
        key, _, toggles = ABLATION_ROWS[1]
        assert key == "no_augmentation"
        row_history = train(replace(cfg, **toggles), dataset,
                            out_dir=tmp_path / "row")
        solo_history = train(replace(cfg, use_augmentation=False), dataset,
                             out_dir=tmp_path / "solo")
        assert row_history.to_dict() == solo_history.to_dict()
        row_model, _ = load_checkpoint(
            tmp_path / "row" / row_history.best_checkpoint().path)
        solo_model, _ = load_checkpoint(
            tmp_path / "solo" / solo_history.best_checkpoint().path)
        row_report = evaluate(row_model, dataset, "test")
        solo_report = evaluate(solo_model, dataset, "test")
        assert row_report.to_dict() == solo_report.to_dict()
