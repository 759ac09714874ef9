"""Independent brute-force oracles used to check the library implementations.

Everything here is written with explicit Python loops and scalar math on
purpose: these functions must stay structurally independent of the vectorized
library code they are used to verify.
"""

from __future__ import annotations

import math


def mean_concat_pair_vector(token_rows, head_indices, tail_indices):
    """Mean the selected rows for head and tail, then concatenate."""
    h = len(token_rows[0])
    out = []
    for indices in (head_indices, tail_indices):
        acc = [0.0] * h
        for t in indices:
            for d in range(h):
                acc[d] += token_rows[t][d]
        out.extend(v / len(indices) for v in acc)
    return out


def _distance(zi, zj, mode):
    if mode == "cosine":
        return 1.0 - sum(a * b for a, b in zip(zi, zj))
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(zi, zj)))


def supcon_loss(Z, Y, mode, tau):
    """Direct nested-loop evaluation of the batch contrastive loss."""
    n = len(Z)
    total = 0.0
    for i in range(n):
        pos_mass = sum(
            sum(yi * yj for yi, yj in zip(Y[i], Y[k]))
            for k in range(n) if k != i
        )
        if pos_mass == 0:
            continue
        denom = sum(
            math.exp(-_distance(Z[i], Z[k], mode) / tau)
            for k in range(n) if k != i
        )
        for j in range(n):
            if j == i:
                continue
            shared = sum(yi * yj for yi, yj in zip(Y[i], Y[j]))
            if shared == 0:
                continue
            beta = shared / pos_mass
            w = math.exp(-_distance(Z[i], Z[j], mode) / tau)
            total += beta * math.log(w / denom)
    return -total / n


def knn_full_sort(distances, k):
    """All (distance, index) pairs sorted, truncated at k; index breaks ties."""
    order = sorted(range(len(distances)), key=lambda i: (distances[i], i))
    return [(i, distances[i]) for i in order[:k]]


def knn_posterior(neighbor_labels, neighbor_distances, priors, tau):
    """Nested-loop posterior for each class given the k retrieved neighbors."""
    n_classes = len(priors)
    out = []
    for h in range(n_classes):
        num = 0.0
        den = 0.0
        for y, d in zip(neighbor_labels, neighbor_distances):
            w = math.exp(-d / tau)
            num += priors[h] * y[h] * w
            den += (priors[h] * y[h] + (1.0 - priors[h]) * (1.0 - y[h])) * w
        out.append(num / den)
    return out


def confusion_counts(pred, truth):
    tp = fp = fn = 0
    for prow, trow in zip(pred, truth):
        for p, t in zip(prow, trow):
            if p == 1 and t == 1:
                tp += 1
            elif p == 1 and t == 0:
                fp += 1
            elif p == 0 and t == 1:
                fn += 1
    return tp, fp, fn


def micro_f1(pred, truth):
    tp, fp, fn = confusion_counts(pred, truth)
    if tp + fp + fn == 0:
        return 0.0
    return tp / (tp + 0.5 * (fn + fp))


def macro_f1(pred, truth):
    n_classes = len(truth[0])
    scores = []
    for h in range(n_classes):
        col_pred = [[row[h]] for row in pred]
        col_truth = [[row[h]] for row in truth]
        tp, fp, fn = confusion_counts(col_pred, col_truth)
        if tp + fp + fn == 0:
            continue
        scores.append(tp / (tp + 0.5 * (fn + fp)))
    if not scores:
        return None
    return sum(scores) / len(scores)


def confidence(posteriors, pred):
    chosen = [p for p, yhat in zip(posteriors, pred) if yhat == 1]
    if not chosen:
        return 0.0
    prod = 1.0
    for p in chosen:
        prod *= p
    return prod ** (1.0 / len(chosen))


def precision_at_r(posteriors, truth):
    scores = []
    for post_row, truth_row in zip(posteriors, truth):
        r_j = sum(truth_row)
        if r_j == 0:
            continue
        ranked = sorted(range(len(post_row)), key=lambda h: (-post_row[h], h))
        top = ranked[:r_j]
        hits = sum(1 for h in top if truth_row[h] == 1)
        scores.append(hits / r_j)
    if not scores:
        return None
    return sum(scores) / len(scores)


def phi_matrix(Y):
    n = len(Y)
    n_classes = len(Y[0])
    out = [[0.0] * n_classes for _ in range(n_classes)]
    for h in range(n_classes):
        for p in range(n_classes):
            n11 = sum(1 for row in Y if row[h] == 1 and row[p] == 1)
            n00 = sum(1 for row in Y if row[h] == 0 and row[p] == 0)
            n10 = sum(1 for row in Y if row[h] == 1 and row[p] == 0)
            n01 = sum(1 for row in Y if row[h] == 0 and row[p] == 1)
            n1h = sum(1 for row in Y if row[h] == 1)
            n0h = n - n1h
            n1p = sum(1 for row in Y if row[p] == 1)
            n0p = n - n1p
            den = math.sqrt(n1h * n0h * n1p * n0p)
            out[h][p] = (n11 * n00 - n01 * n10) / den if den > 0 else 0.0
    return out


def csd(pred, truth):
    phi_pred = phi_matrix(pred)
    phi_truth = phi_matrix(truth)
    total = 0.0
    for row_p, row_t in zip(phi_pred, phi_truth):
        for a, b in zip(row_p, row_t):
            total += abs(a - b) ** 2
    return math.sqrt(total)


def finite_difference_gradients(loss_fn, params, eps=1e-5):
    """Central finite differences of ``loss_fn`` at ``params`` (list of arrays)."""
    grads = []
    for arr in params:
        g = arr.copy().astype(float)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + eps
            up = loss_fn()
            flat[idx] = orig - eps
            down = loss_fn()
            flat[idx] = orig
            gflat[idx] = (up - down) / (2.0 * eps)
        grads.append(g)
    return grads
