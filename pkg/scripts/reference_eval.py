#!/usr/bin/env python3
"""Standalone recomputation of the held-out evaluation from raw input files.

Written without importing ``entrank``: plain dicts and lists, a dict-based
PageRank, Gauss-Jordan least squares. numpy is used only for the seeded
permutation that defines the 80/20 split, since that permutation is the
shared convention both sides must agree on.

    python scripts/reference_eval.py data/toy --seed 42 --threshold 4
"""

import argparse
import math
import os
import sys

import numpy as np

FEATURES = [
    "pagerank", "outlink_count", "inlink_count", "in_out_ratio", "category_count",
    "subject_count", "subject_type_count", "object_count", "object_type_count", "social_score",
]


def rows(path):
    if not os.path.exists(path):
        return
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.strip() and not line.startswith("#"):
                yield line.split("\t")


def load(corpus):
    pages = {}  # (lang, page_id) -> kb_id
    for cols in rows(os.path.join(corpus, "pages.tsv")):
        pages[(cols[1], int(cols[2]))] = cols[0]
    links = {}
    for lang, s, d in rows(os.path.join(corpus, "links.tsv")):
        s, d = int(s), int(d)
        if s != d and (lang, s) in pages and (lang, d) in pages:
            links.setdefault(lang, set()).add((s, d))
    cats = {}
    for lang, pid, name in rows(os.path.join(corpus, "categories.tsv")):
        if (lang, int(pid)) in pages:
            cats.setdefault((lang, int(pid)), set()).add(name)
    triples = [tuple(c) for c in rows(os.path.join(corpus, "triples.tsv"))]
    known = set(pages.values())
    labels = {}
    for kb, lab in rows(os.path.join(corpus, "labels.tsv")):
        if kb in known and 1 <= int(lab) <= 5 and kb not in labels:
            labels[kb] = int(lab)
    social = {}
    for sid, sc in rows(os.path.join(corpus, "social_scores.tsv")):
        if 0 <= float(sc) <= 100 and sid not in social:
            social[sid] = float(sc)
    return pages, links, cats, triples, labels, social


def pagerank_dict(nodes, edges, d=0.85, tol=1e-9, max_iters=200):
    n = len(nodes)
    out = {v: [] for v in nodes}
    for s, t in edges:
        out[s].append(t)
    x = {v: 1.0 / n for v in nodes}
    for _ in range(max_iters):
        dangling = sum(x[v] for v in nodes if not out[v])
        new = {v: (d * dangling + (1 - d)) / n for v in nodes}
        for v in nodes:
            if out[v]:
                share = d * x[v] / len(out[v])
                for t in out[v]:
                    new[t] += share
        total = sum(new.values())
        new = {v: new[v] / total for v in nodes}
        change = sum(abs(new[v] - x[v]) for v in nodes)
        x = new
        if change < tol:
            break
    return x


def raw_features(pages, links, cats, triples, social):
    types = {}
    for s, p, o in triples:
        if p == "type":
            types.setdefault(s, set()).add(o[3:] if o.startswith("kb:") else o)
    mentioned = set()
    for s, p, o in triples:
        mentioned.add(s)
        if o.startswith("kb:"):
            mentioned.add(o[3:])

    table = {}
    for lang in sorted({lang for lang, _ in pages}):
        nodes = sorted(pid for (lg, pid) in pages if lg == lang)
        edges = links.get(lang, set())
        pr = pagerank_dict(nodes, edges)
        for pid in nodes:
            kb = pages[(lang, pid)]
            outs = sum(1 for s, _ in edges if s == pid)
            ins = sum(1 for _, t in edges if t == pid)
            row = [pr[pid] * len(nodes), outs, ins, ins / max(outs, 1), len(cats.get((lang, pid), ()))]
            if kb in mentioned:
                subj = [s for s, p, o in triples if p != "type" and o == "kb:" + kb]
                objs = [o[3:] for s, p, o in triples if s == kb and p != "type" and o.startswith("kb:")]
                subj_types = set()
                for x in subj:
                    subj_types |= types.get(x, set())
                obj_types = set()
                for x in objs:
                    obj_types |= types.get(x, set())
                row += [len(subj), len(subj_types), len(objs), len(obj_types)]
            else:
                row += [None] * 4
            found = [social[o] for s, p, o in triples
                     if s == kb and p == "social_profile" and not o.startswith("kb:") and o in social]
            row.append(max(found) if found else None)
            table[(kb, lang)] = row
    return table


def normalize(table):
    den = []
    for k in range(len(FEATURES)):
        logs = [math.log(max(r[k], 1.0)) for r in table.values() if r[k] is not None]
        den.append(max(logs) if logs else 0.0)
    out = {}
    for key, r in table.items():
        out[key] = [0.0 if (v is None or den[k] <= 0) else min(1.0, math.log(max(v, 1.0)) / den[k])
                    for k, v in enumerate(r)]
    return out


def pick_row(table, norm, kb):
    keys = [key for key in norm if key[0] == kb]
    for key in keys:
        if key[1] == "en":
            return norm[key]

    def covered(key):
        return sum(1 for v in table[key] if v is not None and v != 0)

    best = min(keys, key=lambda key: (-covered(key), key[1]))
    return norm[best]


def solve(A, b):
    n = len(A)
    M = [list(A[i]) + [b[i]] for i in range(n)]
    for c in range(n):
        piv = max(range(c, n), key=lambda r: abs(M[r][c]))
        M[c], M[piv] = M[piv], M[c]
        for r in range(n):
            if r != c and M[r][c] != 0.0:
                f = M[r][c] / M[c][c]
                M[r] = [a - f * bb for a, bb in zip(M[r], M[c])]
    return [M[i][n] / M[i][i] for i in range(n)]


def fit(X, y, ridge=1e-8):
    p = len(X[0]) + 1
    A = [[0.0] * p for _ in range(p)]
    b = [0.0] * p
    for xs, t in zip(X, y):
        z = [1.0] + list(xs)
        for i in range(p):
            b[i] += z[i] * t
            for j in range(p):
                A[i][j] += z[i] * z[j]
    for i in range(1, p):
        A[i][i] += ridge
    beta = solve(A, b)
    return beta[0], beta[1:]


def metrics(preds, truth, threshold):
    rounded = [min(5, max(1, math.floor(p + 0.5))) for p in preds]
    tp = sum(1 for r, t in zip(rounded, truth) if r >= threshold and t >= threshold)
    fp = sum(1 for r, t in zip(rounded, truth) if r >= threshold and t < threshold)
    fn = sum(1 for r, t in zip(rounded, truth) if r < threshold and t >= threshold)
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec > 0 else 0.0
    rmse = math.sqrt(sum((r - t) ** 2 for r, t in zip(rounded, truth)) / len(truth))
    return prec, rec, f1, rmse


def reference_report(corpus, seed=42, threshold=4, train_fraction=0.8):
    """Return ``{variant: (precision, recall, f1, rmse)}``."""
    pages, links, cats, triples, labels, social = load(corpus)
    table = raw_features(pages, links, cats, triples, social)
    norm = normalize(table)

    ids = sorted(labels)
    cut = math.floor(len(ids) * train_fraction + 0.5)
    perm = np.random.default_rng(seed).permutation(len(ids))
    train = sorted(ids[i] for i in perm[:cut])
    test = sorted(ids[i] for i in perm[cut:])

    Xtr = [pick_row(table, norm, kb) for kb in train]
    Xte = [pick_row(table, norm, kb) for kb in test]
    ytr = [labels[kb] for kb in train]
    yte = [labels[kb] for kb in test]

    report = {}
    variants = [(name, [k]) for k, name in enumerate(FEATURES)] + [("all_features", list(range(len(FEATURES))))]
    for name, cols in variants:
        b0, w = fit([[r[c] for c in cols] for r in Xtr], ytr)
        preds = [b0 + sum(wi * r[c] for wi, c in zip(w, cols)) for r in Xte]
        report[name] = metrics(preds, yte, threshold)
    return report


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("corpus", help="directory holding pages.tsv, links.tsv, ...")
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--threshold", type=int, default=4)
    ap.add_argument("--train-fraction", type=float, default=0.8)
    args = ap.parse_args(argv)
    report = reference_report(args.corpus, args.seed, args.threshold, args.train_fraction)
    print("variant\tprecision\trecall\tf1\trmse")
    for name, vals in report.items():
        print(name + "\t" + "\t".join(f"{v:.17g}" for v in vals))
    return 0


if __name__ == "__main__":
    sys.exit(main())
