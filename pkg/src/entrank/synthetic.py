"""Synthetic data: planted-weight regression sets and a small multi-language corpus."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import EntityType

TYPE_NAMES = {
    EntityType.PERSON: "T_person",
    EntityType.LOCATION: "T_location",
    EntityType.ORGANIZATION: "T_organization",
    EntityType.MISC: "T_thing",
}


def planted_regression(n: int, weights, intercept: float = 0.0, noise: float = 0.0, seed: int = 0):
    """Features uniform on [0, 1], targets ``intercept + X @ weights + N(0, noise)``."""
    rng = np.random.default_rng(seed)
    weights = np.asarray(weights, dtype=float)
    X = rng.uniform(0.0, 1.0, size=(n, len(weights)))
    y = intercept + X @ weights
    if noise:
        y = y + rng.normal(0.0, noise, size=n)
    return X, y


def integer_labels(scores) -> np.ndarray:
    """Round half-up and clamp into the 1..5 label scale."""
    return np.clip(np.floor(np.asarray(scores, dtype=float) + 0.5), 1, 5).astype(int)


@dataclass
class ToyEntity:
    kb_id: str
    title: str
    entity_type: EntityType
    tier: int
    languages: tuple[str, ...]


# A generic / specific pair that should come out ordered the same way as a
# well-known entity and its obscure variant.
GENERIC = ("Q_bed", "Bed")
SPECIFIC = ("Q_bunk_bed", "Bunk bed")
N_TYPE_TAGS = 300


def toy_entities(n: int = 100, languages=("en", "es", "fr"), seed: int = 7) -> list[ToyEntity]:
    """Entities with an importance tier in 1..5; persons skew to high tiers."""
    rng = np.random.default_rng(seed)
    n_person, n_loc, n_org = round(0.15 * n), round(0.15 * n), round(0.12 * n)
    kinds = [EntityType.PERSON] * n_person + [EntityType.LOCATION] * n_loc + [EntityType.ORGANIZATION] * n_org
    kinds += [EntityType.MISC] * (n - 2 - len(kinds))
    rng.shuffle(kinds)
    ents = []
    for i, kind in enumerate(kinds, 1):
        if kind is EntityType.PERSON:
            tier = int(rng.choice([3, 4, 5], p=[0.3, 0.4, 0.3]))
        else:
            tier = int(rng.choice([1, 2, 3, 4, 5], p=[0.35, 0.3, 0.2, 0.1, 0.05]))
        langs = [languages[0]] + [lang for lang in languages[1:] if rng.uniform() < 0.3 + 0.15 * tier]
        ents.append(ToyEntity(f"Q{i}", f"{kind.value.title()} {i}", kind, tier, tuple(langs)))
    ents.append(ToyEntity(GENERIC[0], GENERIC[1], EntityType.MISC, 5, tuple(languages)))
    ents.append(ToyEntity(SPECIFIC[0], SPECIFIC[1], EntityType.MISC, 1, tuple(languages)))
    return ents


def _geometric(rng, tier: int, base: float) -> int:
    """Roughly ``base ** (tier - 1)`` with mild multiplicative jitter."""
    return max(1, int(round(base ** (tier - 1) * rng.uniform(0.85, 1.15))))


def write_toy_corpus(out_dir, n: int = 100, languages=("en", "es", "fr"), seed: int = 7,
                     with_links: bool = True, with_types: bool = True,
                     label_noise: float = 0.15) -> dict[str, Path]:
    """Write pages/links/categories/triples/labels/social score files.

    Each entity gets a tier in 1..5; its label is the tier, moved one step
    up or down for a ``label_noise`` fraction of entities. Every observable
    signal (links, categories, triples, social score) grows geometrically
    with the tier, so log-scaled features are close to linear in the label.

    ``with_links=False`` leaves the link file empty and ``with_types=False``
    omits type assertions; both remove groups of near-collinear features.
    Returns the written paths by role.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed + 1)
    ents = toy_entities(n, languages, seed)
    tier = np.array([e.tier for e in ents])

    pages, links, cats = [], [], []
    for li, lang in enumerate(languages):
        members = [i for i, e in enumerate(ents) if lang in e.languages]
        page_of = {i: 1000 * (li + 1) + k for k, i in enumerate(members, 1)}
        for i in members:
            e = ents[i]
            pages.append(f"{e.kb_id}\t{lang}\t{page_of[i]}\t{e.title}\t{e.entity_type.value}")
        pull = 2.0 ** tier[members]
        pull = pull / pull.sum()
        for i in members if with_links else ():
            k = min(_geometric(rng, tier[i], 1.6), len(members) - 1)
            targets = rng.choice(len(members), size=k + 1, replace=False, p=pull)
            for j in [members[t] for t in targets if members[t] != i][:k]:
                links.append(f"{lang}\t{page_of[i]}\t{page_of[j]}")
        for i in members:
            for c in range(_geometric(rng, tier[i], 1.7)):
                cats.append(f"{lang}\t{page_of[i]}\tCategory_{c}_{ents[i].entity_type.value.lower()}")

    triples, socials = [], []
    tags = rng.choice(N_TYPE_TAGS, size=len(ents))
    for i, e in enumerate(ents):
        if with_types:
            triples.append(f"{e.kb_id}\ttype\tkb:{TYPE_NAMES[e.entity_type]}")
            triples.append(f"{e.kb_id}\ttype\tkb:T_tag{tags[i]}")
        triples.append(f"{e.kb_id}\tname\t{e.title}")
        if e.entity_type in (EntityType.PERSON, EntityType.ORGANIZATION) and tier[i] >= 4:
            handle = f"twitter:{e.kb_id.lower()}"
            triples.append(f"{e.kb_id}\tsocial_profile\t{handle}")
            socials.append(f"{handle}\t{min(100.0, 3.0 ** tier[i] * rng.uniform(0.3, 0.4)):.2f}")
    pull = 2.0 ** tier / (2.0 ** tier).sum()
    for i, e in enumerate(ents):
        for j in rng.choice(len(ents), size=_geometric(rng, tier[i], 1.8), replace=True, p=pull):
            if j != i:
                triples.append(f"{e.kb_id}\trelated_to\tkb:{ents[int(j)].kb_id}")

    # Annotators disagree with the tier now and then.
    shift = rng.choice([-1, 0, 1], size=len(ents), p=[label_noise / 2, 1 - label_noise, label_noise / 2])
    labels = np.clip(tier + shift, 1, 5)
    label_lines = [f"{e.kb_id}\t{lab}" for e, lab in zip(ents, labels)]

    files = {
        "pages": ("pages.tsv", pages),
        "links": ("links.tsv", links),
        "categories": ("categories.tsv", cats),
        "triples": ("triples.tsv", triples),
        "labels": ("labels.tsv", label_lines),
        "social_scores": ("social_scores.tsv", socials),
    }
    paths = {}
    for role, (name, lines) in files.items():
        p = out / name
        p.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        paths[role] = p
    return paths
