"""Staged command-line pipeline.

    entrank ingest   --pages P --links L ... --out OUT
    entrank features --out OUT
    entrank train    --out OUT --seed 42
    entrank eval     --out OUT
    entrank rank     --out OUT --top-n 500000
    entrank report   --out OUT
    entrank all      (every stage in order)

Each stage reads the previous stage's files from OUT and writes its own,
so a stage can be rerun alone. Every output starts with a ``#`` header
naming the stage, its version and a hash of the non-path settings.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ingest, kbfeatures, linkgraph, model, rankeval
from .ingest import format_real

log = logging.getLogger("entrank")

STAGE_VERSION = 1
EXIT_OK, EXIT_INTERNAL, EXIT_BAD_INPUT = 0, 1, 2
INPUT_ROLES = ("pages", "links", "categories", "triples", "labels", "social_scores")


class StageError(Exception):
    """Bad input or missing prerequisite; maps to exit code 2."""


@dataclass
class PipelineConfig:
    pages: str | None = None
    links: str | None = None
    categories: str | None = None
    triples: str | None = None
    labels: str | None = None
    social_scores: str | None = None
    damping: float = linkgraph.DEFAULT_DAMPING
    pagerank_tol: float = linkgraph.DEFAULT_TOL
    pagerank_max_iters: int = linkgraph.DEFAULT_MAX_ITERS
    split_seed: int = 42
    train_fraction: float = 0.8
    positive_threshold: int = 4
    top_n: int = 500_000
    out: str = "out"
    type_predicate: str = kbfeatures.TYPE_PREDICATE
    social_predicate: str = kbfeatures.SOCIAL_PREDICATE
    distinct_objects: bool = False

    def validate(self) -> None:
        if not 0.0 < self.damping < 1.0:
            raise StageError(f"damping must lie in (0, 1), got {self.damping}")
        if not 0.0 < self.train_fraction < 1.0:
            raise StageError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if not 1 <= self.positive_threshold <= 5:
            raise StageError(f"threshold must lie in [1, 5], got {self.positive_threshold}")
        if self.pagerank_tol <= 0 or self.pagerank_max_iters < 1:
            raise StageError("pagerank_tol must be > 0 and pagerank_max_iters >= 1")

    def digest(self) -> str:
        """Hash of the settings that affect results (input/output paths excluded)."""
        skip = set(INPUT_ROLES) | {"out"}
        payload = {k: v for k, v in dataclasses.asdict(self).items() if k not in skip}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]

    @property
    def out_dir(self) -> Path:
        return Path(self.out)


_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}
_ALIASES = {"seed": "split_seed", "threshold": "positive_threshold"}


def _coerce(name: str, text: str):
    kind = _FIELDS[name].type
    if "bool" in kind:
        return text.strip().lower() in ("1", "true", "yes", "on")
    if "float" in kind:
        return float(text)
    if "int" in kind:
        return int(text)
    return text


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment line.

    Relative input paths are taken relative to the config file.
    """
    base = Path(path).resolve().parent
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise StageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            key = _ALIASES.get(key, key)
            if key not in _FIELDS:
                raise StageError(f"{path}:{lineno}: unknown setting {key!r}")
            if key in INPUT_ROLES and not Path(value).is_absolute():
                value = str(base / value)
            values[key] = _coerce(key, value)
    return values


# -- file helpers ----------------------------------------------------------------


def _header(cfg: PipelineConfig, stage: str, columns=None) -> str:
    lines = [f"# entrank stage={stage} version={STAGE_VERSION} config={cfg.digest()}"]
    if columns:
        lines.append("# " + "\t".join(columns))
    return "\n".join(lines)


def _write(path: Path, lines, header: str) -> None:
    ingest._write_lines(path, lines, header)


def _require(path: Path, what: str) -> Path:
    if not path.is_file():
        raise StageError(f"missing {what}: {path}")
    return path


def _data_rows(path: Path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line and not line.startswith("#"):
                yield line.split("\t")


def store_paths(out: Path) -> dict[str, Path]:
    return {role: out / "stores" / f"{role}.tsv" for role in INPUT_ROLES}


def load_stores(cfg: PipelineConfig):
    paths = store_paths(cfg.out_dir)
    for role, p in paths.items():
        _require(p, f"{role} store (run `ingest` first)")
    catalog, _ = ingest.parse_pages(paths["pages"])
    links, _ = ingest.parse_links(paths["links"], catalog)
    cats, _ = ingest.parse_categories(paths["categories"], catalog)
    triples, _ = ingest.parse_triples(paths["triples"])
    labels, _ = ingest.parse_labels(paths["labels"], catalog)
    social, _ = ingest.parse_external_scores(paths["social_scores"])
    return catalog, links, cats, triples, labels, social


# -- stages ----------------------------------------------------------------------


def cmd_ingest(cfg: PipelineConfig) -> dict[str, ingest.ParseReport]:
    if not cfg.pages:
        raise StageError("no pages file given (--pages)")
    sources = {}
    for role in INPUT_ROLES:
        path = getattr(cfg, role)
        if path is None:
            continue
        if not Path(path).is_file():
            raise StageError(f"input file not found: {path}")
        sources[role] = path

    empty = object()

    def parse(role, fn, *extra):
        if role not in sources:
            return empty, ingest.ParseReport("-")
        return fn(sources[role], *extra)

    catalog, r_pages = ingest.parse_pages(sources["pages"])
    links, r_links = parse("links", ingest.parse_links, catalog)
    cats, r_cats = parse("categories", ingest.parse_categories, catalog)
    triples, r_triples = parse("triples", ingest.parse_triples)
    labels, r_labels = parse("labels", ingest.parse_labels, catalog)
    social, r_social = parse("social_scores", ingest.parse_external_scores)
    links = ingest.LinkEdgeList({}) if links is empty else links
    cats = {} if cats is empty else cats
    triples = ingest.TripleStore(()) if triples is empty else triples
    labels = {} if labels is empty else labels
    social = {} if social is empty else social

    paths = store_paths(cfg.out_dir)
    head = _header(cfg, "ingest")
    ingest.write_pages(paths["pages"], catalog, head)
    ingest.write_links(paths["links"], links, head)
    ingest.write_categories(paths["categories"], cats, head)
    ingest.write_triples(paths["triples"], triples, head)
    ingest.write_labels(paths["labels"], labels, head)
    ingest.write_scores(paths["social_scores"], social, head)

    reports = dict(zip(INPUT_ROLES, (r_pages, r_links, r_cats, r_triples, r_labels, r_social)))
    summary = []
    details = []
    for role, rep in reports.items():
        reasons = ",".join(f"{k}={v}" for k, v in sorted(rep.counters.items())) or "-"
        summary.append(f"{role}\t{rep.accepted}\t{rep.rejected}\t{reasons}")
        details.extend(f"{role}\t{ln}\t{why}" for ln, why in rep.rejected_lines)
    _write(cfg.out_dir / "ingest_report.tsv", summary,
           _header(cfg, "ingest", ("file", "accepted", "rejected", "reasons")))
    _write(cfg.out_dir / "ingest_rejects.tsv", details,
           _header(cfg, "ingest", ("file", "line", "reason")))
    for role, rep in reports.items():
        if rep.rejected:
            log.warning("%s: %d rows rejected (%s)", role, rep.rejected, dict(rep.counters))
    return reports


MATRIX_COLUMNS = ("kb_id", "language") + model.FEATURES


def _matrix_lines(keys, values):
    for (kb_id, lang), row in zip(keys, values):
        cells = ["-" if np.isnan(v) else format_real(float(v)) for v in row]
        yield "\t".join([kb_id, lang] + cells)


def _read_matrix(path: Path):
    keys, rows = [], []
    for cols in _data_rows(path):
        keys.append((cols[0], cols[1]))
        rows.append([np.nan if c == "-" else float(c) for c in cols[2:]])
    return keys, np.array(rows, dtype=float).reshape(len(keys), len(model.FEATURES))


def features_dir(cfg) -> Path:
    return cfg.out_dir / "features"


def cmd_features(cfg: PipelineConfig) -> model.FeatureMatrix:
    catalog, links, cats, triples, _, social = load_stores(cfg)
    wiki = {}
    for lang in catalog.languages:
        graph = linkgraph.build_graph(links, catalog, lang)
        wiki[lang] = linkgraph.wiki_features(graph, cats, cfg.damping, cfg.pagerank_max_iters, cfg.pagerank_tol)
    index = kbfeatures.TripleIndex(triples, cfg.type_predicate, cfg.social_predicate, cfg.distinct_objects)
    kb_rows = kbfeatures.kb_feature_rows(index, social, catalog.kb_ids)
    matrix = model.normalize(model.assemble(catalog, wiki, kb_rows))

    d = features_dir(cfg)
    _write(d / "wiki_features.tsv", (line for lang in sorted(wiki) for line in linkgraph.dump_lines(wiki[lang])),
           _header(cfg, "features", linkgraph.WIKI_DUMP_COLUMNS))
    _write(d / "kb_features.tsv", kbfeatures.dump_lines(kb_rows),
           _header(cfg, "features", kbfeatures.KB_DUMP_COLUMNS))
    _write(d / "raw_matrix.tsv", _matrix_lines(matrix.keys, matrix.raw),
           _header(cfg, "features", MATRIX_COLUMNS))
    _write(d / "normalized_matrix.tsv", _matrix_lines(matrix.keys, matrix.normalized),
           _header(cfg, "features", MATRIX_COLUMNS))
    _write(d / "normalization.tsv",
           (f"{n}\t{format_real(float(v))}" for n, v in zip(model.FEATURES, matrix.denominators)),
           _header(cfg, "features", ("feature_name", "log_max_denominator")))
    cov = rankeval.feature_coverage(matrix) if matrix.keys else dict.fromkeys(model.FEATURES, 0.0)
    _write(d / "coverage.tsv", (f"{n}\t{format_real(v)}" for n, v in cov.items()),
           _header(cfg, "features", ("feature_name", "coverage")))
    return matrix


def load_matrix(cfg: PipelineConfig) -> model.FeatureMatrix:
    d = features_dir(cfg)
    keys, raw = _read_matrix(_require(d / "raw_matrix.tsv", "raw matrix (run `features` first)"))
    nkeys, norm = _read_matrix(_require(d / "normalized_matrix.tsv", "normalized matrix (run `features` first)"))
    if nkeys != keys:
        raise StageError("raw and normalized matrices disagree on rows")
    den = dict((c[0], float(c[1])) for c in _data_rows(_require(d / "normalization.tsv", "normalization file")))
    denominators = np.array([den[n] for n in model.FEATURES])
    flagged = [n for n in model.FEATURES if den[n] == 0.0]
    return model.FeatureMatrix(keys, raw, norm, denominators, flagged)


def model_dir(cfg) -> Path:
    return cfg.out_dir / "model"


def write_weights(path: Path, weights: model.WeightVector, header: str) -> None:
    lines = [f"{n}\t{format_real(float(w))}" for n, w in zip(weights.feature_names, weights.weights)]
    lines.append(f"__intercept__\t{format_real(weights.intercept)}")
    _write(path, lines, header)


def read_weights(path: Path) -> model.WeightVector:
    values = {c[0]: float(c[1]) for c in _data_rows(path)}
    try:
        return model.WeightVector(np.array([values[n] for n in model.FEATURES]), values["__intercept__"])
    except KeyError as exc:
        raise StageError(f"{path}: missing weight {exc}") from exc


def cmd_train(cfg: PipelineConfig) -> rankeval.EvalReport:
    matrix = load_matrix(cfg)
    labels, _ = ingest.parse_labels(_require(store_paths(cfg.out_dir)["labels"], "labels store"),
                                    ingest.parse_pages(store_paths(cfg.out_dir)["pages"])[0])
    split = model.split_labels(labels, cfg.split_seed, cfg.train_fraction)
    report, weights = rankeval.single_feature_eval(matrix, labels, split, cfg.positive_threshold)
    d = model_dir(cfg)
    write_weights(d / "weights.tsv", weights, _header(cfg, "train", ("feature_name", "weight")))
    _write(d / "split.tsv",
           [f"{k}\ttrain" for k in split.train] + [f"{k}\ttest" for k in split.test],
           _header(cfg, "train", ("kb_id", "part")))
    _write(d / "eval_report.tsv", rankeval.eval_lines(report), _header(cfg, "train", rankeval.EVAL_COLUMNS))
    return report


def cmd_eval(cfg: PipelineConfig) -> rankeval.EvalRow:
    """Score the held-out entities with the saved weights."""
    matrix = load_matrix(cfg)
    d = model_dir(cfg)
    weights = read_weights(_require(d / "weights.tsv", "weights (run `train` first)"))
    parts = {"train": [], "test": []}
    for kb_id, part in _data_rows(_require(d / "split.tsv", "split (run `train` first)")):
        parts[part].append(kb_id)
    split = model.TrainTestSplit(tuple(parts["train"]), tuple(parts["test"]), cfg.split_seed)
    paths = store_paths(cfg.out_dir)
    labels, _ = ingest.parse_labels(paths["labels"], ingest.parse_pages(paths["pages"])[0])
    rows = model.training_rows(matrix, split.test)
    scores = model.score_matrix(weights, matrix.normalized[rows])
    truth = [labels[k] for k in split.test]
    result = rankeval.evaluate(scores, truth, cfg.positive_threshold, rankeval.ALL_FEATURES,
                               rankeval.combined_coverage(matrix))
    rounded = np.clip(rankeval.round_half_up(scores), 1, 5)
    _write(d / "predictions.tsv",
           (f"{matrix.keys[r][0]}\t{matrix.keys[r][1]}\t{format_real(float(s))}\t{int(q)}\t{t}"
            for r, s, q, t in zip(rows, scores, rounded, truth)),
           _header(cfg, "eval", ("kb_id", "language", "score", "rounded", "label")))
    _write(d / "test_eval.tsv", rankeval.eval_lines(rankeval.EvalReport((result,))),
           _header(cfg, "eval", rankeval.EVAL_COLUMNS))
    return result


def ranked_path(cfg, language: str) -> Path:
    return cfg.out_dir / "ranked" / f"{language}.tsv"


def cmd_rank(cfg: PipelineConfig) -> dict[str, rankeval.RankedList]:
    matrix = load_matrix(cfg)
    weights = read_weights(_require(model_dir(cfg) / "weights.tsv", "weights (run `train` first)"))
    catalog, _ = ingest.parse_pages(_require(store_paths(cfg.out_dir)["pages"], "pages store"))
    scores = model.score_matrix(weights, matrix.normalized)
    by_lang: dict[str, list] = {}
    for (kb_id, lang), s in zip(matrix.keys, scores):
        by_lang.setdefault(lang, []).append((kb_id, catalog.get(kb_id, lang).title, float(s)))
    out = {}
    for lang in sorted(by_lang):
        ranked = rankeval.rank(by_lang[lang], lang).head(cfg.top_n)
        _write(ranked_path(cfg, lang), rankeval.ranked_lines(ranked),
               _header(cfg, "rank", ("rank", "kb_id", "title", "language", "score")))
        out[lang] = ranked
    return out


def read_ranked(path: Path) -> rankeval.RankedList:
    rows, lang = [], path.stem
    for r, kb_id, title, lang, s in _data_rows(path):
        rows.append(rankeval.RankedRow(int(r), kb_id, title, float(s)))
    return rankeval.RankedList(lang, tuple(rows))


def cmd_report(cfg: PipelineConfig) -> list[rankeval.TypeDistribution]:
    catalog, _ = ingest.parse_pages(_require(store_paths(cfg.out_dir)["pages"], "pages store"))
    files = sorted((cfg.out_dir / "ranked").glob("*.tsv"))
    if not files:
        raise StageError(f"no ranked lists under {cfg.out_dir / 'ranked'} (run `rank` first)")
    dists, lines = [], []
    for f in files:
        ranked = read_ranked(f)
        if not len(ranked):
            continue
        dist = rankeval.type_distribution(catalog, ranked, min(cfg.top_n, len(ranked)))
        dists.append(dist)
        lines.extend(rankeval.type_lines(dist))
    _write(cfg.out_dir / "report" / "type_distribution.tsv", lines,
           _header(cfg, "report", ("population", "entity_type", "fraction")))
    return dists


STAGES = {
    "ingest": cmd_ingest,
    "features": cmd_features,
    "train": cmd_train,
    "eval": cmd_eval,
    "rank": cmd_rank,
    "report": cmd_report,
}


def run_all(cfg: PipelineConfig) -> None:
    for fn in STAGES.values():
        fn(cfg)


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value settings file; flags override it")
    common.add_argument("--out", help="output directory (default: out)")
    for role in INPUT_ROLES:
        common.add_argument(f"--{role.replace('_', '-')}", dest=role, metavar="PATH")
    common.add_argument("--damping", type=float)
    common.add_argument("--pagerank-tol", type=float)
    common.add_argument("--pagerank-max-iters", type=int)
    common.add_argument("--seed", dest="split_seed", type=int)
    common.add_argument("--train-fraction", type=float)
    common.add_argument("--threshold", dest="positive_threshold", type=int)
    common.add_argument("--top-n", type=int)
    common.add_argument("--type-predicate")
    common.add_argument("--social-predicate")
    common.add_argument("--distinct-objects", action="store_const", const=True,
                        help="count distinct neighbours instead of triples")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="entrank", description="Multi-language entity importance ranking")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(STAGES) + ["all"]:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    values = read_config_file(args.config) if args.config else {}
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    cfg = PipelineConfig(**values)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "all":
            run_all(cfg)
        else:
            STAGES[args.command](cfg)
    except (StageError, ingest.IngestError, model.ModelError, rankeval.EvalError, OSError) as exc:
        print(f"entrank {args.command}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"entrank {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
