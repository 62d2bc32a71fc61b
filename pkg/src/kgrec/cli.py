"""Stage-by-stage command line front-end.

Every stage reads its inputs from the working directory named in the config,
writes one artifact there and prints a one-line JSON summary to stdout::

    kgrec fuse --config fixture/config.json
    kgrec build-kg --config fixture/config.json
    kgrec detach --config fixture/config.json
    kgrec train-transe --config fixture/config.json
    kgrec fit-tfidf --config fixture/config.json
    kgrec recommend --config fixture/config.json --movie filimo-003 --k 10
    kgrec optimize --config fixture/config.json
    kgrec evaluate --config fixture/config.json
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from . import _backend
from .corpus import FusionConfig, dump_records, fuse, parse_records
from .evaluation import OpinionDataset, evaluate_system, relevance_from_opinions
from .ga import GaConfig, load_reference, optimize
from .kg import KnowledgeGraph, build_graph, extract_subgraph, graph_stats, movie_uri
from .recommender import FeatureWeights, SimilarityTable, build_feature_vectors, dump_recommendations, record_text
from .tfidf import TF_MODES, TfidfModel, fit, tokenize
from .transe import TransEConfig, TransEModel, train

ARTIFACTS = {
    "fused": ("fused.json", "fuse"),
    "kg": ("kg.ndjson", "build-kg"),
    "movie_kg": ("movie_kg.ndjson", "detach"),
    "transe": ("transe.json", "train-transe"),
    "tfidf": ("tfidf.json", "fit-tfidf"),
    "recommendations": ("recommendations.json", "recommend"),
    "weights": ("weights.json", "optimize"),
    "eval": ("eval.json", "evaluate"),
}


class ConfigError(Exception):
    def __init__(self, errors: list[str]):
        super().__init__("invalid config:\n  " + "\n  ".join(errors))
        self.errors = errors


class MissingArtifact(Exception):
    pass


@dataclass
class PipelineConfig:
    workdir: Path
    sources: list[tuple[str, Path]]
    seed_graph: Path | None = None
    reference: Path | None = None
    opinions: Path | None = None
    fusion: FusionConfig = field(default_factory=FusionConfig)
    transe: TransEConfig = field(default_factory=TransEConfig)
    tf_mode: str = "max_freq"
    ga: GaConfig = field(default_factory=GaConfig)
    k: int = 10
    hops: int = 2
    opinion_threshold: float = 0.5

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError([f"config: file {path} does not exist"])
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config: malformed JSON ({exc})"]) from None
        return cls.from_dict(raw, base=path.parent)

    @classmethod
    def from_dict(cls, raw: dict[str, Any], base: Path = Path(".")) -> "PipelineConfig":
        errors: list[str] = []
        known = {"workdir", "sources", "seed_graph", "reference", "opinions", "fusion", "detach",
                 "transe", "tfidf", "ga", "recommend", "evaluate"}
        errors += [f"{k}: unknown field" for k in raw if k not in known]

        def resolve(key: str, required: bool = False) -> Path | None:
            value = raw.get(key)
            if value is None:
                if required:
                    errors.append(f"{key}: required")
                return None
            p = Path(value)
            p = p if p.is_absolute() else base / p
            if key != "workdir" and not p.exists():
                errors.append(f"{key}: file {p} does not exist")
            return p

        workdir = resolve("workdir", required=True)
        seed_graph = resolve("seed_graph")
        reference = resolve("reference")
        opinions = resolve("opinions")

        sources: list[tuple[str, Path]] = []
        raw_sources = raw.get("sources")
        if not isinstance(raw_sources, list) or not raw_sources:
            errors.append("sources: must be a non-empty list of {name, path}")
        else:
            for i, item in enumerate(raw_sources):
                if not isinstance(item, dict) or "name" not in item or "path" not in item:
                    errors.append(f"sources[{i}]: needs name and path")
                    continue
                p = Path(item["path"])
                p = p if p.is_absolute() else base / p
                if not p.exists():
                    errors.append(f"sources[{i}].path: file {p} does not exist")
                sources.append((str(item["name"]), p))

        def section(name: str, klass, require_seed: bool = False):
            data = raw.get(name, {})
            if not isinstance(data, dict):
                errors.append(f"{name}: must be an object")
                return klass()
            names = {f.name for f in fields(klass)}
            errors.extend(f"{name}.{k}: unknown field" for k in data if k not in names)
            if require_seed and "seed" not in data:
                errors.append(f"{name}.seed: required (no implicit seeds)")
            obj = klass(**{k: v for k, v in data.items() if k in names})
            try:
                errors.extend(f"{name}.{e}" for e in obj.validate())
            except TypeError as exc:
                errors.append(f"{name}: wrongly typed value ({exc})")
            return obj

        fusion = section("fusion", FusionConfig)
        if not fusion.source_precedence:
            fusion.source_precedence = [s for s, _ in sources]
        transe = section("transe", TransEConfig, require_seed=True)
        ga = section("ga", GaConfig, require_seed=True)

        def scalar(sec: str, key: str, default, check, message):
            data = raw.get(sec, {})
            value = data.get(key, default) if isinstance(data, dict) else default
            if isinstance(data, dict):
                errors.extend(f"{sec}.{k}: unknown field" for k in data if k != key)
            if not check(value):
                errors.append(f"{sec}.{key}: {message}, got {value!r}")
            return value

        tf_mode = scalar("tfidf", "tf_mode", "max_freq", lambda v: v in TF_MODES, f"must be one of {TF_MODES}")
        k = scalar("recommend", "k", 10, lambda v: isinstance(v, int) and v >= 1, "must be a positive integer")
        hops = scalar("detach", "hops", 2, lambda v: isinstance(v, int) and v >= 0, "must be a non-negative integer")
        theta = scalar("evaluate", "opinion_threshold", 0.5,
                       lambda v: isinstance(v, (int, float)) and 0 < v <= 1, "must be in (0, 1]")
        if errors:
            raise ConfigError(errors)
        return cls(workdir, sources, seed_graph, reference, opinions, fusion, transe, tf_mode, ga, k, hops, theta)

    def artifact(self, key: str) -> Path:
        return self.workdir / ARTIFACTS[key][0]

    def require(self, *keys: str) -> None:
        missing = [ARTIFACTS[k] for k in keys if not self.artifact(k).exists()]
        if missing:
            parts = [f"{name} (run `{stage}` first)" for name, stage in missing]
            raise MissingArtifact(f"missing in {self.workdir}: " + ", ".join(parts))


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _load_fused(cfg: PipelineConfig):
    cfg.require("fused")
    return parse_records(cfg.artifact("fused").read_bytes())


def _load_vectors(cfg: PipelineConfig):
    cfg.require("fused", "movie_kg", "transe", "tfidf")
    records = _load_fused(cfg)
    g = KnowledgeGraph.from_ndjson(cfg.artifact("movie_kg").read_text(encoding="utf-8"))
    model = TransEModel.load(cfg.artifact("transe"))
    tfidf = TfidfModel.from_json(cfg.artifact("tfidf").read_text(encoding="utf-8"))
    return build_feature_vectors(records, tfidf, model, g)


def _resolve_weights(cfg: PipelineConfig, choice: str) -> tuple[FeatureWeights, str]:
    if choice == "uniform":
        return FeatureWeights(), "uniform"
    if choice in ("optimized", "auto"):
        path = cfg.artifact("weights")
        if path.exists():
            obj = json.loads(path.read_text(encoding="utf-8"))
            return FeatureWeights(**obj["best_weights"]), "optimized"
        if choice == "optimized":
            cfg.require("weights")
        return FeatureWeights(), "uniform"
    return FeatureWeights.from_sequence(float(x) for x in choice.split(",")), "explicit"


def cmd_fuse(cfg: PipelineConfig, args) -> dict:
    per_source = [parse_records(path.read_bytes(), source=name) for name, path in cfg.sources]
    fused = fuse(per_source, cfg.fusion)
    _write(cfg.artifact("fused"), dump_records(fused))
    return {"records_in": sum(len(s) for s in per_source), "records_out": len(fused),
            "output": str(cfg.artifact("fused"))}


def cmd_build_kg(cfg: PipelineConfig, args) -> dict:
    records = _load_fused(cfg)
    seed = None
    if cfg.seed_graph is not None:
        seed = KnowledgeGraph.from_ndjson(cfg.seed_graph.read_text(encoding="utf-8"))
    g = build_graph(records, seed)
    _write(cfg.artifact("kg"), g.to_ndjson())
    triples, entities, relations = graph_stats(g)
    return {"triples": triples, "entities": entities, "relations": relations, "output": str(cfg.artifact("kg"))}


def cmd_detach(cfg: PipelineConfig, args) -> dict:
    cfg.require("kg")
    records = _load_fused(cfg)
    g = KnowledgeGraph.from_ndjson(cfg.artifact("kg").read_text(encoding="utf-8"))
    seeds = [g.entity_id(movie_uri(r.id)) for r in records if g.has_entity(movie_uri(r.id))]
    sub = extract_subgraph(g, seeds, cfg.hops)
    _write(cfg.artifact("movie_kg"), sub.to_ndjson())
    triples, entities, relations = graph_stats(sub)
    return {"seeds": len(seeds), "hops": cfg.hops, "triples": triples, "entities": entities,
            "relations": relations, "output": str(cfg.artifact("movie_kg"))}


def cmd_train_transe(cfg: PipelineConfig, args) -> dict:
    cfg.require("movie_kg")
    g = KnowledgeGraph.from_ndjson(cfg.artifact("movie_kg").read_text(encoding="utf-8"))
    model, history = train(g, cfg.transe)
    model.save(cfg.artifact("transe"))
    _write(cfg.workdir / "transe_loss.json", json.dumps(history) + "\n")
    return {"epochs": len(history), "first_loss": history[0] if history else None,
            "final_loss": history[-1] if history else None, "output": str(cfg.artifact("transe"))}


def cmd_fit_tfidf(cfg: PipelineConfig, args) -> dict:
    records = _load_fused(cfg)
    model = fit((tokenize(record_text(r)) for r in records), cfg.tf_mode)
    _write(cfg.artifact("tfidf"), model.to_json())
    return {"documents": model.num_docs, "terms": model.num_terms, "output": str(cfg.artifact("tfidf"))}


def cmd_recommend(cfg: PipelineConfig, args) -> dict:
    vectors = _load_vectors(cfg)
    weights, source = _resolve_weights(cfg, args.weights)
    k = args.k or cfg.k
    if args.movie is not None:
        if args.movie not in vectors:
            raise KeyError(f"unknown movie {args.movie!r}")
        rec = SimilarityTable(vectors, [args.movie]).recommend(args.movie, k, weights)
        print(json.dumps(rec.to_dict()["recommendations"], ensure_ascii=False))
        return {"movie": args.movie, "k": k, "returned": len(rec.entries), "weights": source}
    table = SimilarityTable(vectors, list(vectors))
    lists = [table.recommend(m, k, weights) for m in vectors]
    _write(cfg.artifact("recommendations"), dump_recommendations(lists))
    return {"movies": len(lists), "k": k, "weights": source, "output": str(cfg.artifact("recommendations"))}


def _reference(cfg: PipelineConfig, vectors) -> dict[str, list[str]]:
    if cfg.reference is None:
        raise MissingArtifact("config has no `reference` file")
    ref = load_reference(cfg.reference.read_text(encoding="utf-8"))
    return {m: [x for x in items if x in vectors] for m, items in ref.items() if m in vectors}


def cmd_optimize(cfg: PipelineConfig, args) -> dict:
    vectors = _load_vectors(cfg)
    ref = {m: v for m, v in _reference(cfg, vectors).items() if v}
    result = optimize(list(ref), ref, vectors, cfg.ga)
    _write(cfg.artifact("weights"), json.dumps(result.to_dict(cfg.ga), ensure_ascii=False, indent=2) + "\n")
    return {"training_movies": len(ref), "generations": len(result.trace), "best_fitness": result.best_fitness,
            "output": str(cfg.artifact("weights"))}


def cmd_evaluate(cfg: PipelineConfig, args) -> dict:
    vectors = _load_vectors(cfg)
    weights, source = _resolve_weights(cfg, args.weights)
    table = SimilarityTable(vectors)
    ref = {m: v for m, v in _reference(cfg, vectors).items() if v}
    out: dict[str, Any] = {"weights": weights.to_dict(), "weights_source": source}
    out["reference"] = evaluate_system(table, weights, ref).to_dict()
    out["text_only_baseline"] = evaluate_system(table, FeatureWeights(1, 0, 0, 0, 0), ref).to_dict()
    if cfg.opinions is not None:
        ds = OpinionDataset.from_json(cfg.opinions.read_text(encoding="utf-8"))
        human = {m: [x for x in v if x in vectors]
                 for m, v in relevance_from_opinions(ds, cfg.opinion_threshold).items() if m in vectors}
        human = {m: v for m, v in human.items() if v}
        out["opinions"] = evaluate_system(table, weights, human).to_dict()
    _write(cfg.artifact("eval"), json.dumps(out, ensure_ascii=False, indent=2) + "\n")
    summary = {"weights": source, "mean_precision": out["reference"]["mean_precision"],
               "mean_recall": out["reference"]["mean_recall"], "mean_f1": out["reference"]["mean_f1"],
               "coverage": out["reference"]["coverage"], "output": str(cfg.artifact("eval"))}
    if "opinions" in out:
        summary["opinion_mean_f1"] = out["opinions"]["mean_f1"]
    return summary


STAGES = {
    "fuse": cmd_fuse,
    "build-kg": cmd_build_kg,
    "detach": cmd_detach,
    "train-transe": cmd_train_transe,
    "fit-tfidf": cmd_fit_tfidf,
    "recommend": cmd_recommend,
    "optimize": cmd_optimize,
    "evaluate": cmd_evaluate,
}
PIPELINE_ORDER = ["fuse", "build-kg", "detach", "train-transe", "fit-tfidf", "optimize", "recommend", "evaluate"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgrec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s 0.1.0 ({_backend.name} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fuse": "merge per-source record files into fused.json",
        "build-kg": "insert fused records into the (seed) knowledge graph",
        "detach": "extract the k-hop movie subgraph",
        "train-transe": "train TransE embeddings on the movie subgraph",
        "fit-tfidf": "fit TF-IDF over title + storyline",
        "recommend": "top-k recommendations for one movie or all movies",
        "optimize": "search feature weights with the genetic algorithm",
        "evaluate": "precision, recall, F1 and coverage against reference lists",
        "pipeline": "run every stage in order",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", required=True, help="pipeline config JSON")
        if name in ("recommend", "evaluate", "pipeline"):
            p.add_argument("--weights", default="auto",
                           help="auto | uniform | optimized | five comma-separated weights")
        if name == "recommend":
            p.add_argument("--movie", help="target movie id; prints its list on stdout")
            p.add_argument("--k", type=int, help="list length (default from config)")
    fx = sub.add_parser("make-fixture", help="write the synthetic fixture corpus and config")
    fx.add_argument("directory")
    fx.add_argument("--movies", type=int, default=40)
    fx.add_argument("--seed", type=int, default=7)
    return parser


def _run_stage(name: str, cfg: PipelineConfig, args) -> dict:
    start = time.perf_counter()
    summary = STAGES[name](cfg, args)
    return {"stage": name, **summary, "elapsed_s": round(time.perf_counter() - start, 3)}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "make-fixture":
        from .synthetic import write_pipeline_fixture

        path = write_pipeline_fixture(args.directory, n_movies=args.movies, seed=args.seed)
        print(json.dumps({"stage": "make-fixture", "config": str(path)}, ensure_ascii=False))
        return 0
    try:
        cfg = PipelineConfig.load(args.config)
        if args.command == "pipeline":
            for name in PIPELINE_ORDER:
                stage_args = argparse.Namespace(weights=args.weights, movie=None, k=None)
                print(json.dumps(_run_stage(name, cfg, stage_args), ensure_ascii=False), flush=True)
            return 0
        summary = _run_stage(args.command, cfg, args)
    except ConfigError as exc:
        print(f"kgrec: {exc}", file=sys.stderr)
        return 2
    except MissingArtifact as exc:
        print(f"kgrec {args.command}: {exc}", file=sys.stderr)
        return 3
    except (KeyError, ValueError) as exc:
        print(f"kgrec {args.command}: {exc}", file=sys.stderr)
        return 1
    stream = sys.stderr if args.command == "recommend" and args.movie is not None else sys.stdout
    print(json.dumps(summary, ensure_ascii=False), file=stream)
    return 0


if __name__ == "__main__":
    sys.exit(main())
