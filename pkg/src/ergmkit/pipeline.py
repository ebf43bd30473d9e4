"""End-to-end analysis runs.

Stage order: ingest, recode, scope selection (full network or largest
connected component), missing-data policy (complete cases, propensity
matching, or iterative forest imputation), model family fit, and
goodness-of-fit, with every table written as CSV + JSON. A run is a pure
function of (input files, config, seed): rerunning reproduces the output
bytes. On a stage failure the partial outputs stay on disk next to a
FAILED marker naming the stage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import Schema, load_network, load_schema
from .errors import ConfigError, ErgmkitError, UnknownLevel, UnmappedLabel
from .fit import FitResult, GofReport, ScreenReport, fit_mcmle, fit_mple, gof, screen_univariate
from .forest import ForestConfig
from .graph import (
    AttributeTable,
    CategoricalColumn,
    ContinuousColumn,
    Graph,
    induced_subgraph,
    largest_connected_component,
)
from .imputation import impute_missforest, impute_psm
from .model import (
    Edges,
    GwDegree,
    ModelSpec,
    NodeFactor,
    NodeMatch,
    NodeMix,
    TermSpec,
    compile_model,
    term_from_dict,
    term_to_dict,
)
from .netstats import network_summary
from .sampler import SamplerConfig

SCOPES = ("full", "lcc")
POLICIES = ("complete_case", "psm", "missforest")
FAMILIES = ("match", "factor", "mix", "final")


@dataclass(frozen=True)
class RecodeRule:
    """Total map from raw labels to analysis levels for one column."""

    column: str
    mapping: dict[str, str]
    target_levels: tuple[str, ...] | None = None


def recode(attrs: AttributeTable, rules: list[RecodeRule]) -> AttributeTable:
    """Collapse raw categorical levels into analysis levels.

    Every raw label observed in a ruled column must appear in the rule's
    mapping; unruled columns pass through unchanged.
    """
    by_col = {}
    for rule in rules:
        if rule.column in by_col:
            raise ConfigError(f"duplicate recode rule for {rule.column!r}")
        by_col[rule.column] = rule
    new_cols = []
    for col in attrs.columns():
        rule = by_col.get(col.name)
        if rule is None or not isinstance(col, CategoricalColumn):
            new_cols.append(col)
            continue
        mapped = []
        for raw in col.levels:
            if raw not in rule.mapping:
                raise UnmappedLabel(
                    f"column {col.name!r}: raw label {raw!r} has no recode target"
                )
            mapped.append(rule.mapping[raw])
        if rule.target_levels is not None:
            targets = list(rule.target_levels)
            for m in mapped:
                if m not in targets:
                    raise UnknownLevel(
                        f"column {col.name!r}: recode target {m!r} not declared"
                    )
        else:
            targets = list(dict.fromkeys(mapped))
        old_to_new = np.array([targets.index(m) for m in mapped], dtype=np.int64)
        codes = col.codes.copy()
        obs = codes >= 0
        codes[obs] = old_to_new[codes[obs]]
        new_cols.append(CategoricalColumn(col.name, tuple(targets), codes))
    return AttributeTable(new_cols)


def summarize_attributes(attrs: AttributeTable) -> dict:
    """Per-column counts/percentages, mean and SD for continuous columns."""
    n = attrs.n
    out: dict = {"n": n, "columns": {}}
    for col in attrs.columns():
        if isinstance(col, CategoricalColumn):
            rows = []
            for k, lev in enumerate(col.levels):
                count = int(np.sum(col.codes == k))
                rows.append(
                    {"level": lev, "count": count, "percent": 100.0 * count / n if n else 0.0}
                )
            miss = int(col.missing_mask().sum())
            rows.append(
                {"level": "Missing", "count": miss, "percent": 100.0 * miss / n if n else 0.0}
            )
            out["columns"][col.name] = {"type": "categorical", "rows": rows}
        else:
            obs = col.values[~col.missing_mask()]
            out["columns"][col.name] = {
                "type": "continuous",
                "mean": float(obs.mean()) if len(obs) else None,
                "sd": float(obs.std()) if len(obs) else None,
                "missing": int(col.missing_mask().sum()),
                "units": col.units,
            }
    return out


def attribute_summary_csv(summary: dict) -> str:
    lines = ["column,label,value1,value2"]
    for name, info in summary["columns"].items():
        if info["type"] == "categorical":
            for row in info["rows"]:
                lines.append(
                    f"{name},{row['level']},{row['count']},{repr(row['percent'])}"
                )
        else:
            mean = "" if info["mean"] is None else repr(info["mean"])
            sd = "" if info["sd"] is None else repr(info["sd"])
            lines.append(f"{name},mean_sd,{mean},{sd}")
            lines.append(f"{name},Missing,{info['missing']},")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunConfig:
    edges: str
    attributes: str
    schema: str
    scope: str = "full"
    missing_policy: str = "complete_case"
    family: str = "match"
    attributes_used: tuple[str, ...] = ()
    final_candidates: tuple[dict, ...] = ()
    gwdegree: float | None = None
    imputation_targets: tuple[str, ...] = ()
    imputation_covariates: tuple[str, ...] | None = None
    forest: ForestConfig = field(default_factory=ForestConfig)
    fit_method: str = "mple"
    sampler: SamplerConfig = field(default_factory=lambda: SamplerConfig(sample_count=512))
    gof_samples: int = 200
    gof_trace: bool = False
    screen_alpha: float = 0.2
    seed: int = 0
    out: str = "out"

    def __post_init__(self):
        if self.scope not in SCOPES:
            raise ConfigError(f"scope must be one of {SCOPES}")
        if self.missing_policy not in POLICIES:
            raise ConfigError(f"missing_policy must be one of {POLICIES}")
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}")
        if self.fit_method not in ("mple", "mcmle"):
            raise ConfigError("fit_method must be mple or mcmle")
        if self.gof_samples < 1:
            raise ConfigError("gof_samples must be >= 1")


def config_from_dict(d: dict, base: Path | None = None) -> RunConfig:
    def path(p):
        return str(base / p) if base is not None and not Path(p).is_absolute() else str(p)

    imp = d.get("imputation", {})
    fit = d.get("fit", {})
    sampler = SamplerConfig(
        burn_in=fit.get("burn_in"),
        thin=fit.get("thin"),
        sample_count=int(fit.get("samples", 512)),
        seed=int(d.get("seed", 0)),
    )
    try:
        return RunConfig(
            edges=path(d["edges"]),
            attributes=path(d["attributes"]),
            schema=path(d["schema"]),
            scope=d.get("scope", "full"),
            missing_policy=d.get("missing_policy", "complete_case"),
            family=d.get("family", "match"),
            attributes_used=tuple(d.get("attributes_used", ())),
            final_candidates=tuple(d.get("final_candidates", ())),
            gwdegree=d.get("gwdegree"),
            imputation_targets=tuple(imp.get("targets", ())),
            imputation_covariates=(
                tuple(imp["covariates"]) if "covariates" in imp else None
            ),
            forest=ForestConfig(
                trees=int(imp.get("trees", 100)),
                mtry=imp.get("mtry"),
                min_leaf=int(imp.get("min_leaf", 1)),
            ),
            fit_method=fit.get("method", "mple"),
            sampler=sampler,
            gof_samples=int(fit.get("gof_samples", 200)),
            gof_trace=bool(fit.get("trace", False)),
            screen_alpha=float(fit.get("screen_alpha", 0.2)),
            seed=int(d.get("seed", 0)),
            out=path(d.get("out", "out")),
        )
    except KeyError as exc:
        raise ConfigError(f"config missing required key {exc.args[0]!r}") from None


def load_config(path) -> RunConfig:
    p = Path(path)
    with open(p, encoding="utf-8") as fh:
        return config_from_dict(json.load(fh), base=p.parent)


def rules_from_schema(schema: Schema, attrs: AttributeTable) -> list[RecodeRule]:
    """One rule per declared categorical column: explicit map or identity."""
    rules = []
    for cs in schema.columns:
        if cs.kind != "categorical":
            continue
        mapping = dict(schema.recode.get(cs.name, {}))
        col = attrs[cs.name]
        if not isinstance(col, CategoricalColumn):
            continue
        for raw in col.levels:
            if raw not in mapping:
                if raw in cs.levels:
                    mapping[raw] = raw  # already an analysis level
                else:
                    raise UnmappedLabel(
                        f"column {cs.name!r}: raw label {raw!r} neither recoded "
                        f"nor a declared level"
                    )
        rules.append(RecodeRule(cs.name, mapping, target_levels=cs.levels))
    return rules


def build_family_terms(
    family: str,
    attributes_used: tuple[str, ...],
    schema: Schema,
    attrs: AttributeTable,
) -> list[TermSpec]:
    """Non-edges terms for the match, factor, or mix family."""
    terms: list[TermSpec] = []
    for name in attributes_used:
        col = attrs[name]
        if not isinstance(col, CategoricalColumn):
            raise ConfigError(f"modeled attribute {name!r} must be categorical")
        if family == "match":
            terms.append(NodeMatch(name, differential=True))
        elif family == "factor":
            ref = schema.reference_levels.get(name)
            if ref is None:
                raise ConfigError(f"no reference level declared for {name!r}")
            terms.append(NodeFactor(name, ref))
        elif family == "mix":
            pair = schema.reference_pairs.get(name)
            if pair is None:
                ref = schema.reference_levels.get(name)
                if ref is None:
                    raise ConfigError(f"no reference pair or level for {name!r}")
                pair = (ref, ref)
            terms.append(NodeMix(name, pair))
        else:
            raise ConfigError(f"family {family!r} has no direct term builder")
    return terms


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj]
    return obj


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _write_json(path: Path, obj) -> None:
    _write(path, json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


@dataclass
class RunReport:
    outdir: Path
    summary: dict
    fit: FitResult | None = None
    gof: GofReport | None = None
    screen: ScreenReport | None = None


def run(config: RunConfig, with_gof: bool = True) -> RunReport:
    """Execute the staged pipeline, writing every table under config.out."""
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    stage = "setup"
    summary: dict = {"stages": {}}
    report = RunReport(outdir=outdir, summary=summary)
    try:
        stage = "ingest"
        schema = load_schema(config.schema)
        g, raw_attrs, ids = load_network(config.edges, config.attributes, schema)
        summary["stages"]["ingest"] = {"nodes": g.n, "edges": g.edge_count}

        stage = "recode"
        rules = rules_from_schema(schema, raw_attrs)
        attrs = recode(raw_attrs, rules)

        stage = "scope"
        if config.scope == "lcc":
            g, attrs, keep = largest_connected_component(g, attrs)
            ids = [ids[k] for k in keep]
        summary["stages"]["scope"] = {
            "scope": config.scope,
            "nodes": g.n,
            "edges": g.edge_count,
        }

        stage = "netstats"
        ns = network_summary(g)
        _write(outdir / "network_summary.csv", ns.to_csv())
        _write(outdir / "network_summary.json", ns.to_json() + "\n")

        stage = "attribute_summary"
        attr_summary = summarize_attributes(attrs)
        _write_json(outdir / "attribute_summary.json", attr_summary)
        _write(outdir / "attribute_summary.csv", attribute_summary_csv(attr_summary))

        stage = "missing_policy"
        modeled = tuple(config.attributes_used)
        if config.family == "final" and config.final_candidates:
            modeled = tuple(
                dict.fromkeys(
                    [d["attr"] for d in config.final_candidates if "attr" in d]
                )
            )
        if config.missing_policy == "complete_case":
            drop_mask = np.zeros(attrs.n, dtype=bool)
            for name in modeled:
                drop_mask |= attrs[name].missing_mask()
            keep_idx = np.flatnonzero(~drop_mask)
            g = induced_subgraph(g, keep_idx)
            attrs = attrs.subset(keep_idx)
            ids = [ids[k] for k in keep_idx]
            summary["stages"]["missing_policy"] = {
                "policy": "complete_case",
                "dropped": int(drop_mask.sum()),
                "nodes": g.n,
                "edges": g.edge_count,
            }
        else:
            targets = list(config.imputation_targets)
            if not targets:
                targets = [
                    name for name in modeled if attrs[name].missing_mask().any()
                ]
            covs = (
                list(config.imputation_covariates)
                if config.imputation_covariates is not None
                else [c for c in attrs.names if c not in targets]
            )
            diag: dict = {"policy": config.missing_policy, "targets": targets}
            if targets:
                if config.missing_policy == "psm":
                    for t in targets:
                        res = impute_psm(attrs, t, covs, seed=config.seed)
                        attrs = res.completed
                        diag[t] = res.diagnostics
                else:
                    res = impute_missforest(
                        attrs, targets, covs, forest=config.forest, seed=config.seed
                    )
                    attrs = res.completed
                    diag["missforest"] = res.diagnostics
            _write_json(outdir / "imputation.json", diag)
            summary["stages"]["missing_policy"] = {
                "policy": config.missing_policy,
                "nodes": g.n,
                "edges": g.edge_count,
            }

        stage = "model"
        if config.family == "final":
            if config.final_candidates:
                candidates = [term_from_dict(d) for d in config.final_candidates]
            else:
                candidates = build_family_terms("match", modeled, schema, attrs)
            screen = screen_univariate(g, attrs, candidates, alpha=config.screen_alpha)
            report.screen = screen
            _write(outdir / "screen.json", screen.to_json() + "\n")
            terms = list(screen.selected)
        else:
            terms = build_family_terms(config.family, modeled, schema, attrs)
        model_terms: list[TermSpec] = [Edges()] + terms
        if config.gwdegree is not None:
            model_terms.append(GwDegree(float(config.gwdegree)))
        model = ModelSpec(model_terms)
        compile_model(model, attrs, g.n)  # fail here, not mid-fit
        _write_json(
            outdir / "model.json", {"terms": [term_to_dict(t) for t in model.terms]}
        )

        stage = "fit"
        if config.fit_method == "mcmle":
            fit_result = fit_mcmle(g, attrs, model, config.sampler)
        else:
            fit_result = fit_mple(g, attrs, model)
        report.fit = fit_result
        _write(outdir / f"fit_{config.family}.csv", fit_result.to_csv())
        _write(outdir / f"fit_{config.family}.json", fit_result.to_json() + "\n")

        if with_gof:
            stage = "gof"
            gof_cfg = SamplerConfig(
                burn_in=config.sampler.burn_in,
                thin=config.sampler.thin,
                sample_count=config.gof_samples,
                seed=config.seed + 1,
            )
            gof_report = gof(
                g,
                attrs,
                model,
                fit_result.theta,
                gof_cfg,
                trace_path=(outdir / "gof_trace.csv") if config.gof_trace else None,
            )
            report.gof = gof_report
            _write(outdir / "gof.csv", gof_report.to_csv())
            _write(outdir / "gof.json", gof_report.to_json() + "\n")
            summary["no_lack_of_fit"] = gof_report.no_lack_of_fit

        stage = "manifest"
        manifest = {
            "package": "ergmkit",
            "version": __version__,
            "numpy": np.__version__,
            "seed": config.seed,
            "scope": config.scope,
            "missing_policy": config.missing_policy,
            "family": config.family,
            "fit_method": config.fit_method,
            "stages": summary["stages"],
        }
        _write_json(outdir / "manifest.json", manifest)
        return report
    except Exception as exc:
        _write(outdir / "FAILED", f"stage: {stage}\nerror: {exc}\n")
        if isinstance(exc, ErgmkitError):
            raise
        raise ErgmkitError(f"stage {stage!r} failed: {exc}") from exc
