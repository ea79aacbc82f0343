"""Command-line interface.

Subcommands: ``ingest``, ``assess``, ``fit``, ``levels``, ``equivalent``,
``sensitivity`` and ``report`` (the whole pipeline). Global flags ``--seed``,
``--out-dir`` and ``--config`` may appear before or after the subcommand.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .bayes import PRIOR_MENU, ChainConfig, ParameterEnsemble, mh_sample, resolve_prior
from .errors import NumericalError, ValidationError
from .gev import ModelStructure
from .hazard import (
    CURVE_COLUMNS,
    DEFAULT_PERIODS,
    CovariateRef,
    equivalent_return_period,
    return_curve,
    return_level_ensemble,
    summary_dict,
    survival_function,
)
from .ingest import (
    AlignedDataset,
    align,
    load_annual_maxima,
    load_dataset,
    load_monthly_index,
    load_station_meta,
    seasonal_mean_covariate,
)
from .stattests import assess_nonstationarity
from .uq import anova_effects, decompose, derive_seed, grid_cells, grid_from_ensembles, run_cells

logger = logging.getLogger("floodbayes")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
STRUCTURES = ("stationary", "nonstationary")


@dataclass
class RunConfig:
    stage: str | None = None
    index: str | None = None
    meta: str | None = None
    dataset: str | None = None
    ensemble: str | None = None
    stationary_ensemble: str | None = None
    months: str = "6:11"
    alpha: float = 0.05
    prior: str = "gauss-wide"
    priors: list = field(default_factory=lambda: list(PRIOR_MENU))
    structure: str = "auto"
    structures: list = field(default_factory=lambda: list(STRUCTURES))
    iterations: int = 100_000
    burn_in: int = 10_000
    periods: list = field(default_factory=lambda: list(DEFAULT_PERIODS))
    period: float = 100.0
    covariate_ref: str = "last_year"
    mass: float = 0.9
    measures: list = field(default_factory=lambda: ["range", "variance"])
    scenarios: int = 1000
    stride: int = 1
    workers: int = 1
    stationary_level: float | None = None
    seed: int | None = None
    out_dir: str = "."
    out: str | None = None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValidationError(f"{path}: unknown config keys {unknown}")
        return cls(**doc)

    def months_window(self) -> tuple[int, int]:
        try:
            a, b = (int(v) for v in str(self.months).split(":"))
        except ValueError:
            raise ValidationError(f"--months expects START:END, got {self.months!r}") from None
        return a, b

    def chain(self, seed: int) -> ChainConfig:
        return ChainConfig(seed=seed, iterations=int(self.iterations), burn_in=int(self.burn_in))

    def require_seed(self) -> int:
        if self.seed is None:
            raise ValidationError("an explicit --seed is required for sampling commands")
        return int(self.seed)

    def require_files(self, *names: str) -> None:
        for name in names:
            value = getattr(self, name)
            if value is None:
                raise ValidationError(f"--{name.replace('_', '-')} is required")
            if not Path(value).is_file():
                raise ValidationError(f"file not found: {value}")


def _csv_list(text: str, cast=str) -> list:
    try:
        return [cast(v.strip()) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from None


def _float_list(text):
    return _csv_list(text, float)


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--seed", type=int, help="base seed (required for sampling)", **kw)
    p.add_argument("--out-dir", dest="out_dir", help="output directory", **kw)
    p.add_argument("--config", help="JSON run configuration", **kw)
    p.add_argument("-v", "--verbose", action="store_true", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floodbayes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"floodbayes {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def add(name, help_):
        p = sub.add_parser(name, help=help_, argument_default=S)
        _global_flags(p, suppress=True)
        return p

    p = add("ingest", "validate and align stage + monthly index into a dataset JSON")
    p.add_argument("--stage")
    p.add_argument("--index")
    p.add_argument("--meta")
    p.add_argument("--months", help="inclusive month window START:END (default 6:11)")
    p.add_argument("--out")

    p = add("assess", "change-point and trend screening")
    p.add_argument("--dataset")
    p.add_argument("--stage")
    p.add_argument("--alpha", type=float)
    p.add_argument("--out")

    p = add("fit", "Metropolis-Hastings posterior sampling for one prior/structure")
    p.add_argument("--dataset")
    p.add_argument("--prior", choices=list(PRIOR_MENU))
    p.add_argument("--structure", choices=["auto", *STRUCTURES])
    p.add_argument("--alpha", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--stride", type=int, help="thinning stride for the exported ensemble")
    p.add_argument("--out")

    p = add("levels", "return-level curve and survival function from an ensemble")
    p.add_argument("--dataset")
    p.add_argument("--ensemble")
    p.add_argument("--periods", type=_float_list)
    p.add_argument("--period", type=float, help="period for the survival function (default 100)")
    p.add_argument("--covariate-ref", dest="covariate_ref")
    p.add_argument("--mass", type=float)
    p.add_argument("--out")

    p = add("equivalent", "nonstationary return period of a stationary design level")
    p.add_argument("--dataset")
    p.add_argument("--ensemble", help="nonstationary ensemble")
    p.add_argument("--stationary-level", dest="stationary_level", type=float)
    p.add_argument("--stationary-ensemble", dest="stationary_ensemble")
    p.add_argument("--period", type=float)
    p.add_argument("--covariate-ref", dest="covariate_ref")
    p.add_argument("--out")

    p = add("sensitivity", "prior/structure/parameter uncertainty decomposition")
    p.add_argument("--dataset")
    p.add_argument("--priors", type=lambda t: _csv_list(t))
    p.add_argument("--structures", type=lambda t: _csv_list(t))
    p.add_argument("--periods", type=_float_list)
    p.add_argument("--measure", dest="measures", action="append", choices=["range", "variance"])
    p.add_argument("--scenarios", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--covariate-ref", dest="covariate_ref")
    p.add_argument("--workers", type=int)

    p = add("report", "full pipeline: ingest, assess, fit every cell, levels, equivalent, sensitivity")
    p.add_argument("--stage")
    p.add_argument("--index")
    p.add_argument("--meta")
    p.add_argument("--months")
    p.add_argument("--alpha", type=float)
    p.add_argument("--priors", type=lambda t: _csv_list(t))
    p.add_argument("--periods", type=_float_list)
    p.add_argument("--period", type=float)
    p.add_argument("--measure", dest="measures", action="append", choices=["range", "variance"])
    p.add_argument("--scenarios", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--covariate-ref", dest="covariate_ref")
    p.add_argument("--stride", type=int)
    p.add_argument("--workers", type=int)
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Defaults, overridden by ``--config``, overridden by explicit flags."""
    args = vars(ns).copy()
    args.pop("command", None)
    args.pop("verbose", None)
    cfg_path = args.pop("config", None)
    cfg = RunConfig.from_file(cfg_path) if cfg_path else RunConfig()
    overrides = {k: v for k, v in args.items() if v is not None}
    if ns.command == "report" and "stride" not in overrides and not cfg_path:
        overrides["stride"] = 10
    return replace(cfg, **overrides)


# ---------------------------------------------------------------- outputs


class Outputs:
    """Collects output documents and writes them only after all work succeeded."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str, path: str | None = None) -> None:
        self.files[path or str(self.out_dir / name)] = text

    def add_json(self, name: str, doc, path: str | None = None) -> None:
        self.add(name, json.dumps(doc, indent=1, sort_keys=False) + "\n", path)

    def write(self) -> list[str]:
        for path, text in self.files.items():
            p = Path(path)
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="utf-8")
        return list(self.files)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _curve_csv(curve) -> str:
    return _csv_text(CURVE_COLUMNS, ([r[c] for c in CURVE_COLUMNS] for r in curve.rows()))


def _survival_csv(points) -> str:
    return _csv_text(("level", "survival"), points)


def _rel(path: str, out_dir: Path) -> str:
    try:
        return str(Path(path).relative_to(out_dir))
    except ValueError:
        return str(path)


def _update_manifest(outputs: Outputs, cfg: RunConfig, stage: str, extra: dict | None = None) -> None:
    out_dir = outputs.out_dir
    path = out_dir / "manifest.json"
    manifest = {"tool": "floodbayes", "version": __version__, "config": None, "stages": {}}
    if path.is_file():
        try:
            manifest = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            pass
    cfg_echo = asdict(cfg)
    cfg_echo.pop("out_dir", None)
    manifest["config"] = cfg_echo
    manifest.setdefault("stages", {})[stage] = {
        "files": sorted(_rel(p, out_dir) for p in outputs.files),
        **(extra or {}),
    }
    outputs.add_json("manifest.json", manifest)


# ---------------------------------------------------------------- stages


def _ingest(cfg: RunConfig) -> AlignedDataset:
    cfg.require_files("stage", "index")
    start, end = cfg.months_window()
    meta = load_station_meta(cfg.meta) if cfg.meta else None
    series = load_annual_maxima(cfg.stage, meta=meta)
    cov = seasonal_mean_covariate(load_monthly_index(cfg.index), start, end)
    return align(series, cov, covariate_months=f"{start}:{end}", covariate_warnings=list(cov.warnings))


def _dataset(cfg: RunConfig) -> AlignedDataset:
    if cfg.dataset:
        cfg.require_files("dataset")
        return load_dataset(cfg.dataset)
    return _ingest(cfg)


def _structures_for(cfg: RunConfig, dataset) -> ModelStructure:
    if cfg.structure == "auto":
        return ModelStructure.parse(assess_nonstationarity(dataset, cfg.alpha).recommended_structure)
    return ModelStructure.parse(cfg.structure)


def _cell_index(cfg: RunConfig, prior: str, structure: ModelStructure) -> int:
    priors = [resolve_prior(p).name for p in cfg.priors]
    structures = [ModelStructure.parse(s) for s in cfg.structures]
    name = resolve_prior(prior).name
    if name in priors and structure in structures:
        return priors.index(name) * len(structures) + structures.index(structure)
    return 0


def _chain_record(ens: ParameterEnsemble) -> dict:
    return {
        "prior": ens.prior.name if ens.prior else None,
        "structure": ens.structure.value,
        "seed": ens.config.seed if ens.config else None,
        "n_samples": len(ens),
        "acceptance_rate": ens.acceptance_rate,
        "warnings": list(ens.warnings),
    }


def _load_ensemble(path) -> ParameterEnsemble:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"file not found: {path}")
    try:
        return ParameterEnsemble.from_dict(json.loads(p.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, KeyError) as exc:
        raise ValidationError(f"{path}: not an ensemble document ({exc})") from None


def _sensitivity_docs(ensembles, cfg: RunConfig, dataset) -> tuple[list, dict]:
    n_priors, n_structures = len(cfg.priors), len(cfg.structures)
    ref = CovariateRef.parse(cfg.covariate_ref)
    rows, detail = [], {"covariate_ref": ref.describe(), "periods": {}}
    for T in cfg.periods:
        grid = grid_from_ensembles(ensembles, n_priors, n_structures, T, ref, dataset, cfg.scenarios)
        per = {}
        for measure in cfg.measures:
            dec = decompose(grid, measure)
            per[measure] = dec.to_dict()
            for src, ind, share in zip(dec.source_names, dec.individual, dec.shares()):
                rows.append((float(T), measure, src, float(ind), float(share)))
        if "variance" in cfg.measures:
            eff = anova_effects(grid)
            per["anova"] = {
                "grand_mean": eff.grand_mean,
                "main": dict(zip(grid.source_names, eff.main)),
                "interactions": {
                    "x".join(grid.source_names[i] for i in k): v for k, v in eff.interactions.items()
                },
            }
        detail["periods"][repr(float(T))] = per
    return rows, detail


def cmd_ingest(cfg: RunConfig) -> int:
    ds = _ingest(cfg)
    out = Outputs(cfg.out_dir)
    out.add_json("dataset.json", ds.to_dict(), cfg.out)
    _update_manifest(out, cfg, "ingest", {"n_years": len(ds)})
    out.write()
    print(f"dataset: {len(ds)} years {int(ds.years[0])}-{int(ds.years[-1])}")
    return EXIT_OK


def cmd_assess(cfg: RunConfig) -> int:
    if cfg.dataset:
        values = _dataset(cfg)
    else:
        cfg.require_files("stage")
        values = load_annual_maxima(cfg.stage)
    report = assess_nonstationarity(values, cfg.alpha).to_dict()
    text = json.dumps(report, indent=1) + "\n"
    sys.stdout.write(text)
    if cfg.out:
        out = Outputs(cfg.out_dir)
        out.add("assessment.json", text, cfg.out)
        out.write()
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    base = cfg.require_seed()
    ds = _dataset(cfg)
    structure = _structures_for(cfg, ds)
    prior = resolve_prior(cfg.prior)
    seed = derive_seed(base, "fit", _cell_index(cfg, cfg.prior, structure))
    ens = mh_sample(ds, structure, prior, cfg.chain(seed))
    out = Outputs(cfg.out_dir)
    name = f"ensemble_{prior.name}_{structure.value}.json"
    out.add_json(name, ens.to_dict(stride=cfg.stride), cfg.out)
    _update_manifest(out, cfg, f"fit:{prior.name}:{structure.value}", {"chains": [_chain_record(ens)]})
    out.write()
    print(f"{name}: {len(ens)} samples, acceptance {ens.acceptance_rate:.3f}")
    return EXIT_OK


def cmd_levels(cfg: RunConfig) -> int:
    ds = _dataset(cfg)
    cfg.require_files("ensemble")
    ens = _load_ensemble(cfg.ensemble)
    ref = CovariateRef.parse(cfg.covariate_ref)
    curve = return_curve(ens, cfg.periods, ref, ds, cfg.mass)
    dist = return_level_ensemble(ens, cfg.period, ref, ds, cfg.mass)
    out = Outputs(cfg.out_dir)
    stem = Path(cfg.ensemble).stem.replace("ensemble_", "")
    out.add(f"levels_{stem}.csv", _curve_csv(curve), cfg.out)
    out.add(f"survival_{stem}_T{cfg.period:g}.csv", _survival_csv(survival_function(dist.levels)))
    _update_manifest(out, cfg, f"levels:{stem}")
    out.write()
    sys.stdout.write(_curve_csv(curve))
    return EXIT_OK


def cmd_equivalent(cfg: RunConfig) -> int:
    ds = _dataset(cfg)
    cfg.require_files("ensemble")
    ns = _load_ensemble(cfg.ensemble)
    ref = CovariateRef.parse(cfg.covariate_ref)
    if cfg.stationary_level is not None:
        level = float(cfg.stationary_level)
    elif cfg.stationary_ensemble:
        cfg.require_files("stationary_ensemble")
        level = return_level_ensemble(_load_ensemble(cfg.stationary_ensemble), cfg.period, ref, ds).expected
    else:
        raise ValidationError("give --stationary-level or --stationary-ensemble")
    t_eq = equivalent_return_period(level, ns, ref, ds)
    doc = {"stationary_level": level, "reference_period": cfg.period, "covariate_ref": ref.describe(),
           "equivalent_return_period": t_eq if np.isfinite(t_eq) else "inf"}
    text = json.dumps(doc, indent=1) + "\n"
    sys.stdout.write(text)
    out = Outputs(cfg.out_dir)
    out.add("equivalent.json", text, cfg.out)
    _update_manifest(out, cfg, "equivalent")
    out.write()
    return EXIT_OK


def cmd_sensitivity(cfg: RunConfig) -> int:
    base = cfg.require_seed()
    ds = _dataset(cfg)
    _validate_grid_config(cfg)
    ensembles = run_cells(ds, cfg.priors, cfg.structures, cfg.chain(base), cfg.workers)
    rows, detail = _sensitivity_docs(ensembles, cfg, ds)
    out = Outputs(cfg.out_dir)
    out.add("sensitivity.csv", _csv_text(("period", "measure", "source", "individual", "share"), rows))
    out.add_json("sensitivity.json", detail)
    _update_manifest(out, cfg, "sensitivity", {"chains": [_chain_record(e) for e in ensembles]})
    out.write()
    sys.stdout.write(_csv_text(("period", "measure", "source", "individual", "share"), rows))
    return EXIT_OK


def _validate_grid_config(cfg: RunConfig) -> None:
    grid_cells(cfg.priors, cfg.structures)
    CovariateRef.parse(cfg.covariate_ref)
    if cfg.scenarios < 1 or cfg.scenarios > cfg.iterations - cfg.burn_in:
        raise ValidationError("--scenarios must be between 1 and the retained chain length")
    for m in cfg.measures:
        if m not in ("range", "variance"):
            raise ValidationError(f"unknown measure {m!r}")


def cmd_report(cfg: RunConfig) -> int:
    base = cfg.require_seed()
    ds = _ingest(cfg)
    _validate_grid_config(cfg)
    ref = CovariateRef.parse(cfg.covariate_ref)
    out = Outputs(cfg.out_dir)
    out.add_json("dataset.json", ds.to_dict())

    assessment = assess_nonstationarity(ds, cfg.alpha)
    out.add_json("assessment.json", assessment.to_dict())

    ensembles = run_cells(ds, cfg.priors, cfg.structures, cfg.chain(base), cfg.workers)
    n_struct = len(cfg.structures)
    levels_summary = {}
    for ens in ensembles:
        stem = f"{ens.prior.name}_{ens.structure.value}"
        out.add_json(f"ensemble_{stem}.json", ens.to_dict(stride=cfg.stride))
        curve = return_curve(ens, cfg.periods, ref, ds, cfg.mass)
        out.add(f"levels_{stem}.csv", _curve_csv(curve))
        dist = return_level_ensemble(ens, cfg.period, ref, ds, cfg.mass)
        out.add(f"survival_{stem}_T{cfg.period:g}.csv", _survival_csv(survival_function(dist.levels)))
        levels_summary[stem] = summary_dict(dist)

    equivalents = {}
    structures = [ModelStructure.parse(s) for s in cfg.structures]
    if set(structures) == {ModelStructure.STATIONARY, ModelStructure.NONSTATIONARY}:
        for i in range(len(cfg.priors)):
            cell = {e.structure: e for e in ensembles[i * n_struct:(i + 1) * n_struct]}
            st, ns = cell[ModelStructure.STATIONARY], cell[ModelStructure.NONSTATIONARY]
            level = return_level_ensemble(st, cfg.period, ref, ds).expected
            t_eq = equivalent_return_period(level, ns, ref, ds)
            equivalents[st.prior.name] = {
                "stationary_level": level,
                "reference_period": cfg.period,
                "equivalent_return_period": t_eq if np.isfinite(t_eq) else "inf",
            }
    out.add_json("equivalent.json", {"covariate_ref": ref.describe(), "by_prior": equivalents})

    rows, detail = _sensitivity_docs(ensembles, cfg, ds)
    out.add("sensitivity.csv", _csv_text(("period", "measure", "source", "individual", "share"), rows))
    out.add_json("sensitivity.json", detail)
    out.add_json("summary.json", {
        "recommended_structure": assessment.recommended_structure,
        f"T{cfg.period:g}": levels_summary,
    })
    _update_manifest(out, cfg, "report", {"chains": [_chain_record(e) for e in ensembles]})
    written = out.write()
    print(f"report: {len(written)} files in {cfg.out_dir}")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "assess": cmd_assess,
    "fit": cmd_fit,
    "levels": cmd_levels,
    "equivalent": cmd_equivalent,
    "sensitivity": cmd_sensitivity,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(ns)
        return COMMANDS[ns.command](cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
