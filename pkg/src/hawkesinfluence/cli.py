"""Command-line pipeline: ingest -> fit -> impact/compare, plus simulate and characterize.

Every stage reads and writes explicit files under the output directory, so
stages can be rerun independently and reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import characterize as ch
from .config import RunConfig, load_config, override
from .events import (CountsSummary, build_sequences, counts_summary, read_bundle, read_event_rows,
                     write_bundle)
from .exceptions import ConfigError, SupercriticalError, UnknownGroupError, UrlParseError
from .fit import AGGREGATE_CATEGORIES, AggregateResult, aggregate, fit_corpus
from .hawkes import HawkesParams, SimulationSpec, simulate
from .influence import compare_categories, direct_impact, total_impact
from .stats import ecdf, ks_two_sample
from .tables import matrix_rows, read_jsonl, write_json, write_table
from .urls import DEFAULT_STATE_DOMAINS, load_domain_list, load_redirect_map

logger = logging.getLogger("hawkesinfluence")

EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION = 0, 1, 2


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _counts_rows(summary: CountsSummary) -> list[dict]:
    return summary.rows()


# --------------------------------------------------------------------------- ingest

def cmd_ingest(cfg: RunConfig, args) -> int:
    if cfg.events is None:
        raise ConfigError("ingest needs 'events' in the config")
    rows = read_event_rows(cfg.events)
    redirects = load_redirect_map(cfg.redirect_map) if cfg.redirect_map else None
    state = load_domain_list(cfg.state_domains) if cfg.state_domains else DEFAULT_STATE_DOMAINS
    news = load_domain_list(cfg.news_domains) if cfg.news_domains else frozenset()
    seqs = build_sequences(rows, cfg.groups, cfg.min_total_events, redirect_map=redirects,
                           state_domains=state, news_domains=news, horizon=cfg.horizon,
                           padding=cfg.padding, time_unit=cfg.time_unit)
    if not seqs:
        logger.warning("no sequences built from %s", cfg.events)
    out = _out(cfg)
    write_bundle(seqs, out / "sequences.jsonl")
    summary = counts_summary(seqs, cfg.groups)
    write_json(summary.to_dict(), out / "counts.json")
    write_table(_counts_rows(summary), out / "counts", ["metric", "category", *cfg.groups])
    logger.info("ingested %d rows into %d sequences", len(rows), len(seqs))
    return EXIT_OK


# --------------------------------------------------------------------------- simulate

def cmd_simulate(cfg: RunConfig, args) -> int:
    if not args.params:
        raise ConfigError("simulate needs --params")
    param_rows = read_jsonl(args.params)
    seeds = np.random.SeedSequence(cfg.seed).generate_state(
        max(1, len(param_rows) * cfg.simulate.n_sequences), dtype=np.uint64)
    seqs = []
    i = 0
    for p_idx, row in enumerate(param_rows):
        params = HawkesParams.from_dict(row)
        labels = row.get("groups") or (list(cfg.groups) if len(cfg.groups) == params.K else None)
        for r in range(cfg.simulate.n_sequences):
            spec = SimulationSpec(params, float(row.get("horizon", cfg.simulate.horizon)), int(seeds[i]),
                                  bool(row.get("allow_supercritical", False)))
            seqs.append(simulate(spec, labels, url=f"sim/{p_idx}/{r}"))
            i += 1
    out = _out(cfg)
    write_bundle(seqs, out / "simulated.jsonl")
    logger.info("simulated %d sequences", len(seqs))
    return EXIT_OK


# --------------------------------------------------------------------------- fit

def cmd_fit(cfg: RunConfig, args) -> int:
    out = _out(cfg)
    bundle = Path(args.bundle) if args.bundle else out / "sequences.jsonl"
    seqs = read_bundle(bundle)
    groups = tuple(g.label for g in seqs[0].groups) if seqs else tuple(cfg.groups)
    fits = fit_corpus(seqs, cfg.fit, n_jobs=cfg.n_jobs)
    with open(out / "fits.jsonl", "w", encoding="utf-8") as fh:
        for f in fits:
            fh.write(json.dumps(f.to_dict(), sort_keys=True) + "\n")
    agg = aggregate(fits, groups, include_degenerate=cfg.include_degenerate)
    write_json(agg.to_dict(), out / "aggregate.json")
    rows = []
    for cat in AGGREGATE_CATEGORIES:
        n = [[len(agg.weight_samples[cat][s][d]) for d in range(agg.K)] for s in range(agg.K)]
        rows += matrix_rows(groups, cat, mean_weight=agg.mean_W[cat], n_samples=n)
    write_table(rows, out / "aggregate", ["category", "source", "destination", "mean_weight", "n_samples"])
    bg = [{"category": cat, "group": g, "mean_mu": agg.mean_mu[cat][k], "n_samples": len(agg.mu_samples[cat][k])}
          for cat in AGGREGATE_CATEGORIES for k, g in enumerate(groups)]
    write_table(bg, out / "background", ["category", "group", "mean_mu", "n_samples"])
    summary = counts_summary(seqs, groups, agg)
    write_json(summary.to_dict(), out / "summary.json")
    write_table(_counts_rows(summary), out / "summary", ["metric", "category", *groups])
    failed = sum(not f.ok for f in fits)
    logger.info("fitted %d sequences (%d failed)", len(fits), failed)
    return EXIT_OK


# --------------------------------------------------------------------------- impact / compare

def _load_aggregate(cfg, args) -> AggregateResult:
    path = Path(args.aggregate) if args.aggregate else Path(cfg.output_dir) / "aggregate.json"
    return AggregateResult.from_dict(json.loads(path.read_text(encoding="utf-8")))


def _comparison_rows(agg: AggregateResult) -> list[dict]:
    cmp = compare_categories(agg)
    rows = []
    for s, src in enumerate(agg.groups):
        for d, dst in enumerate(agg.groups):
            insufficient = bool(cmp.insufficient[s, d])
            rows.append({
                "source": src, "destination": dst,
                "mean_R": agg.mean_W["RussianState"][s, d], "mean_O": agg.mean_W["OtherNews"][s, d],
                "percent_change": cmp.percent_change[s, d], "ks_D": cmp.ks_D[s, d], "ks_p": cmp.ks_p[s, d],
                "significance": "insufficient" if insufficient else cmp.stars[s][d],
            })
    return rows


def cmd_impact(cfg: RunConfig, args) -> int:
    agg = _load_aggregate(cfg, args)
    out = Path(cfg.output_dir)
    counts_path = Path(args.counts) if args.counts else out / "counts.json"
    counts = CountsSummary.from_dict(json.loads(counts_path.read_text(encoding="utf-8")))
    if tuple(counts.groups) != tuple(agg.groups):
        raise ConfigError(f"counts groups {counts.groups} do not match aggregate groups {agg.groups}")
    comparison = {(r["source"], r["destination"]): r for r in _comparison_rows(agg)}
    rows = []
    for cat in AGGREGATE_CATEGORIES:
        N = counts.event_counts(cat)
        unidentified = np.isnan(agg.mean_W[cat])
        W = np.where(unidentified, 0.0, agg.mean_W[cat])
        direct = direct_impact(W, N)
        direct[unidentified] = np.nan
        try:
            total = total_impact(W, N)
        except SupercriticalError as exc:
            logger.warning("%s: %s; total_pct left empty", cat, exc)
            total = np.full_like(direct, np.nan)
        for s, src in enumerate(agg.groups):
            for d, dst in enumerate(agg.groups):
                row = {"category": cat, "source": src, "destination": dst,
                       "direct_pct": direct[s, d], "total_pct": total[s, d],
                       "percent_change": None, "ks_D": None, "ks_p": None, "significance": None}
                if cat == "RussianState":
                    c = comparison[(src, dst)]
                    row.update(percent_change=c["percent_change"], ks_D=c["ks_D"], ks_p=c["ks_p"],
                               significance=c["significance"])
                rows.append(row)
    write_table(rows, _out(cfg) / "impact")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, args) -> int:
    agg = _load_aggregate(cfg, args)
    write_table(_comparison_rows(agg), _out(cfg) / "compare")
    return EXIT_OK


# --------------------------------------------------------------------------- characterize

def _side_by_side(tables: dict[str, list[tuple[str, float]]], key: str) -> list[dict]:
    depth = max((len(t) for t in tables.values()), default=0)
    rows = []
    for i in range(depth):
        row = {"rank": i + 1}
        for cohort, table in tables.items():
            item, pct = table[i] if i < len(table) else (None, None)
            row[f"{key} ({cohort})"] = item
            row[f"pct ({cohort})"] = pct
        rows.append(row)
    return rows


def _ecdf_rows(cohort: str, values) -> list[dict]:
    values = list(values)
    if not values:
        return []
    return [{"cohort": cohort, "x": x, "F": f} for x, f in ecdf(values).points()]


def _latest(account, attr):
    for t in reversed(account.tweets):
        v = getattr(t, attr)
        if v:
            return v
    return None


def cmd_characterize(cfg: RunConfig, args) -> int:
    if not cfg.tweets:
        raise ConfigError("characterize needs 'tweets' (cohort label -> archive path) in the config")
    out = _out(cfg) / "characterize"
    out.mkdir(parents=True, exist_ok=True)
    top_n = cfg.characterize.top_n
    redirects = load_redirect_map(cfg.redirect_map) if cfg.redirect_map else None
    cohorts = {label: ch.read_tweets(path) for label, path in cfg.tweets.items()}
    accounts = {label: ch.build_accounts(tw) for label, tw in cohorts.items()}

    day_rows = [{"hour": h} for h in range(24)]
    week_rows = [{"hour_of_week": h} for h in range(168)]
    for label, tweets in cohorts.items():
        if not tweets:
            continue
        day, week = ch.temporal_histograms(tweets)
        for h in range(24):
            day_rows[h][label] = day[h]
        for h in range(168):
            week_rows[h][label] = week[h]
    write_table(day_rows, out / "hour_of_day", ["hour", *cohorts])
    write_table(week_rows, out / "hour_of_week", ["hour_of_week", *cohorts])

    write_table([{"cohort": label, "date": d.isoformat(), "accounts_created": n}
                 for label, accs in accounts.items() for d, n in ch.creation_timeline(accs).items()],
                out / "creation_timeline", ["cohort", "date", "accounts_created"])

    ngram_specs = {
        "screen_name_words": ("screen_name_at_tweet", "word"),
        "screen_name_char4": ("screen_name_at_tweet", "char4"),
        "description_words": ("description_at_tweet", "word"),
        "description_bigrams": ("description_at_tweet", "word-bigram"),
    }
    for name, (attr, mode) in ngram_specs.items():
        tables = {label: ch.top_ngrams([v for v in (_latest(a, attr) for a in accs) if v], mode, top_n)
                  for label, accs in accounts.items()}
        write_table(_side_by_side(tables, "token"), out / f"ngrams_{name}")

    for fld in ch.ITEM_FIELDS:
        tables = {label: ch.top_items(tw, fld, top_n, redirects) for label, tw in cohorts.items()}
        write_table(_side_by_side(tables, fld), out / f"top_{fld}")

    for fld in ("language", "client"):
        rows = []
        for label, tw in cohorts.items():
            rows += _ecdf_rows(label, ch.per_user_diversity(tw, fld).values())
        write_table(rows, out / f"diversity_{fld}", ["cohort", "x", "F"])

    growth, names, dels, del_acc, monthly = [], [], [], [], []
    for label, accs in accounts.items():
        all_obs = []
        for a in accs:
            dfol, dfri = ch.follower_growth(a)
            growth.append({"cohort": label, "user_id": a.user_id, "followers_change": dfol, "friends_change": dfri})
            runs, changes = ch.screen_name_changes(a)
            names.append({"cohort": label, "user_id": a.user_id, "screen_names": " -> ".join(runs),
                          "changes": changes})
            obs, frac = ch.observed_deletions(a)
            all_obs += obs
            del_acc.append({"cohort": label, "user_id": a.user_id, "observed_deletions": len(obs),
                            "min_deleted_total": sum(o.min_deleted for o in obs), "deleted_fraction": frac})
            for o in obs:
                dels.append({"cohort": label, "user_id": a.user_id, "start": o.interval[0].isoformat(),
                             "end": o.interval[1].isoformat(), "count_before": o.count_before,
                             "count_after": o.count_after, "min_deleted": o.min_deleted,
                             "percentage": o.percentage})
        for month, pct in ch.monthly_deletion_percentages(all_obs).items():
            monthly.append({"cohort": label, "month": month, "mean_percentage": pct})
    write_table(growth, out / "follower_growth", ["cohort", "user_id", "followers_change", "friends_change"])
    write_table(names, out / "screen_names", ["cohort", "user_id", "screen_names", "changes"])
    write_table(dels, out / "deletions", ["cohort", "user_id", "start", "end", "count_before", "count_after",
                                          "min_deleted", "percentage"])
    write_table(del_acc, out / "deletion_accounts", ["cohort", "user_id", "observed_deletions",
                                                     "min_deleted_total", "deleted_fraction"])
    write_table(monthly, out / "deletion_monthly", ["cohort", "month", "mean_percentage"])

    score_rows, tests = [], []
    labels = list(cohorts)
    for fld in ("sentiment", "subjectivity"):
        samples = {lab: [getattr(t, fld) for t in tw if getattr(t, fld) is not None] for lab, tw in cohorts.items()}
        for lab in labels:
            score_rows += [dict(r, score=fld) for r in _ecdf_rows(lab, samples[lab])]
        for i, a in enumerate(labels):
            for b in labels[i + 1:]:
                if samples[a] and samples[b]:
                    res = ks_two_sample(samples[a], samples[b])
                    tests.append({"score": fld, "cohort_a": a, "cohort_b": b, "D": res.D, "p": res.p,
                                  "n_a": res.n1, "n_b": res.n2})
    write_table(score_rows, out / "score_ecdf", ["score", "cohort", "x", "F"])
    write_table(tests, out / "score_ks", ["score", "cohort_a", "cohort_b", "D", "p", "n_a", "n_b"])

    bm = cfg.characterize.baseline_match
    if bm:
        ref_accounts = accounts[bm["reference"]]
        ref_rates = [ch.tweets_per_day(a, cfg.characterize.since) for a in ref_accounts
                     if a.creation_date is not None]
        pool = ch.build_accounts(ch.read_tweets(bm["pool"]))
        pool = [a for a in pool if a.creation_date is not None]
        chosen = ch.baseline_match(pool, ref_rates, int(bm["size"]), cfg.characterize.since)
        write_table([{"user_id": a.user_id, "tweets_per_day": ch.tweets_per_day(a, cfg.characterize.since)}
                     for a in chosen], out / "baseline_selection", ["user_id", "tweets_per_day"])

    summary = {label: {"tweets": len(cohorts[label]), "accounts": len(accounts[label])} for label in labels}
    write_json(summary, out / "summary.json")
    return EXIT_OK


# --------------------------------------------------------------------------- entry point

COMMANDS = {
    "ingest": cmd_ingest,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "impact": cmd_impact,
    "compare": cmd_compare,
    "characterize": cmd_characterize,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON run configuration")
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--seed", type=int, help="base seed (overrides config)")
    common.add_argument("--parallel", type=int, help="worker processes for fitting (default: all cores)")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="hawkesinfluence", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="build per-URL sequences and the counts table")
    p = sub.add_parser("simulate", parents=[common], help="simulate sequences from a parameter file")
    p.add_argument("--params", help="line-JSON parameter file with {mu, W, beta}")
    p = sub.add_parser("fit", parents=[common], help="fit one Hawkes model per URL and aggregate")
    p.add_argument("--bundle", help="sequence bundle (default: <out>/sequences.jsonl)")
    p = sub.add_parser("impact", parents=[common], help="direct and total impact percentages")
    p.add_argument("--aggregate", help="aggregate file (default: <out>/aggregate.json)")
    p.add_argument("--counts", help="counts summary (default: <out>/counts.json)")
    p = sub.add_parser("compare", parents=[common], help="RussianState vs OtherNews weight comparison")
    p.add_argument("--aggregate", help="aggregate file (default: <out>/aggregate.json)")
    sub.add_parser("characterize", parents=[common], help="account and tweet analytics report")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.parallel is not None and args.parallel < 1:
            raise ConfigError("--parallel must be >= 1")
        cfg = override(cfg, output_dir=args.out, seed=args.seed, parallel=args.parallel)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, UnknownGroupError, UrlParseError, FileNotFoundError) as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - top-level boundary
        logger.exception("%s failed: %s", args.command, exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
