"""Human-facing report bundle written under ``<output>/report``."""

from __future__ import annotations

import csv
import json
import logging
import shutil

import numpy as np

from .. import gmm, profiles
from . import users

log = logging.getLogger(__name__)


def write_curve_svg(ks, values, path, title="Heterogeneity vs K", ylabel="heterogeneity", mark=None):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "mumprof", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(ks, values, "o-", color="tab:blue")
        if mark is not None and mark in ks:
            i = list(ks).index(mark)
            ax.plot([mark], [values[i]], "o", color="tab:red", markersize=10, fillstyle="none")
        ax.set_xlabel("K")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def cluster_table(mum_eval, baseline_eval=None, cohort_size=0):
    """Rows in the layout: cluster id, sizes per method, cohort members per method.

    Baseline columns appear only with a baseline evaluation and cohort
    columns only for a nonempty cohort.
    """
    header = ["cluster_id"]
    if baseline_eval is not None:
        header.append("total_size_baseline")
    header.append("total_size_mum")
    if cohort_size:
        if baseline_eval is not None:
            header.append("cohort_baseline")
        header.append("cohort_mum")
    k = len(mum_eval["cluster_sizes"])
    if baseline_eval is not None:
        k = max(k, len(baseline_eval["cluster_sizes"]))

    def at(lst, i):
        return lst[i] if i < len(lst) else 0

    rows = []
    for i in range(k):
        row = [i]
        if baseline_eval is not None:
            row.append(at(baseline_eval["cluster_sizes"], i))
        row.append(at(mum_eval["cluster_sizes"], i))
        if cohort_size:
            if baseline_eval is not None:
                row.append(at(baseline_eval["distribution"], i))
            row.append(at(mum_eval["distribution"], i))
        rows.append(row)
    return header, rows


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def emit_report(pipe) -> list:
    cfg = pipe.config
    out = pipe.out / "report"
    out.mkdir(exist_ok=True)
    written = []

    if "elbow_scan" in pipe.manifest:
        src = pipe._path("elbow_scan")
        shutil.copyfile(src, out / "elbow_curve.csv")
        with open(src, encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        ks = [int(r["K"]) for r in rows]
        hs = [float(r["heterogeneity"]) for r in rows]
        write_curve_svg(ks, hs, out / "elbow_curve.svg", mark=cfg.topics.k)
        written += ["elbow_curve.csv", "elbow_curve.svg"]

    uc = users.UserClusters.load(pipe._path("user_clusters"))
    if uc.scan is not None:
        write_curve_svg(uc.scan.ks, uc.scan.heterogeneity, out / "user_elbow_curve.svg",
                        title="User clusters: distortion vs K", ylabel="distortion",
                        mark=uc.scan.suggested_k)
        written.append("user_elbow_curve.svg")

    resp = gmm.ResponsibilityMatrix.read_csv(pipe._path("responsibilities"))
    rows = []
    col = {tid: i for i, tid in enumerate(resp.tweet_ids)}
    for k in range(resp.values.shape[1]):
        ids = gmm.top_tweets_per_topic(resp, k, cfg.report.top_tweet_threshold)[:cfg.report.top_tweets]
        for rank, tid in enumerate(ids, 1):
            rows.append([k, rank, tid, "%.12g" % resp.values[col[tid], k]])
    _write_csv(out / "top_tweets.csv", ["topic", "rank", "tweet_id", "responsibility"], rows)
    written.append("top_tweets.csv")

    with open(pipe._path("cohort_evaluation"), encoding="utf-8") as fh:
        evaluation = json.load(fh)
    shutil.copyfile(pipe._path("cohort_evaluation"), out / "cohort_evaluation.json")
    header, rows = cluster_table(evaluation["mum"], evaluation.get("baseline"), evaluation["cohort_size"])
    _write_csv(out / "cluster_table.csv", header, rows)
    written += ["cohort_evaluation.json", "cluster_table.csv"]

    if "baseline_profiles" in pipe.manifest and cfg.baseline.enabled:
        mum = {p.user_id: p for p in profiles.read_jsonl(pipe._path("profiles"))}
        base = {p.user_id: p for p in profiles.read_jsonl(pipe._path("baseline_profiles"))}
        k = len(next(iter(mum.values())).values) if mum else 0
        kb = len(next(iter(base.values())).values) if base else 0
        header = (["user_id"] + [f"mum_{j}" for j in range(k)] + [f"m_{j}" for j in range(kb)])
        rows = []
        for u, p in mum.items():
            b = base.get(u)
            bvals = b.values if b is not None else np.full(kb, np.nan)
            rows.append([u] + ["%.12g" % v for v in p.values] + ["%.12g" % v for v in bvals])
        _write_csv(out / "profiles_side_by_side.csv", header, rows)
        written.append("profiles_side_by_side.csv")

    with open(out / "index.json", "w", encoding="utf-8") as fh:
        json.dump({"files": written}, fh, indent=2)
        fh.write("\n")
    log.info("report written to %s", out)
    return written
