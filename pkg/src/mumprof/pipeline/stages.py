"""Stage execution with persisted artifacts and a content-hashed manifest.

Each artifact is recorded in ``manifest.json`` under its name with the
stage that wrote it, its path relative to the output directory, its sha256,
its shape and a fingerprint of the stage inputs (upstream hashes plus the
config section the stage reads). A stage is skipped when its fingerprint is
unchanged and all of its files still hash to the recorded values.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from .. import baseline, corpus, gmm, kmeans, profiles
from ..embedding import TweetMatrix, load_table
from ..errors import DataError, MumError, StageError
from . import report, users
from .config import PipelineConfig

log = logging.getLogger(__name__)

CORE_ARTIFACTS = ("tokens", "vectors", "kmeans", "gmm", "responsibilities",
                  "profiles", "user_clusters", "cohort_evaluation")
TARGETS = ("tokenize", "embed", "scan-k", "kmeans", "fit-gmm", "profile", "baseline",
           "cluster-users", "evaluate", "run")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _fingerprint(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.output)
        self.manifest_path = self.out / "manifest.json"
        self.manifest: dict = {}
        self.executed: list[str] = []
        self._cache: dict = {}

    # bookkeeping

    def _load_manifest(self):
        if self.manifest_path.exists():
            with open(self.manifest_path, encoding="utf-8") as fh:
                self.manifest = json.load(fh)

    def _save_manifest(self):
        tmp = self.manifest_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        tmp.replace(self.manifest_path)

    def _fresh(self, names, fp) -> bool:
        for name in names:
            entry = self.manifest.get(name)
            if entry is None or entry.get("inputs") != fp:
                return False
            for rel, digest in [(entry["path"], entry["sha256"])] + list(entry.get("extra", {}).items()):
                p = self.out / rel
                if not p.exists() or sha256_file(p) != digest:
                    return False
        return True

    def _record(self, stage, name, path, rows, cols, fp, extra=()):
        path = Path(path)
        self.manifest[name] = {
            "stage": stage,
            "path": path.name,
            "sha256": sha256_file(path),
            "rows": rows,
            "cols": cols,
            "inputs": fp,
            "extra": {Path(e).name: sha256_file(e) for e in extra},
        }

    def _hash(self, name) -> str:
        return self.manifest[name]["sha256"]

    def _stage(self, stage, names, inputs, produce):
        """Run ``produce(fp)`` unless every artifact in ``names`` is fresh."""
        fp = _fingerprint({"stage": stage, **inputs})
        if self._fresh(names, fp):
            log.info("stage %s: up to date", stage)
            return
        log.info("stage %s: running", stage)
        try:
            produce(fp)
        except StageError:
            raise
        except MumError as exc:
            raise StageError(stage, exc) from exc
        except FileNotFoundError as exc:
            raise StageError(stage, DataError(f"missing file: {exc.filename}")) from exc
        self.executed.append(stage)
        self._save_manifest()

    def _path(self, name) -> Path:
        return self.out / self.manifest[name]["path"]

    def _input_hash(self, stage, path) -> str:
        if path is None:
            return ""
        path = Path(path)
        if not path.exists():
            raise StageError(stage, DataError(f"missing input file: {path}"))
        return sha256_file(path)

    # cached loaders

    def tokens(self):
        if "tokens" not in self._cache:
            self._cache["tokens"] = corpus.read_tokenized_jsonl(self._path("tokens"))
        return self._cache["tokens"]

    def vectors(self) -> TweetMatrix:
        if "vectors" not in self._cache:
            self._cache["vectors"] = TweetMatrix.load_npy(self._path("vectors"))
        return self._cache["vectors"]

    def cohort(self) -> list[str]:
        return users.read_cohort(self.config.cohort) if self.config.cohort else []

    # stages

    def stage_tokenize(self):
        cfg = self.config
        inputs = {"corpus": self._input_hash("tokenize", cfg.corpus)}

        def produce(fp):
            raw = corpus.read_raw_jsonl(cfg.corpus)
            toks = [corpus.tokenize_tweet(t) for t in raw]
            path = self.out / "tokens.jsonl"
            n = corpus.write_tokenized_jsonl(toks, path)
            self._cache["tokens"] = toks
            self._record("tokenize", "tokens", path, n, 1, fp)

        self._stage("tokenize", ["tokens"], inputs, produce)

    def stage_embed(self):
        cfg = self.config
        inputs = {"tokens": self._hash("tokens"), "embeddings": self._input_hash("embed", cfg.embeddings)}

        def produce(fp):
            table = load_table(cfg.embeddings)
            tm = TweetMatrix.build(self.tokens(), table)
            if not tm.tweet_ids:
                raise DataError("no tweet has an in-vocabulary token")
            path = self.out / "vectors.npy"
            sidecar = tm.save_npy(path)
            self._cache["vectors"] = tm
            self._record("embed", "vectors", path, len(tm.tweet_ids), table.dimension, fp, [sidecar])

        self._stage("embed", ["vectors"], inputs, produce)

    def stage_kmeans(self, force_scan=False):
        t = self.config.topics
        scanning = t.k is None or force_scan
        names = ["kmeans"] + (["elbow_scan"] if scanning else [])
        inputs = {"vectors": self._hash("vectors"), "topics": self.config.section("topics"),
                  "scan": scanning}

        def produce(fp):
            x = self.vectors().vectors
            if scanning:
                scan = kmeans.scan_k(x, t.k_list, t.seeds, t.max_iter, t.tol)
                scan_path = self.out / "elbow_scan.csv"
                scan.write_csv(scan_path)
                self._record("kmeans", "elbow_scan", scan_path, len(scan.ks), 3, fp)
                log.info("elbow suggests K=%d", scan.suggested_k)
                k = t.k if t.k is not None else scan.suggested_k
                best = scan.results.get(k)
            else:
                k, best = t.k, None
            if best is None:
                for s in t.seeds:
                    r = kmeans.fit(x, k, s, t.max_iter, t.tol)
                    log.info("K=%d seed=%d heterogeneity=%.6g", k, s, r.heterogeneity)
                    if best is None or r.heterogeneity < best.heterogeneity:
                        best = r
            path = self.out / "kmeans.json"
            best.save(path)
            self._record("kmeans", "kmeans", path, best.k, x.shape[1], fp)

        self._stage("kmeans", names, inputs, produce)

    def stage_gmm(self):
        e = self.config.em
        inputs = {"vectors": self._hash("vectors"), "kmeans": self._hash("kmeans"), "em": self.config.section("em")}

        def produce(fp):
            tm = self.vectors()
            clustering = kmeans.ClusteringResult.load(self._path("kmeans"))
            init = gmm.init_from_kmeans(tm.vectors, clustering, e.variance_floor)
            model, resp = gmm.fit_em(tm.vectors, init, e.max_iter, e.tol, e.variance_floor)
            mpath = self.out / "gmm.json"
            model.save(mpath)
            rpath = self.out / "responsibilities.csv"
            gmm.ResponsibilityMatrix(tm.tweet_ids, resp).write_csv(rpath)
            self._record("fit-gmm", "gmm", mpath, model.k, model.d, fp)
            self._record("fit-gmm", "responsibilities", rpath, resp.shape[0], resp.shape[1], fp)

        self._stage("fit-gmm", ["gmm", "responsibilities"], inputs, produce)

    def stage_profiles(self):
        inputs = {"responsibilities": self._hash("responsibilities"), "vectors": self._hash("vectors"),
                  "tokens": self._hash("tokens")}

        def produce(fp):
            tm = self.vectors()
            resp = gmm.ResponsibilityMatrix.read_csv(self._path("responsibilities"))
            if resp.tweet_ids != tm.tweet_ids:
                raise DataError("responsibility rows do not match the tweet vector index")
            all_users = list(corpus.group_by_user(self.tokens()))
            profs, skipped = profiles.build_profiles(resp.values, tm.user_ids, profiles.MUM, all_users)
            path = self.out / "profiles.jsonl"
            profiles.write_jsonl(profs, path)
            skipped_path = self.out / "skipped_users.txt"
            skipped_path.write_text("".join(u + "\n" for u in skipped), encoding="utf-8")
            if skipped:
                log.warning("%d users have no modeled tweet and get no profile", len(skipped))
            self._record("profile", "profiles", path, len(profs), resp.values.shape[1], fp, [skipped_path])

        self._stage("profile", ["profiles"], inputs, produce)

    def _cluster(self, stage, name, profile_name):
        u = self.config.users
        inputs = {"profiles": self._hash(profile_name), "users": self.config.section("users")}

        def produce(fp):
            profs = profiles.read_jsonl(self._path(profile_name))
            uc = users.cluster_users(profs, u.k, u.seeds, u.metric, u.k_list, u.max_iter, u.tol)
            path = self.out / f"{name}.json"
            uc.save(path)
            self._record(stage, name, path, len(uc.user_ids), 1, fp)

        self._stage(stage, [name], inputs, produce)

    def stage_cluster_users(self):
        self._cluster("cluster-users", "user_clusters", "profiles")

    def stage_baseline(self):
        cfg = self.config
        b = cfg.baseline
        if cfg.label_map is None:
            raise StageError("baseline", DataError("baseline needs paths.label_map"))
        inputs = {"tokens": self._hash("tokens"), "label_map": self._input_hash("baseline", cfg.label_map),
                  "stopwords": self._input_hash("baseline", b.stopwords),
                  "baseline": cfg.section("baseline")}
        names = ["labels", "baseline_metrics", "baseline_profiles"]

        def produce(fp):
            toks = self.tokens()
            label_map = corpus.TopicLabelMap.load(cfg.label_map)
            labeled, rep = corpus.label_by_hashtag(toks, label_map)
            lpath = self.out / "labels.csv"
            corpus.write_labels_csv(labeled, lpath)
            self._record("baseline", "labels", lpath, len(labeled), 2, fp)

            by_id = {t.id: t for t in toks}
            stop = baseline.load_stopwords(b.stopwords)
            docs = [by_id[lab.tweet_id].tokens for lab in labeled]
            y = np.array([lab.topic for lab in labeled], dtype=np.int64)
            train, test = baseline.stratified_split(y, b.test_fraction, b.seed)
            model = baseline.tfidf_fit([docs[i] for i in train], stop)
            x_train = baseline.tfidf_matrix(model, [docs[i] for i in train])
            clf = baseline.classifier_train(x_train, y[train], len(label_map.topics), b.l2, b.max_iter)
            pred, _ = baseline.classify(clf, baseline.tfidf_matrix(model, [docs[i] for i in test]))
            metrics = baseline.evaluate_multiclass(pred, y[test]) if len(test) else {}
            metrics.update({"n_tweets": len(toks), "n_labeled": len(labeled),
                            "labeled_fraction": len(labeled) / len(toks) if toks else 0.0,
                            "n_ambiguous": rep.ambiguous_count, "n_unmatched": rep.unmatched,
                            "n_train": int(len(train)), "n_test": int(len(test)),
                            "n_features": len(model.vocabulary), "classifier": "multinomial_logistic"})
            mpath = self.out / "baseline_metrics.json"
            baseline.write_metrics(metrics, mpath)
            self._record("baseline", "baseline_metrics", mpath, 1, len(metrics), fp)

            _, proba = baseline.classify(clf, baseline.tfidf_matrix(model, [t.tokens for t in toks]))
            profs, _ = profiles.build_profiles(proba, [t.user_id for t in toks], profiles.BASELINE_M)
            ppath = self.out / "baseline_profiles.jsonl"
            profiles.write_jsonl(profs, ppath)
            self._record("baseline", "baseline_profiles", ppath, len(profs), proba.shape[1], fp)

        self._stage("baseline", names, inputs, produce)
        self._cluster("baseline-cluster-users", "baseline_user_clusters", "baseline_profiles")

    def stage_keyword_probe(self):
        cfg = self.config
        cohort = self.cohort()
        if not cohort:
            return
        b = cfg.baseline
        inputs = {"tokens": self._hash("tokens"), "cohort": cohort,
                  "stopwords": self._input_hash("evaluate", b.stopwords),
                  "keywords": self._input_hash("evaluate", b.keywords), "top_n": b.top_n}

        def produce(fp):
            timelines: dict[str, list[str]] = {u: [] for u in cohort}
            for t in self.tokens():
                if t.user_id in timelines:
                    timelines[t.user_id].extend(t.tokens)
            docs = [timelines[u] for u in cohort]
            model = baseline.tfidf_fit(docs, baseline.load_stopwords(b.stopwords))
            keywords = baseline.load_keywords(b.keywords)
            n_max = max(b.top_n)
            wpath = self.out / "top_words.csv"
            ppath = self.out / "keyword_probe.csv"
            with open(wpath, "w", encoding="utf-8", newline="") as fw, \
                    open(ppath, "w", encoding="utf-8", newline="") as fp_:
                ww = csv.writer(fw, lineterminator="\n")
                pw = csv.writer(fp_, lineterminator="\n")
                ww.writerow(["user_id", "rank", "term", "weight"])
                pw.writerow(["user_id", "n", "precision", "recall"])
                for u, doc in zip(cohort, docs):
                    top = baseline.top_terms(model, doc, n_max)
                    for rank, (term, w) in enumerate(top, 1):
                        ww.writerow([u, rank, term, repr(w)])
                    for n in b.top_n:
                        words = [term for term, _ in top[:n]]
                        p, r = baseline.keyword_pr(words, keywords) if words else (0.0, 0.0)
                        pw.writerow([u, n, repr(p), repr(r)])
            self._record("evaluate", "top_words", wpath, len(cohort), 4, fp)
            self._record("evaluate", "keyword_probe", ppath, len(cohort) * len(b.top_n), 4, fp)

        self._stage("evaluate-keywords", ["top_words", "keyword_probe"], inputs, produce)

    def stage_evaluate(self):
        cohort = self.cohort()
        with_baseline = "baseline_user_clusters" in self.manifest and self.config.baseline.enabled
        inputs = {"user_clusters": self._hash("user_clusters"), "cohort": cohort,
                  "baseline": self._hash("baseline_user_clusters") if with_baseline else None}

        def produce(fp):
            out = {"cohort_size": len(cohort)}
            uc = users.UserClusters.load(self._path("user_clusters"))
            out["mum"] = users.cohort_purity(uc, cohort).to_dict()
            if with_baseline:
                bc = users.UserClusters.load(self._path("baseline_user_clusters"))
                out["baseline"] = users.cohort_purity(bc, cohort).to_dict()
            path = self.out / "cohort_evaluation.json"
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(out, fh, indent=2, sort_keys=True)
                fh.write("\n")
            self._record("evaluate", "cohort_evaluation", path, uc.result.k, 2 if with_baseline else 1, fp)

        self._stage("evaluate", ["cohort_evaluation"], inputs, produce)
        self.stage_keyword_probe()

    # driver

    def run(self, target: str = "run") -> dict:
        if target not in TARGETS:
            raise ValueError(f"unknown target {target!r}")
        self.out.mkdir(parents=True, exist_ok=True)
        self._load_manifest()
        self.stage_tokenize()
        if target == "tokenize":
            return self.manifest
        if target == "baseline":
            self.stage_baseline()
            return self.manifest
        self.stage_embed()
        if target == "embed":
            return self.manifest
        self.stage_kmeans(force_scan=target == "scan-k")
        if target in ("scan-k", "kmeans"):
            return self.manifest
        self.stage_gmm()
        if target == "fit-gmm":
            return self.manifest
        self.stage_profiles()
        if target == "profile":
            return self.manifest
        if self.config.baseline.enabled:
            self.stage_baseline()
        self.stage_cluster_users()
        if target == "cluster-users":
            return self.manifest
        self.stage_evaluate()
        if target == "run":
            report.emit_report(self)
        return self.manifest


def run(config: PipelineConfig, target: str = "run") -> dict:
    """Execute the pipeline up to ``target`` and return the manifest."""
    return Pipeline(config).run(target)
