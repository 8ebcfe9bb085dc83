"""Per-user topic profiles built from per-tweet topic distributions."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NoTweets, NormalizationError

MUM = "mum"
BASELINE_M = "baseline_m"


@dataclass
class UserProfile:
    user_id: str
    kind: str
    values: np.ndarray
    tweet_count: int

    def to_dict(self) -> dict:
        return {"user_id": self.user_id, "kind": self.kind,
                "values": [float(v) for v in self.values], "tweet_count": self.tweet_count}

    @classmethod
    def from_dict(cls, obj) -> "UserProfile":
        return cls(obj["user_id"], obj["kind"], np.asarray(obj["values"], dtype=np.float64),
                   int(obj["tweet_count"]))


def _rows(user_rows) -> np.ndarray:
    rows = np.asarray(user_rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[0] == 0:
        raise NoTweets("cannot build a profile from zero tweets")
    return rows


def mum(user_rows, user_id: str = "") -> UserProfile:
    """Topic percentages for one user from their |T_u| x K responsibility rows.

    Column sums are divided by their grand total rather than by |T_u|; the
    two must agree, which catches rows that were not normalized upstream.
    """
    rows = _rows(user_rows)
    sums = rows.sum(axis=0)
    total = sums.sum()
    if abs(total - rows.shape[0]) >= 1e-6:
        raise NormalizationError(
            f"user {user_id!r}: responsibilities total {total!r} for {rows.shape[0]} tweets")
    return UserProfile(user_id, MUM, sums / total * 100.0, rows.shape[0])


def baseline_m(user_probability_rows, user_id: str = "") -> UserProfile:
    rows = _rows(user_probability_rows)
    return UserProfile(user_id, BASELINE_M, rows.mean(axis=0), rows.shape[0])


def build_profiles(row_values, row_users, kind: str = MUM, all_users=None):
    """Profiles for every user with at least one modeled row.

    ``row_values`` is the N x K matrix, ``row_users`` the author of each row.
    Users listed in ``all_users`` with no rows are returned as skipped.
    Users keep first-appearance order.
    """
    row_values = np.asarray(row_values, dtype=np.float64)
    if row_values.shape[0] != len(row_users):
        raise DataError("one user id is needed per row")
    groups: dict[str, list[int]] = {}
    for i, u in enumerate(row_users):
        groups.setdefault(u, []).append(i)
    make = mum if kind == MUM else baseline_m
    profiles = [make(row_values[idx], user_id=u) for u, idx in groups.items()]
    skipped = []
    if all_users is not None:
        seen = set()
        for u in all_users:
            if u not in groups and u not in seen:
                skipped.append(u)
                seen.add(u)
    return profiles, skipped


def profile_matrix(profiles) -> np.ndarray:
    return np.vstack([p.values for p in profiles]) if profiles else np.zeros((0, 0))


def write_jsonl(profiles, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in profiles:
            fh.write(json.dumps(p.to_dict()) + "\n")


def read_jsonl(path) -> list[UserProfile]:
    with open(path, encoding="utf-8") as fh:
        return [UserProfile.from_dict(json.loads(line)) for line in fh if line.strip()]
