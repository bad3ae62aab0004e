"""Flat-file expert knowledge store.

Layout, one directory per artifact:

    <store>/experts/<task_id>/meta      key=value descriptor
    <store>/experts/<task_id>/table     QTable text format
    <store>/experts/<task_id>/sha256    checksum of meta + table

Artifacts are append-only; writers take a store-level lock file, readers
need no lock. `select_experts` filters by state-signature compatibility
and action-grid equality and ranks by reported final reward.
"""

from __future__ import annotations

import hashlib
import os
import time
from dataclasses import dataclass
from pathlib import Path

from .agents import QTable
from .errors import DuplicateTaskError, IntegrityError, StoreError

LOCK_RETRY_S = 0.05
LOCK_TIMEOUT_S = 10.0


@dataclass
class ExpertArtifact:
    task_id: str
    resource_dims: tuple          # e.g. ("radio",)
    signature: tuple              # learner-state components the table reads
    action_grid: int
    table: QTable
    train_ttis: int
    final_mean_reward: float
    created_at: float
    config_digest: str

    @classmethod
    def from_table(cls, task_id, resource_dim, table: QTable, config_digest, created_at=None):
        return cls(
            task_id=task_id,
            resource_dims=(resource_dim,),
            signature=tuple(table.signature),
            action_grid=table.n_actions,
            table=table,
            train_ttis=table.train_ttis,
            final_mean_reward=table.final_mean_reward,
            created_at=time.time() if created_at is None else created_at,
            config_digest=config_digest,
        )

    def meta_text(self) -> str:
        lines = [
            f"task_id={self.task_id}",
            f"resource_dims={','.join(self.resource_dims)}",
            f"signature={','.join(str(d) for d in self.signature)}",
            f"action_grid={self.action_grid}",
            f"train_ttis={self.train_ttis}",
            f"final_mean_reward={self.final_mean_reward!r}",
            f"created_at={self.created_at!r}",
            f"config_digest={self.config_digest}",
        ]
        return "\n".join(lines) + "\n"


class _StoreLock:
    def __init__(self, root: Path):
        self.path = root / ".lock"

    def __enter__(self):
        deadline = time.monotonic() + LOCK_TIMEOUT_S
        while True:
            try:
                fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
                os.close(fd)
                return self
            except FileExistsError:
                if time.monotonic() > deadline:
                    raise StoreError(f"could not acquire store lock {self.path}") from None
                time.sleep(LOCK_RETRY_S)

    def __exit__(self, *exc):
        try:
            os.unlink(self.path)
        except FileNotFoundError:
            pass


def _digest(meta: bytes, table: bytes) -> str:
    return hashlib.sha256(meta + table).hexdigest()


def save_expert(store_path, artifact: ExpertArtifact) -> str:
    """Persist one artifact; duplicate task ids are refused, never
    overwritten. Returns the task id."""
    root = Path(store_path)
    experts = root / "experts"
    experts.mkdir(parents=True, exist_ok=True)
    with _StoreLock(root):
        target = experts / artifact.task_id
        if target.exists():
            raise DuplicateTaskError(f"task id {artifact.task_id!r} already stored")
        meta = artifact.meta_text().encode()
        table = artifact.table.to_text().encode()
        target.mkdir()
        try:
            (target / "meta").write_bytes(meta)
            (target / "table").write_bytes(table)
            (target / "sha256").write_text(_digest(meta, table) + "\n")
        except OSError as exc:
            raise StoreError(f"failed writing artifact {artifact.task_id!r}: {exc}") from exc
    return artifact.task_id


def load_expert(store_path, task_id: str) -> ExpertArtifact:
    adir = Path(store_path) / "experts" / task_id
    if not adir.is_dir():
        raise StoreError(f"no artifact {task_id!r} in store {store_path}")
    try:
        meta = (adir / "meta").read_bytes()
        table = (adir / "table").read_bytes()
        expected = (adir / "sha256").read_text().strip()
    except OSError as exc:
        raise StoreError(f"failed reading artifact {task_id!r}: {exc}") from exc
    actual = _digest(meta, table)
    if actual != expected:
        raise IntegrityError(
            f"checksum mismatch for {adir}: stored {expected[:12]}..., computed {actual[:12]}..."
        )
    fields = {}
    for line in meta.decode().strip().splitlines():
        k, v = line.split("=", 1)
        fields[k] = v
    qt = QTable.from_text(table.decode())
    return ExpertArtifact(
        task_id=fields["task_id"],
        resource_dims=tuple(fields["resource_dims"].split(",")),
        signature=tuple(int(d) for d in fields["signature"].split(",") if d != ""),
        action_grid=int(fields["action_grid"]),
        table=qt,
        train_ttis=int(fields["train_ttis"]),
        final_mean_reward=float(fields["final_mean_reward"]),
        created_at=float(fields["created_at"]),
        config_digest=fields["config_digest"],
    )


def list_experts(store_path) -> list:
    experts = Path(store_path) / "experts"
    if not experts.is_dir():
        return []
    return sorted(p.name for p in experts.iterdir() if p.is_dir())


def select_experts(store_path, target_signature, action_grid: int) -> list:
    """Artifacts whose signature is a subset of the target's components and
    whose action grid matches, best reported reward first (ties by
    recency). Empty list when nothing is compatible."""
    target = set(target_signature)
    found = []
    for task_id in list_experts(store_path):
        art = load_expert(store_path, task_id)
        if set(art.signature) <= target and art.action_grid == action_grid:
            found.append(art)
    found.sort(key=lambda a: (-a.final_mean_reward, -a.created_at, a.task_id))
    return found
