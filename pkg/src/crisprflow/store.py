"""File-backed session persistence: append-only JSON-lines logs.

One log per session: a header line followed by one line per interaction
turn. Writes are atomic (write-temp-then-rename of the whole small file)
and logs are never truncated by the store. Recovery replays the log
through the engine; a corrupt or truncated tail stops recovery at the last
valid line and marks the session ``needs_review``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .engine import Engine, Session
from .errors import CorruptLog, SessionNotFound


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


@dataclass
class StoredSessionInfo:
    session_id: str
    status: str
    mode: str
    needs_review: bool = False


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.sessions_dir = self.root / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._synced_turns: dict[str, int] = {}
        self._log_cache: dict[str, str] = {}

    # ------------------------------------------------------------------
    def _log_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.jsonl"

    def _snapshot_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.snapshot.json"

    def exists(self, session_id: str) -> bool:
        return self._log_path(session_id).exists()

    def list_sessions(self) -> list[StoredSessionInfo]:
        infos = []
        for path in sorted(self.sessions_dir.glob("*.jsonl")):
            session_id = path.stem
            status = "unknown"
            mode = "unknown"
            needs_review = False
            snap = self._snapshot_path(session_id)
            if snap.exists():
                try:
                    data = json.loads(snap.read_text(encoding="utf-8"))
                    status = data.get("status", status)
                    mode = data.get("mode", mode)
                    needs_review = bool(data.get("needs_review", False))
                except ValueError:
                    needs_review = True
            infos.append(StoredSessionInfo(session_id, status, mode, needs_review))
        return infos

    def find_by_idempotency(self, key: str) -> str | None:
        for path in sorted(self.sessions_dir.glob("*.jsonl")):
            first = path.read_text(encoding="utf-8").split("\n", 1)[0]
            try:
                header = json.loads(first)
            except ValueError:
                continue
            if header.get("idempotency_key") == key:
                return header["session_id"]
        return None

    # ------------------------------------------------------------------
    def sync(self, session: Session, idempotency_key: str | None = None) -> None:
        """Persist the header (once) and any turns not yet written."""
        session_id = session.session_id
        path = self._log_path(session_id)
        if session_id not in self._log_cache:
            if path.exists():
                content = path.read_text(encoding="utf-8")
                self._synced_turns[session_id] = max(0, len(content.strip().split("\n")) - 1)
            else:
                header = {"kind": "header", **session.header_dict()}
                if idempotency_key:
                    header["idempotency_key"] = idempotency_key
                content = json.dumps(header, ensure_ascii=False) + "\n"
                self._synced_turns[session_id] = 0
            self._log_cache[session_id] = content
        content = self._log_cache[session_id]
        synced = self._synced_turns[session_id]
        new_turns = session.history[synced:]
        if new_turns:
            lines = [
                json.dumps({"kind": "turn", **t.as_dict()}, ensure_ascii=False)
                for t in new_turns
            ]
            content += "\n".join(lines) + "\n"
            self._log_cache[session_id] = content
            self._synced_turns[session_id] = len(session.history)
        _atomic_write(path, content)
        snapshot = {
            "session_id": session_id,
            "mode": session.mode,
            "status": session.status,
            "current_task_index": session.current_task_index,
            "current_state_id": session.current_state_id,
            "needs_review": session.needs_review,
            "turns": len(session.history),
            "artifacts": {k: v["value"] for k, v in session.artifacts.items()},
        }
        _atomic_write(
            self._snapshot_path(session_id),
            json.dumps(snapshot, ensure_ascii=False, indent=2) + "\n",
        )

    # ------------------------------------------------------------------
    def read_log(self, session_id: str) -> tuple[dict, list[dict], int | None]:
        """Parse a log; returns (header, turns, first_bad_line or None)."""
        path = self._log_path(session_id)
        if not path.exists():
            raise SessionNotFound(f"no stored session {session_id!r}")
        text = path.read_text(encoding="utf-8")
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            raise CorruptLog(f"log for {session_id!r} is empty", line_no=0)
        try:
            header = json.loads(lines[0])
        except ValueError:
            raise CorruptLog(f"log header for {session_id!r} unreadable", line_no=0) from None
        if header.get("kind") != "header":
            raise CorruptLog(f"log for {session_id!r} does not start with a header", line_no=0)
        turns: list[dict] = []
        bad_line: int | None = None
        for i, line in enumerate(lines[1:], start=1):
            try:
                record = json.loads(line)
                if record.get("kind") != "turn":
                    raise ValueError("not a turn record")
                record.pop("kind")
            except ValueError:
                bad_line = i
                break
            turns.append(record)
        return header, turns, bad_line

    def recover(self, session_id: str, engine: Engine) -> Session:
        """Replay a stored session; stops at the last valid line on damage."""
        header, turns, bad_line = self.read_log(session_id)
        needs_review = bad_line is not None
        try:
            session = engine.replay(header, turns)
        except CorruptLog as exc:
            prefix = turns[: exc.line_no]
            session = engine.replay(header, prefix)
            needs_review = True
        if len(session.history) != len(turns):
            needs_review = True
        session.needs_review = needs_review
        # adopt the recovered state as the persisted baseline
        self._log_cache.pop(session_id, None)
        self._synced_turns.pop(session_id, None)
        return session
