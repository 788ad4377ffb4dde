"""HTTP gateway for a human oracle.

The loop thread publishes one pending query at a time through
:class:`OracleGateway` and blocks until a client answers it (or a timeout
aborts the round). The FastAPI app exposes the query/answer/status contract;
all communication goes through the gateway's condition variable, never
shared mutable state.

Endpoints (all times in months, decimal):
  GET  /api/v1/queries/pending?wait=SECONDS  -> {"query": {...} | null}
  POST /api/v1/queries/{id}/answer           <- {"event_time": number}
  GET  /api/v1/run/status                    -> {"round", "c_index", "history"}
"""

from __future__ import annotations

import csv
import threading
from dataclasses import asdict
from pathlib import Path

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .errors import OracleTimeoutError
from .oracle import OracleAnswer, OracleQuery


class UnknownQueryError(LookupError):
    """The posted query id is not pending and was never answered."""


class DuplicateAnswerError(LookupError):
    """The posted query id was already answered."""


class OracleGateway:
    """Single-owner mailbox between the loop thread and the HTTP handlers."""

    def __init__(self):
        self._cond = threading.Condition()
        self._pending: OracleQuery | None = None
        self._answer: OracleAnswer | None = None
        self._answered_ids: set[int] = set()
        self._status = {"round": 0, "c_index": None, "history": []}
        self.log: list[tuple[OracleQuery, OracleAnswer]] = []

    # -- loop side ---------------------------------------------------------

    def ask(self, query: OracleQuery, timeout: float | None = None) -> OracleAnswer:
        """Publish ``query`` and block until it is answered or times out."""
        with self._cond:
            self._pending = query
            self._answer = None
            self._cond.notify_all()
            deadline_ok = self._cond.wait_for(
                lambda: self._answer is not None and self._answer.query_id == query.query_id,
                timeout=timeout,
            )
            if not deadline_ok:
                self._pending = None
                raise OracleTimeoutError(f"no answer for query {query.query_id} within {timeout}s")
            answer = self._answer
            self._answer = None
            self.log.append((query, answer))
            return answer

    def update_status(self, round_: int, c_index: float, history: list) -> None:
        with self._cond:
            self._status = {
                "round": round_,
                "c_index": c_index,
                "history": [[r, c] for r, c in history],
            }

    # -- service side ------------------------------------------------------

    def peek_pending(self, wait: float = 0.0) -> OracleQuery | None:
        with self._cond:
            if self._pending is None and wait > 0:
                self._cond.wait_for(lambda: self._pending is not None, timeout=wait)
            return self._pending

    def submit_answer(self, query_id: int, event_time: float) -> None:
        """Accept an answer for the pending query.

        Raises UnknownQueryError / DuplicateAnswerError for bad ids and
        ValueError when the label precedes the censoring time.
        """
        with self._cond:
            if self._pending is None or self._pending.query_id != query_id:
                if query_id in self._answered_ids:
                    raise DuplicateAnswerError(f"query {query_id} was already answered")
                raise UnknownQueryError(f"no pending query with id {query_id}")
            if event_time < self._pending.censoring_time:
                raise ValueError(
                    f"event_time {event_time} precedes censoring time "
                    f"{self._pending.censoring_time}"
                )
            self._answer = OracleAnswer(query_id, float(event_time))
            self._answered_ids.add(query_id)
            self._pending = None
            self._cond.notify_all()

    def status_snapshot(self) -> dict:
        with self._cond:
            return dict(self._status)

    def write_answer_log(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["query_id", "candidate_id", "censoring_time", "event_time"])
            for query, answer in self.log:
                writer.writerow(
                    [query.query_id, query.candidate_id, query.censoring_time, answer.event_time]
                )


class HumanOracle:
    """Oracle adapter: forwards queries to the gateway and waits for a human."""

    def __init__(self, gateway: OracleGateway, timeout: float | None = 300.0):
        self.gateway = gateway
        self.timeout = timeout

    def __call__(self, query: OracleQuery) -> OracleAnswer:
        return self.gateway.ask(query, timeout=self.timeout)


class AnswerBody(BaseModel):
    event_time: float


_MAX_LONG_POLL_SECONDS = 30.0


def create_app(gateway: OracleGateway) -> FastAPI:
    app = FastAPI(title="survact labeling gateway")

    @app.get("/api/v1/queries/pending")
    def pending(wait: float = 0.0):
        query = gateway.peek_pending(wait=min(max(wait, 0.0), _MAX_LONG_POLL_SECONDS))
        return {"query": asdict(query) if query is not None else None}

    @app.post("/api/v1/queries/{query_id}/answer")
    def answer(query_id: int, body: AnswerBody):
        try:
            gateway.submit_answer(query_id, body.event_time)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        except DuplicateAnswerError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except UnknownQueryError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        return {"status": "accepted", "query_id": query_id}

    @app.get("/api/v1/run/status")
    def status():
        return gateway.status_snapshot()

    return app


def serve_oracle(gateway: OracleGateway, port: int = 8080, host: str = "127.0.0.1") -> None:
    """Run the gateway's HTTP service; blocks until interrupted."""
    import uvicorn

    uvicorn.run(create_app(gateway), host=host, port=port, log_level="warning")
