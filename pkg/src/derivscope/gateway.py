"""Uniform interface to precision-grammar parser backends.

Every parse attempt ends in exactly one of four outcomes: a best derivation
was found (parseable), the search space was exhausted with no derivation,
the backend hit a time/memory limit, or the backend itself failed. The
gateway never raises for a failed sentence; failures are data.

Two backends are supported: the in-process toy grammar, and any external
command speaking a line-delimited JSON protocol on stdin/stdout:

    request   {"id": 3, "text": "the cat sleeps .", "timeout_ms": 60000}
    response  {"id": 3, "status": "ok", "derivation": [...],
               "lexentries": [...], "root": "root_informal"}

Statuses: ok | no_parse | resource | error. One response line per request;
responses are matched by id, so they may arrive out of order. A crashed or
misbehaving child is respawned and costs only the in-flight sentence.
"""

from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .derivation import (
    Derivation,
    Node,
    leaf_classes,
    leaf_tokens,
    parse_tree,
    root_condition,
    root_label_for,
    serialize_tree,
)
from .errors import (
    BackendStartError,
    ConfigError,
    DataError,
    RootLabelError,
    SchemaError,
    TreeFormatError,
)

log = logging.getLogger(__name__)

__all__ = [
    "ParseOutcome",
    "ParseResult",
    "BackendConfig",
    "OutcomeSummary",
    "parse_sentence",
    "parse_corpus",
    "summarize_outcomes",
    "write_results_jsonl",
    "read_results_jsonl",
]


class ParseOutcome(Enum):
    PARSEABLE = "parseable"
    RESOURCE_LIMIT = "resource_limit"
    PARSER_ERROR = "parser_error"
    EXHAUSTED = "exhausted"


@dataclass
class ParseResult:
    id: int
    outcome: ParseOutcome
    derivation: Derivation | None = None
    lexentries: list[str | None] | None = None
    wall_ms: float = 0.0

    def __post_init__(self):
        has_deriv = self.derivation is not None
        if has_deriv != (self.outcome is ParseOutcome.PARSEABLE):
            raise DataError(
                f"result {self.id}: derivation must be present iff outcome is parseable"
            )
        if self.lexentries is not None and not has_deriv:
            raise DataError(f"result {self.id}: lexentries require a derivation")


@dataclass
class BackendConfig:
    kind: str = "toy"  # "toy" or "external"
    command: Sequence[str] | None = None
    timeout_ms: int = 60_000
    workers: int = 1
    grammar_path: str | None = None  # toy backend only

    def __post_init__(self):
        if self.kind not in ("toy", "external"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if self.kind == "external" and not self.command:
            raise ConfigError("external backend requires a command")
        if self.timeout_ms < 0:
            raise ConfigError("timeout_ms must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass
class OutcomeSummary:
    counts: dict[ParseOutcome, int] = field(
        default_factory=lambda: {outcome: 0 for outcome in ParseOutcome}
    )

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def fractions(self) -> dict[ParseOutcome, float]:
        total = self.total
        if total == 0:
            return {outcome: 0.0 for outcome in ParseOutcome}
        return {outcome: count / total for outcome, count in self.counts.items()}


def summarize_outcomes(results: Iterable[ParseResult]) -> OutcomeSummary:
    summary = OutcomeSummary()
    for result in results:
        summary.counts[result.outcome] += 1
    return summary


def _result_from_reply(idx: int, tokens: Sequence[str], reply: dict, wall_ms: float) -> ParseResult:
    """Map a backend reply onto the four-way outcome model.

    Any malformed reply (unknown status, bad tree, token mismatch) is a
    backend fault and maps to the parser-error outcome.
    """
    status = reply.get("status")
    if status == "no_parse":
        return ParseResult(id=idx, outcome=ParseOutcome.EXHAUSTED, wall_ms=wall_ms)
    if status == "resource":
        return ParseResult(id=idx, outcome=ParseOutcome.RESOURCE_LIMIT, wall_ms=wall_ms)
    if status == "error":
        return ParseResult(id=idx, outcome=ParseOutcome.PARSER_ERROR, wall_ms=wall_ms)
    if status != "ok":
        log.warning("sentence %d: backend sent unknown status %r", idx, status)
        return ParseResult(id=idx, outcome=ParseOutcome.PARSER_ERROR, wall_ms=wall_ms)

    try:
        tree = parse_tree(reply["derivation"])
        if not isinstance(tree, Node):
            raise TreeFormatError("derivation must contain at least one rule node")
        condition = root_condition(reply["root"])
    except (KeyError, TreeFormatError, RootLabelError) as exc:
        log.warning("sentence %d: malformed ok-reply (%s)", idx, exc)
        return ParseResult(id=idx, outcome=ParseOutcome.PARSER_ERROR, wall_ms=wall_ms)

    if leaf_tokens(tree) != list(tokens):
        log.warning("sentence %d: derivation leaves do not match the sentence", idx)
        return ParseResult(id=idx, outcome=ParseOutcome.PARSER_ERROR, wall_ms=wall_ms)
    lexentries = reply.get("lexentries")
    if lexentries is None:
        lexentries = leaf_classes(tree)
    if len(lexentries) != len(tokens):
        log.warning("sentence %d: lexentries length mismatch", idx)
        return ParseResult(id=idx, outcome=ParseOutcome.PARSER_ERROR, wall_ms=wall_ms)

    return ParseResult(
        id=idx,
        outcome=ParseOutcome.PARSEABLE,
        derivation=Derivation(tree=tree, root=condition),
        lexentries=list(lexentries),
        wall_ms=wall_ms,
    )


# ---------------------------------------------------------------------------
# toy backend


def _parse_toy(idx: int, tokens: Sequence[str], backend: BackendConfig) -> ParseResult:
    from .toygrammar import load_toy_grammar, toy_backend_parse

    grammar = load_toy_grammar(backend.grammar_path)
    started = time.perf_counter()
    reply = toy_backend_parse(tokens, grammar=grammar, timeout_ms=backend.timeout_ms)
    wall_ms = (time.perf_counter() - started) * 1000.0
    return _result_from_reply(idx, tokens, reply, wall_ms)


# ---------------------------------------------------------------------------
# external backend


class _ChildExit(Exception):
    pass


class _Child:
    """One backend child process plus a reader thread feeding a line queue."""

    def __init__(self, command: Sequence[str]):
        self.proc = subprocess.Popen(
            list(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )
        self.lines: queue.Queue = queue.Queue()
        self.reader = threading.Thread(target=self._read_loop, daemon=True)
        self.reader.start()

    def _read_loop(self):
        for line in self.proc.stdout:
            self.lines.put(line)
        self.lines.put(None)  # EOF

    def send(self, request: dict):
        try:
            self.proc.stdin.write(json.dumps(request) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise _ChildExit from exc

    def read_line(self, deadline: float) -> str:
        remaining = deadline - time.perf_counter()
        if remaining <= 0:
            raise TimeoutError
        try:
            line = self.lines.get(timeout=remaining)
        except queue.Empty:
            raise TimeoutError from None
        if line is None:
            raise _ChildExit
        return line

    def kill(self):
        try:
            self.proc.kill()
        except OSError:
            pass
        self.proc.wait()


class _Worker:
    """Owns one child exclusively; respawns it after crashes and timeouts."""

    def __init__(self, command: Sequence[str], timeout_ms: int):
        self.command = command
        self.timeout_ms = timeout_ms
        self.child = _Child(command)

    def _respawn(self):
        self.child.kill()
        self.child = _Child(self.command)

    def parse_one(self, idx: int, tokens: Sequence[str]) -> ParseResult:
        started = time.perf_counter()
        if self.timeout_ms <= 0:
            return ParseResult(id=idx, outcome=ParseOutcome.RESOURCE_LIMIT, wall_ms=0.0)
        deadline = started + self.timeout_ms / 1000.0
        request = {"id": idx, "text": " ".join(tokens), "timeout_ms": self.timeout_ms}

        def elapsed() -> float:
            return (time.perf_counter() - started) * 1000.0

        try:
            self.child.send(request)
            while True:
                line = self.child.read_line(deadline)
                try:
                    reply = json.loads(line)
                except json.JSONDecodeError:
                    log.warning("sentence %d: unparseable reply line; respawning child", idx)
                    self._respawn()
                    return ParseResult(
                        id=idx, outcome=ParseOutcome.PARSER_ERROR, wall_ms=elapsed()
                    )
                if not isinstance(reply, dict) or reply.get("id") != idx:
                    continue  # stale or out-of-order line for another id
                return _result_from_reply(idx, tokens, reply, elapsed())
        except TimeoutError:
            log.info("sentence %d: backend exceeded %d ms", idx, self.timeout_ms)
            self._respawn()
            return ParseResult(id=idx, outcome=ParseOutcome.RESOURCE_LIMIT, wall_ms=elapsed())
        except _ChildExit:
            log.warning("sentence %d: backend died mid-sentence; respawning", idx)
            self._respawn()
            return ParseResult(id=idx, outcome=ParseOutcome.PARSER_ERROR, wall_ms=elapsed())

    def close(self):
        self.child.kill()


def _parse_corpus_external(
    sentences: Sequence[Sequence[str]], backend: BackendConfig
) -> list[ParseResult]:
    n_workers = min(backend.workers, max(len(sentences), 1))
    try:
        workers = [_Worker(backend.command, backend.timeout_ms) for _ in range(n_workers)]
    except OSError as exc:
        raise BackendStartError(
            f"cannot launch backend {list(backend.command)!r}: {exc}"
        ) from exc

    tasks: queue.SimpleQueue = queue.SimpleQueue()
    for item in enumerate(sentences):
        tasks.put(item)
    results: list[ParseResult | None] = [None] * len(sentences)

    def run(worker: _Worker):
        while True:
            try:
                idx, tokens = tasks.get_nowait()
            except queue.Empty:
                return
            results[idx] = worker.parse_one(idx, tokens)

    threads = [threading.Thread(target=run, args=(worker,)) for worker in workers]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    for worker in workers:
        worker.close()
    return results  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# public operations


def parse_sentence(tokens: Sequence[str], backend: BackendConfig) -> ParseResult:
    """Parse a single tokenized sentence; never raises for a failed parse."""
    if backend.kind == "toy":
        return _parse_toy(0, tokens, backend)
    return _parse_corpus_external([tokens], backend)[0]


def parse_corpus(
    sentences: Sequence[Sequence[str]], backend: BackendConfig
) -> tuple[list[ParseResult], OutcomeSummary]:
    """Parse every sentence, preserving input order in the results.

    The worker pool (external backend) distributes sentences over processes;
    the toy backend runs in-process, on threads when workers > 1. Result
    content is independent of the worker count.
    """
    if backend.kind == "external":
        results = _parse_corpus_external(sentences, backend)
    elif backend.workers > 1 and len(sentences) > 1:
        with ThreadPoolExecutor(max_workers=backend.workers) as pool:
            results = list(
                pool.map(lambda item: _parse_toy(item[0], item[1], backend), enumerate(sentences))
            )
    else:
        results = [_parse_toy(idx, tokens, backend) for idx, tokens in enumerate(sentences)]
    return results, summarize_outcomes(results)


# ---------------------------------------------------------------------------
# result files: JSON lines {"id", "outcome", "root", "tree"}


def write_results_jsonl(results: Iterable[ParseResult], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for result in results:
            record = {
                "id": result.id,
                "outcome": result.outcome.value,
                "root": None,
                "tree": None,
            }
            if result.derivation is not None:
                record["root"] = root_label_for(result.derivation.root)
                record["tree"] = json.loads(serialize_tree(result.derivation.tree))
            handle.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")


def read_results_jsonl(path) -> list[ParseResult]:
    results = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                outcome = ParseOutcome(record["outcome"])
                idx = record["id"]
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise SchemaError(path, line_no, f"bad result record: {exc}") from None
            derivation = None
            lexentries = None
            if record.get("tree") is not None:
                try:
                    tree = parse_tree(record["tree"])
                    root = root_condition(record["root"]) if record.get("root") else None
                except (TreeFormatError, RootLabelError) as exc:
                    raise SchemaError(path, line_no, str(exc)) from None
                derivation = Derivation(tree=tree, root=root)
                lexentries = leaf_classes(tree)
            try:
                results.append(
                    ParseResult(
                        id=idx, outcome=outcome, derivation=derivation, lexentries=lexentries
                    )
                )
            except DataError as exc:
                raise SchemaError(path, line_no, str(exc)) from None
    return results
