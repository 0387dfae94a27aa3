"""HTTP JSON API, app configuration, provider wiring, and session persistence.

Sessions are journaled as append-only JSONL files (one per session) and
replayed at startup, so a restart preserves every session and turn order.
Session ids are counter-based, which keeps mock-provider runs reproducible
byte for byte.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from pydantic import BaseModel

from kite.errors import ConfigError, KiteError, ProviderError, TutorError
from kite.index import load_index
from kite.providers import (
    HttpEmbedder,
    HttpReranker,
    HttpTextClient,
    MockEmbedder,
    MockGenerator,
    MockJudge,
    MockReranker,
    MockStudent,
)
from kite.retrieve import RetrievalConfig
from kite.tutor import IntentRules, Session, Turn, TutorEngine

PROVIDER_ROLES = ("generator", "embedder", "reranker", "judge", "student")


@dataclass
class ProviderSpec:
    implementation: str = "mock"  # "mock" | "http"
    endpoint: str = ""
    model: str = ""
    api_key_env: str | None = None
    timeout: float = 30.0
    max_retries: int = 2
    dim: int | None = None  # embedder only
    seed: int = 0  # mock embedder only
    logistic: bool = False  # reranker only

    @classmethod
    def from_dict(cls, data: dict) -> "ProviderSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown provider fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class AppConfig:
    index_dir: str
    session_dir: str = "sessions"
    host: str = "127.0.0.1"
    port: int = 8000
    intent_rules_path: str | None = None
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    providers: dict = field(default_factory=dict)  # role -> ProviderSpec

    @classmethod
    def from_dict(cls, data: dict) -> "AppConfig":
        retrieval_data = data.get("retrieval") or {}
        try:
            retrieval = RetrievalConfig(**retrieval_data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad retrieval config: {exc}") from exc
        providers = {
            role: ProviderSpec.from_dict(spec)
            for role, spec in (data.get("providers") or {}).items()
        }
        for role in providers:
            if role not in PROVIDER_ROLES:
                raise ConfigError(f"unknown provider role: {role}")
        return cls(
            index_dir=data["index_dir"],
            session_dir=data.get("session_dir", "sessions"),
            host=data.get("host", "127.0.0.1"),
            port=int(data.get("port", 8000)),
            intent_rules_path=data.get("intent_rules_path"),
            retrieval=retrieval,
            providers=providers,
        )

    @classmethod
    def load(cls, path: str | Path) -> "AppConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        config = cls.from_dict(json.loads(path.read_text("utf-8")))
        base = path.parent
        config.index_dir = str((base / config.index_dir).resolve())
        config.session_dir = str((base / config.session_dir).resolve())
        if config.intent_rules_path:
            rules = (base / config.intent_rules_path).resolve()
            if not rules.exists():
                raise ConfigError(f"intent rules file not found: {rules}")
            config.intent_rules_path = str(rules)
        if not Path(config.index_dir).exists():
            raise ConfigError(f"index directory not found: {config.index_dir}")
        return config


def build_client(role: str, spec: ProviderSpec):
    if spec.implementation == "mock":
        if role == "embedder":
            return MockEmbedder(dim=spec.dim or 64, seed=spec.seed)
        if role == "reranker":
            return MockReranker()
        if role == "generator":
            return MockGenerator()
        if role == "judge":
            return MockJudge()
        if role == "student":
            return MockStudent()
        raise ConfigError(f"unknown provider role: {role}")
    if spec.implementation == "http":
        if not spec.endpoint:
            raise ConfigError(f"http provider for {role} needs an endpoint")
        common = dict(
            endpoint=spec.endpoint,
            model=spec.model,
            api_key_env=spec.api_key_env,
            timeout=spec.timeout,
            max_retries=spec.max_retries,
        )
        if role == "embedder":
            return HttpEmbedder(dim=spec.dim, **common)
        if role == "reranker":
            return HttpReranker(logistic=spec.logistic, **common)
        return HttpTextClient(role, **common)
    raise ConfigError(f"unknown provider implementation: {spec.implementation}")


def build_clients(config: AppConfig) -> dict:
    clients = {}
    for role in PROVIDER_ROLES:
        spec = config.providers.get(role, ProviderSpec())
        clients[role] = build_client(role, spec)
    return clients


def engine_from_config(config: AppConfig) -> TutorEngine:
    bundle = load_index(config.index_dir)
    clients = build_clients(config)
    embedder = clients["embedder"]
    if isinstance(embedder, MockEmbedder) and bundle.count and embedder.dim != bundle.dim:
        # Align the mock to the index rather than failing startup.
        embedder = MockEmbedder(dim=bundle.dim, seed=embedder.seed)
        clients["embedder"] = embedder
    rules = (
        IntentRules.from_file(config.intent_rules_path)
        if config.intent_rules_path
        else IntentRules.defaults()
    )
    engine = TutorEngine(
        bundle,
        generator=clients["generator"],
        embedder=embedder,
        reranker=clients["reranker"],
        retrieval=config.retrieval,
        rules=rules,
    )
    engine.clients = clients  # judge/student ride along for the eval commands
    return engine


class SessionStore:
    """Append-only JSONL journal per session, replayed at startup."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._store_lock = threading.Lock()
        self._replay()

    def _replay(self) -> None:
        for path in sorted(self.directory.glob("*.jsonl")):
            session: Session | None = None
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    event = json.loads(line)
                    if event["type"] == "created":
                        session = Session(session_id=event["session_id"])
                    elif event["type"] == "turn" and session is not None:
                        session.add_turn(Turn.from_dict(event["turn"]))
                        session.summary = event.get("summary", "")
            if session is not None:
                self._sessions[session.session_id] = session

    def _next_id(self) -> str:
        numbers = [
            int(sid[1:])
            for sid in self._sessions
            if sid.startswith("s") and sid[1:].isdigit()
        ]
        return f"s{(max(numbers) + 1 if numbers else 1):06d}"

    def _journal(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.jsonl"

    def lock(self, session_id: str) -> threading.Lock:
        with self._store_lock:
            if session_id not in self._locks:
                self._locks[session_id] = threading.Lock()
            return self._locks[session_id]

    def create(self) -> Session:
        with self._store_lock:
            session = Session(session_id=self._next_id())
            self._sessions[session.session_id] = session
        with open(self._journal(session.session_id), "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"type": "created", "session_id": session.session_id}) + "\n")
        return session

    def get(self, session_id: str) -> Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise TutorError(f"unknown session: {session_id}", code="unknown_session")
        return session

    def record_turn(self, session: Session) -> None:
        turn = session.turns[-1]
        with open(self._journal(session.session_id), "a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {"type": "turn", "turn": turn.to_dict(), "summary": session.summary},
                    ensure_ascii=False,
                )
                + "\n"
            )

    def export(self, session_id: str) -> dict:
        session = self.get(session_id)
        return {
            "session_id": session.session_id,
            "summary": session.summary,
            "turns": [t.to_dict() for t in session.turns],
        }

    def session_ids(self) -> list[str]:
        return sorted(self._sessions)


class MessageIn(BaseModel):
    query: str


class EvaluateIn(BaseModel):
    question: str
    student_answer: str


class RulesWatcher:
    """Hot-reloads the intent rules file into the engine when it changes."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._mtime: float | None = None

    def refresh(self, engine: TutorEngine) -> None:
        try:
            mtime = self.path.stat().st_mtime
        except OSError:
            return  # keep the last good rules
        if mtime != self._mtime:
            engine.rules = IntentRules.from_file(self.path)
            self._mtime = mtime


def create_app(engine: TutorEngine, store: SessionStore, intent_rules_path: str | None = None):
    """FastAPI application over a ready engine and session store."""
    from fastapi import FastAPI, Request
    from fastapi.exceptions import RequestValidationError
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse

    app = FastAPI(title="kite", docs_url=None, redoc_url=None)
    # the chat client is a static-origin SPA talking to this API directly
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    rules_watcher = RulesWatcher(intent_rules_path) if intent_rules_path else None

    _STATUS_BY_CODE = {
        "unknown_session": 404,
        "empty_query": 400,
        "empty_answer": 400,
        "validation": 400,
    }

    def error_body(code: str, message: str) -> dict:
        return {"error": {"code": code, "message": message}}

    @app.exception_handler(KiteError)
    async def kite_error_handler(request: Request, exc: KiteError):
        status = _STATUS_BY_CODE.get(exc.code, 502 if isinstance(exc, ProviderError) else 500)
        return JSONResponse(status_code=status, content=error_body(exc.code, str(exc)))

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content=error_body("validation", str(exc.errors())))

    from starlette.exceptions import HTTPException as StarletteHTTPException

    @app.exception_handler(StarletteHTTPException)
    async def http_error_handler(request: Request, exc: StarletteHTTPException):
        return JSONResponse(
            status_code=exc.status_code, content=error_body("http", str(exc.detail))
        )

    @app.get("/health")
    def health():
        providers = {}
        clients = getattr(engine, "clients", None) or {
            "generator": engine.generator,
            "embedder": engine.embedder,
            "reranker": engine.reranker,
        }
        for role, client in clients.items():
            providers[role] = {
                "implementation": type(client).__name__,
                "reachable": bool(getattr(client, "ping", lambda: True)()),
            }
        return {
            "status": "ok",
            "index": {"chunks": engine.bundle.count, "dim": engine.bundle.dim},
            "sessions": len(store.session_ids()),
            "providers": providers,
        }

    @app.post("/sessions", status_code=201)
    def create_session():
        session = store.create()
        return {"session_id": session.session_id}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        return {
            "session_id": session.session_id,
            "summary": session.summary,
            "turns": [
                {"query": t.query, "intent": t.intent.value, "hints_given": t.hints_given}
                for t in session.turns
            ],
        }

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        return store.export(session_id)

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageIn):
        if rules_watcher is not None:
            rules_watcher.refresh(engine)
        session = store.get(session_id)
        with store.lock(session_id):
            outcome = engine.ask(body.query, session)
            store.record_turn(session)
        payload = outcome.response.to_dict()
        payload["routing"] = outcome.routing
        payload["retrieval"] = [c.provenance() for c in outcome.candidates]
        return payload

    @app.post("/evaluate-answer")
    def evaluate(body: EvaluateIn):
        response, candidates = engine.evaluate_answer(body.question, body.student_answer)
        payload = response.to_dict()
        payload["retrieval"] = [c.provenance() for c in candidates]
        return payload

    return app


def serve(config: AppConfig) -> None:
    """Run the HTTP service until interrupted. Startup failures raise."""
    import uvicorn

    engine = engine_from_config(config)
    store = SessionStore(config.session_dir)
    app = create_app(engine, store, intent_rules_path=config.intent_rules_path)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
