"""Client for the experiment service.

By default the client mounts the FastAPI app in process through a small
synchronous ASGI transport, so the CLI works with no server running and
zero network I/O. Pass a base URL to talk to a remote instance instead.
"""

from __future__ import annotations

import asyncio
from typing import List, Optional, Sequence

import httpx

from .schemas import (
    BenchmarkInfo,
    CompareReport,
    ExperimentResult,
    HealthResponse,
    RunSpec,
    SolveRequest,
    SolveResponse,
)


class ServiceError(RuntimeError):
    """Raised when the service answers with an error status."""

    def __init__(self, status_code: int, detail: str):
        super().__init__(f"service returned {status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous httpx transport that calls an ASGI app directly.

    One request per asyncio.run is plenty for CLI traffic, and it keeps the
    client fully synchronous.
    """

    def __init__(self, app):
        self._app = app

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        return asyncio.run(self._dispatch(request))

    async def _dispatch(self, request: httpx.Request) -> httpx.Response:
        body = request.read()
        scope = {
            "type": "http",
            "asgi": {"version": "3.0", "spec_version": "2.3"},
            "http_version": "1.1",
            "method": request.method,
            "scheme": request.url.scheme,
            "path": request.url.path,
            "raw_path": request.url.raw_path,
            "query_string": request.url.query,
            "root_path": "",
            "headers": [(k.lower(), v) for k, v in request.headers.raw],
            "client": ("127.0.0.1", 0),
            "server": (request.url.host, request.url.port or 80),
        }
        received = {"sent": False}

        async def receive():
            if received["sent"]:
                return {"type": "http.disconnect"}
            received["sent"] = True
            return {"type": "http.request", "body": body, "more_body": False}

        status = {"code": 500}
        headers: list = []
        chunks: list = []

        async def send(message):
            if message["type"] == "http.response.start":
                status["code"] = message["status"]
                headers.extend(message.get("headers", []))
            elif message["type"] == "http.response.body":
                chunks.append(message.get("body", b""))

        await self._app(scope, receive, send)
        return httpx.Response(
            status_code=status["code"],
            headers=headers,
            content=b"".join(chunks),
            request=request,
        )


class ServiceClient:
    def __init__(self, server: Optional[str] = None, timeout: float = 600.0):
        if server is None:
            from .service import create_app

            transport = _InProcessTransport(create_app())
            self._client = httpx.Client(
                transport=transport, base_url="http://lpvmpc.local",
                timeout=timeout,
            )
        else:
            self._client = httpx.Client(base_url=server, timeout=timeout)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _request(self, method: str, path: str, payload=None):
        resp = self._client.request(method, path, json=payload)
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise ServiceError(resp.status_code, str(detail))
        return resp.json()

    def health(self) -> HealthResponse:
        return HealthResponse(**self._request("GET", "/health"))

    def benchmarks(self) -> List[BenchmarkInfo]:
        return [BenchmarkInfo(**b) for b in self._request("GET", "/benchmarks")]

    def solve(self, req: SolveRequest) -> SolveResponse:
        return SolveResponse(
            **self._request("POST", "/solve", req.model_dump())
        )

    def run(self, spec: RunSpec) -> ExperimentResult:
        return ExperimentResult(
            **self._request("POST", "/experiments/run", spec.model_dump())
        )

    def compare(self, specs: Sequence[RunSpec]) -> CompareReport:
        payload = {"specs": [s.model_dump() for s in specs]}
        return CompareReport(
            **self._request("POST", "/experiments/compare", payload)
        )
