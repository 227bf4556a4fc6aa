"""Local network fixtures: a page server, HTTP proxies, fake transports.

Everything binds to 127.0.0.1 on ephemeral ports; no test ever leaves
the machine.
"""

from __future__ import annotations

import socket
import threading
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from webstamp.ingest import TransportTimeout, TransportUnreachable


def closed_port() -> int:
    """A port that was just free; connecting to it gets refused."""
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class _SilentHandler(BaseHTTPRequestHandler):
    def log_message(self, fmt, *args):  # keep test output clean
        pass


class FixtureSite:
    """Tiny origin server; routes are mutable so tests can flip content."""

    def __init__(self):
        site = self

        class Handler(_SilentHandler):
            def do_GET(self):
                entry = site.routes.get(self.path)
                if entry is None:
                    self.send_response(404)
                    self.send_header("Content-Type", "text/html")
                    self.end_headers()
                    self.wfile.write(b"<html><body><p>missing</p></body></html>")
                    return
                code, body, ctype = entry
                self.send_response(code)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.routes: dict[str, tuple[int, bytes, str]] = {}
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.port = self.server.server_address[1]
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def set(self, path: str, body: bytes, code: int = 200, ctype: str = "text/html; charset=utf-8"):
        self.routes[path] = (code, body, ctype)

    def url(self, path: str) -> str:
        return f"http://127.0.0.1:{self.port}{path}"

    def close(self):
        self.server.shutdown()
        self.server.server_close()


class ForwardingProxy:
    """A real (absolute-URI GET) HTTP proxy that fetches the target."""

    def __init__(self):
        class Handler(_SilentHandler):
            def do_GET(self):
                try:
                    with urllib.request.urlopen(self.path, timeout=5) as resp:
                        body = resp.read()
                        code = resp.status
                        ctype = resp.headers.get("Content-Type", "text/html")
                except urllib.error.HTTPError as exc:
                    body = exc.read()
                    code = exc.code
                    ctype = exc.headers.get("Content-Type", "text/html")
                except Exception:
                    self.send_response(502)
                    self.end_headers()
                    return
                self.send_response(code)
                self.send_header("Content-Type", ctype)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.port = self.server.server_address[1]
        self.endpoint = f"127.0.0.1:{self.port}"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


class CannedProxy:
    """A 'proxy' that answers every request with one fixed page.

    Stands in for a country whose view of the web differs from ours.
    """

    def __init__(self, body: bytes, code: int = 200):
        payload = {"body": body, "code": code}

        class Handler(_SilentHandler):
            def do_GET(self):
                self.send_response(payload["code"])
                self.send_header("Content-Type", "text/html; charset=utf-8")
                self.send_header("Content-Length", str(len(payload["body"])))
                self.end_headers()
                self.wfile.write(payload["body"])

        self.payload = payload
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.port = self.server.server_address[1]
        self.endpoint = f"127.0.0.1:{self.port}"
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


class FakeTransport:
    """Dict-driven transport: (url, proxy) -> (code, body, encoding).

    Unknown pairs raise TransportUnreachable; entries may also be set
    to the strings "timeout"/"unreachable" to force those failures.
    """

    def __init__(self):
        self.pages: dict[tuple[str, str | None], object] = {}
        self.calls: list[tuple[str, str | None]] = []

    def set(self, url: str, body: bytes, proxy: str | None = None,
            code: int = 200, encoding: str | None = None):
        self.pages[(url, proxy)] = (code, body, encoding)

    def fail(self, url: str, kind: str = "unreachable", proxy: str | None = None):
        self.pages[(url, proxy)] = kind

    def get(self, url, proxy, timeout):
        self.calls.append((url, proxy))
        entry = self.pages.get((url, proxy))
        if entry is None or entry == "unreachable":
            raise TransportUnreachable(f"no route to ({url}, {proxy})")
        if entry == "timeout":
            raise TransportTimeout(f"timed out ({url}, {proxy})")
        return entry


ARTICLE_TMPL = """<html><head><title>{title}</title></head><body>
<nav><a href="/">Home</a> <a href="/all">All posts</a></nav>
<div class="article"><h1>{title}</h1>
{paragraphs}
</div></body></html>"""


def article_html(title: str, *paragraphs: str) -> bytes:
    joined = "\n".join(f"<p>{p}</p>" for p in paragraphs)
    return ARTICLE_TMPL.format(title=title, paragraphs=joined).encode("utf-8")
