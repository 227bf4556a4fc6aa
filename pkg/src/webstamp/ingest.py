"""Retrieval and canonicalization of web articles.

The whole system hinges on one property: fetching the same unchanged
page twice must canonicalize to byte-identical text, otherwise content
hashes drift and every downstream comparison reports phantom changes.
Extraction is therefore a pure function over the response bytes with a
fixed rule set:

1. decode using the declared charset, else a sniffed one, else UTF-8;
2. drop non-content subtrees (script/style/nav/iframe and friends);
3. keep the candidate block with the highest text density, scored by
   integer arithmetic (text length against link-text length) so there
   are no float or ordering ambiguities;
4. normalize: NFC, whitespace runs collapsed to single spaces, blocks
   joined by single newlines, no carriage returns.

The normalization step is idempotent: feeding canonical text back in
returns it unchanged.
"""

from __future__ import annotations

import ipaddress
import re
import socket
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from html.parser import HTMLParser
from typing import Callable, Optional
from urllib.parse import urlsplit

from .stampcore import utc_now

DEFAULT_TIMEOUT = 15.0
DIRECT = "direct"

# Countries probed by the default block map, ISO 3166-1 alpha-2.
DEFAULT_BLOCK_MAP_COUNTRIES = [
    "AT", "BD", "BR", "CH", "CN", "DE", "DK", "EG", "ES", "FI",
    "FR", "GB", "ID", "IN", "IR", "IT", "JP", "KR", "MX", "NL",
    "NO", "PK", "PL", "RU", "SA", "SE", "TH", "TR", "UA", "US",
    "VN",
]

# STW_<COUNTRY>_PROXY environment names use these legacy country words.
_ENV_COUNTRY_NAMES = {
    "CHINA": "CN",
    "USA": "US",
    "UK": "GB",
    "RUSSIA": "RU",
    "GERMANY": "DE",
}

_ENV_PROXY_RE = re.compile(r"^STW_([A-Z]+)_PROXY$")


class MalformedUrlError(ValueError):
    """The given URL cannot be fetched at all (an input error)."""


class ExtractionError(Exception):
    """The response bytes could not be turned into canonical text."""


class TransportTimeout(Exception):
    pass


class TransportUnreachable(Exception):
    pass


class FetchStatus(str, Enum):
    OK = "ok"
    HTTP_ERROR = "http_error"
    UNREACHABLE = "unreachable"
    TIMEOUT = "timeout"


@dataclass
class FetchResult:
    url: str
    status: FetchStatus
    http_code: Optional[int] = None
    body: bytes = b""
    declared_encoding: Optional[str] = None
    fetched_at: datetime = field(default_factory=utc_now)
    via_country: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == FetchStatus.OK


def validate_url(url: str) -> str:
    parts = urlsplit(url.strip())
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise MalformedUrlError(f"not a fetchable http(s) URL: {url!r}")
    return url.strip()


# ---------------------------------------------------------------------------
# transports


class RequestsTransport:
    """Real HTTP transport; optionally tunnels through an HTTP proxy."""

    USER_AGENT = "webstamp/0.1"

    def get(self, url: str, proxy: Optional[str], timeout: float) -> tuple[int, bytes, Optional[str]]:
        import requests

        proxies = None
        if proxy:
            endpoint = proxy if "://" in proxy else f"http://{proxy}"
            proxies = {"http": endpoint, "https": endpoint}
        try:
            resp = requests.get(
                url,
                timeout=timeout,
                proxies=proxies,
                headers={"User-Agent": self.USER_AGENT},
            )
        except requests.Timeout as exc:
            raise TransportTimeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise TransportUnreachable(str(exc)) from exc
        return resp.status_code, resp.content, _charset_from_content_type(
            resp.headers.get("Content-Type", "")
        )


def _charset_from_content_type(value: str) -> Optional[str]:
    m = re.search(r"charset=[\"']?([A-Za-z0-9_.:-]+)", value)
    return m.group(1) if m else None


# ---------------------------------------------------------------------------
# proxy registry


@dataclass
class ProxyRegistry:
    """Proxy endpoints per country.

    ``entries`` maps an ISO country code to an ordered endpoint list;
    the sentinel ``"direct"`` means "fetch from here, no proxy", which
    is how the server's own location is expressed.  Every configured
    country has at least one endpoint.
    """

    entries: dict[str, list[str]] = field(default_factory=dict)
    quorum_size: int = 3

    def __post_init__(self) -> None:
        for country, endpoints in self.entries.items():
            if not endpoints:
                self.entries[country] = [DIRECT]

    def countries(self) -> list[str]:
        return sorted(self.entries)

    def endpoints_for(self, country: str) -> list[str]:
        try:
            return self.entries[country.upper()]
        except KeyError:
            raise KeyError(f"no proxies registered for country {country!r}")

    def add(self, country: str, endpoint: str) -> None:
        self.entries.setdefault(country.upper(), []).append(endpoint)

    @classmethod
    def from_env(cls, environ, quorum_size: int = 3) -> "ProxyRegistry":
        """Read STW_<COUNTRY>_PROXY variables (value ``host:port``)."""
        reg = cls(entries={"DE": [DIRECT]}, quorum_size=quorum_size)
        for name, value in sorted(environ.items()):
            m = _ENV_PROXY_RE.match(name)
            if not m or not value.strip():
                continue
            word = m.group(1)
            code = _ENV_COUNTRY_NAMES.get(word, word if len(word) == 2 else None)
            if code is None:
                continue
            for endpoint in value.split(","):
                endpoint = endpoint.strip()
                if endpoint:
                    reg.add(code, endpoint)
        return reg

    @classmethod
    def from_file(cls, path: str, quorum_size: int = 3) -> "ProxyRegistry":
        """Load ``COUNTRY host:port`` lines; '#' starts a comment."""
        reg = cls(quorum_size=quorum_size)
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError(f"bad registry line: {raw.rstrip()!r}")
                reg.add(parts[0], parts[1])
        return reg


# ---------------------------------------------------------------------------
# fetching


class Fetcher:
    """Fetches pages directly or through per-country proxies.

    Network failure is data here, not an exception: callers always get
    a FetchResult whose status says what happened.  Only malformed
    URLs raise, since those are caller errors.
    """

    def __init__(
        self,
        transport=None,
        timeout: float = DEFAULT_TIMEOUT,
        retries: int = 1,
        now: Callable[[], datetime] = utc_now,
    ):
        self.transport = transport if transport is not None else RequestsTransport()
        self.timeout = timeout
        self.retries = retries
        self.now = now

    def _get(self, url: str, proxy: Optional[str]) -> FetchResult:
        try:
            code, body, enc = self.transport.get(url, proxy, self.timeout)
        except TransportTimeout:
            return FetchResult(url=url, status=FetchStatus.TIMEOUT, fetched_at=self.now())
        except TransportUnreachable:
            return FetchResult(url=url, status=FetchStatus.UNREACHABLE, fetched_at=self.now())
        if code >= 400 or not body:
            # an OK status with an empty payload leaves nothing to stamp
            return FetchResult(
                url=url, status=FetchStatus.HTTP_ERROR, http_code=code, fetched_at=self.now()
            )
        return FetchResult(
            url=url,
            status=FetchStatus.OK,
            http_code=code,
            body=body,
            declared_encoding=enc,
            fetched_at=self.now(),
        )

    def fetch(self, url: str) -> FetchResult:
        """Direct fetch with one retry on transient failure."""
        url = validate_url(url)
        result = self._get(url, None)
        attempts = self.retries
        while not result.ok and result.status != FetchStatus.HTTP_ERROR and attempts > 0:
            attempts -= 1
            result = self._get(url, None)
        return result

    def fetch_via(self, url: str, country: str, registry: ProxyRegistry) -> FetchResult:
        """Fetch as seen from ``country``.

        Tries up to ``quorum_size`` of the country's endpoints in
        order and returns the first success.  The result reports
        failure only if every tried endpoint failed, which is the
        evidence bar for calling a page blocked.
        """
        url = validate_url(url)
        endpoints = registry.endpoints_for(country)[: registry.quorum_size]
        last = None
        for endpoint in endpoints:
            if endpoint == DIRECT:
                result = self._get(url, None)
            else:
                result = self._get(url, endpoint)
            result.via_country = country.upper()
            if result.ok:
                return result
            last = result
        assert last is not None
        return last


# ---------------------------------------------------------------------------
# HTML document model


_VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}

# subtrees that never contribute content
_KILL_TAGS = {
    "script", "style", "noscript", "iframe", "nav", "head", "header",
    "footer", "aside", "form", "svg", "canvas", "template", "button",
    "select", "option", "label",
}

# tags that open a new text block in the canonical output
_BLOCK_TAGS = {
    "p", "div", "h1", "h2", "h3", "h4", "h5", "h6", "li", "ul", "ol",
    "table", "tr", "blockquote", "pre", "article", "section", "main",
    "figure", "figcaption", "dt", "dd", "hr", "br", "body",
}

_CANDIDATE_TAGS = {"body", "main", "article", "div", "section", "td"}


class _Node:
    __slots__ = ("tag", "children", "order")

    def __init__(self, tag: str, order: int):
        self.tag = tag
        self.children: list = []  # _Node or str
        self.order = order


# tags that legitimately live inside <head>; anything else force-closes
# an unclosed head the way browsers do
_HEAD_ONLY_TAGS = {"meta", "link", "base", "style", "script", "noscript", "title"}


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = _Node("#root", 0)
        self.stack = [self.root]
        self.counter = 0
        self.title_parts: list[str] = []
        self._title_depth = 0

    def _implicit_close_head(self, tag: str) -> None:
        if tag in _HEAD_ONLY_TAGS:
            return
        for i, node in enumerate(self.stack):
            if node.tag == "head":
                del self.stack[i:]
                return

    def handle_starttag(self, tag, attrs):
        if tag == "title":
            self._title_depth += 1
            return
        self._implicit_close_head(tag)
        self.counter += 1
        node = _Node(tag, self.counter)
        self.stack[-1].children.append(node)
        if tag not in _VOID_TAGS:
            self.stack.append(node)

    def handle_startendtag(self, tag, attrs):
        if tag == "title":
            return
        self.counter += 1
        self.stack[-1].children.append(_Node(tag, self.counter))

    def handle_endtag(self, tag):
        if tag == "title":
            self._title_depth = max(0, self._title_depth - 1)
            return
        if tag in _VOID_TAGS:
            return
        # close the nearest matching open tag; ignore strays
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                break

    def handle_data(self, data):
        if self._title_depth > 0:
            self.title_parts.append(data)
            return
        if data:
            self.stack[-1].children.append(data)


def _parse_html(text: str) -> tuple[_Node, str]:
    builder = _TreeBuilder()
    builder.feed(text)
    builder.close()
    return builder.root, "".join(builder.title_parts)


def _strip_killed(node: _Node) -> None:
    kept = []
    for child in node.children:
        if isinstance(child, _Node):
            if child.tag in _KILL_TAGS:
                continue
            _strip_killed(child)
        kept.append(child)
    node.children = kept


def _measure(node: _Node, in_link: bool, totals: dict) -> tuple[int, int]:
    """Per-node (text_chars, link_text_chars), cached in ``totals``."""
    text = 0
    link = 0
    for child in node.children:
        if isinstance(child, str):
            length = len("".join(child.split()))
            text += length
            if in_link:
                link += length
        else:
            t, l = _measure(child, in_link or child.tag == "a", totals)
            text += t
            link += l
    totals[id(node)] = (text, link)
    return text, link


def _candidates(node: _Node, depth: int, out: list) -> None:
    if node.tag in _CANDIDATE_TAGS:
        out.append((node, depth))
    for child in node.children:
        if isinstance(child, _Node):
            _candidates(child, depth + 1, out)


def _select_main(root: _Node) -> _Node:
    """Readability-style pick: densest text block, links discounted.

    Integer score 4*text - 7*link_text punishes link farms (menus,
    related-article boxes) while leaving prose nearly untouched.  Ties
    go to the deeper, earlier candidate so an article wrapper beats
    the whole page when they share the same text.
    """
    totals: dict = {}
    _measure(root, False, totals)
    found: list[tuple[_Node, int]] = []
    _candidates(root, 0, found)
    if not found:
        return root
    best = None
    best_key = None
    for node, depth in found:
        text, link = totals[id(node)]
        score = 4 * text - 7 * link
        key = (score, depth, -node.order)
        if best_key is None or key > best_key:
            best, best_key = node, key
    if best is None or totals[id(best)][0] == 0:
        return root
    return best


def _emit_blocks(node: _Node, blocks: list[list[str]]) -> None:
    for child in node.children:
        if isinstance(child, str):
            if not blocks:
                blocks.append([])
            blocks[-1].append(child)
        else:
            if child.tag in _BLOCK_TAGS:
                blocks.append([])
                _emit_blocks(child, blocks)
                blocks.append([])
            else:
                _emit_blocks(child, blocks)


# ---------------------------------------------------------------------------
# canonicalization


def canonicalize_text(text: str) -> str:
    """Normalize extracted text; idempotent by construction.

    NFC-normalizes, collapses every whitespace run inside a line to a
    single space, and joins non-empty lines with single newlines.
    """
    text = unicodedata.normalize("NFC", text)
    lines = []
    for line in text.split("\n"):
        collapsed = " ".join(line.split())
        if collapsed:
            lines.append(collapsed)
    return "\n".join(lines)


_META_CHARSET_RE = re.compile(
    rb"""<meta[^>]+charset\s*=\s*["']?([A-Za-z0-9_.:-]+)""", re.IGNORECASE
)


def _sniff_encoding(body: bytes) -> Optional[str]:
    if body.startswith(b"\xef\xbb\xbf"):
        return "utf-8-sig"
    m = _META_CHARSET_RE.search(body[:2048])
    if m:
        return m.group(1).decode("ascii", "replace")
    return None


def _decode(body: bytes, declared: Optional[str]) -> str:
    tried = []
    for name in (declared, _sniff_encoding(body), "utf-8"):
        if not name or name.lower() in tried:
            continue
        tried.append(name.lower())
        try:
            return body.decode(name)
        except (UnicodeDecodeError, LookupError):
            continue
    raise ExtractionError(
        f"undecodable response bytes (tried {', '.join(tried) or 'utf-8'})"
    )


@dataclass(frozen=True)
class CanonicalDocument:
    """Extracted article: the unit that gets hashed and stamped."""

    source_url: str
    web_title: str
    canonical_text: str
    extracted_at: datetime

    def to_json(self) -> dict:
        from .stampcore import rfc3339

        return {
            "source_url": self.source_url,
            "web_title": self.web_title,
            "canonical_text": self.canonical_text,
            "extracted_at": rfc3339(self.extracted_at),
        }


def extract_title(raw_title: str, hint: Optional[str] = None) -> str:
    """Page title: text before the first '|' separator, else the hint."""
    cleaned = " ".join(raw_title.split("|")[0].split())
    if cleaned:
        return cleaned
    return " ".join((hint or "").split())


def extract_article(
    body: bytes,
    declared_encoding: Optional[str] = None,
    source_url: str = "",
    title_hint: Optional[str] = None,
    now: Callable[[], datetime] = utc_now,
) -> CanonicalDocument:
    """Turn response bytes into a canonical article document.

    Pure in everything that reaches the content hash: the same bytes
    always map to the same canonical text, regardless of when or where
    extraction runs.
    """
    if not body:
        raise ExtractionError("empty response body")
    decoded = _decode(body, declared_encoding)
    root, raw_title = _parse_html(decoded)
    _strip_killed(root)
    main = _select_main(root)
    blocks: list[list[str]] = []
    _emit_blocks(main, blocks)
    lines = []
    for block in blocks:
        joined = " ".join(" ".join(part.split()) for part in block if part.strip())
        if joined:
            lines.append(joined)
    canonical = canonicalize_text("\n".join(lines))
    if not canonical:
        raise ExtractionError("no textual content found")
    return CanonicalDocument(
        source_url=source_url,
        web_title=extract_title(raw_title, title_hint),
        canonical_text=canonical,
        extracted_at=now(),
    )


# ---------------------------------------------------------------------------
# geolocation


class LocationUnavailable(Exception):
    """No provider could place the host; caller decides how to degrade."""


@dataclass(frozen=True)
class GeoLocation:
    host_ip: str
    country: str
    latitude: float
    longitude: float
    resolved_at: datetime


class FixtureGeoProvider:
    """Offline provider backed by ``CIDR country lat lon`` lines."""

    def __init__(self, path: str):
        self.networks: list[tuple[ipaddress._BaseNetwork, str, float, float]] = []
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                cidr, country, lat, lon = line.split()
                self.networks.append(
                    (ipaddress.ip_network(cidr), country.upper(), float(lat), float(lon))
                )

    def resolve(self, ip: str) -> Optional[GeoLocation]:
        addr = ipaddress.ip_address(ip)
        for network, country, lat, lon in self.networks:
            if addr in network:
                return GeoLocation(
                    host_ip=ip,
                    country=country,
                    latitude=lat,
                    longitude=lon,
                    resolved_at=utc_now(),
                )
        return None


class RemoteGeoProvider:
    """freegeoip-style JSON lookup; production path, not exercised in tests."""

    def __init__(self, base_url: str, timeout: float = 10.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def resolve(self, ip: str) -> Optional[GeoLocation]:
        import requests

        try:
            resp = requests.get(f"{self.base_url}/{ip}", timeout=self.timeout)
        except requests.RequestException:
            return None
        if resp.status_code != 200:
            return None
        doc = resp.json()
        country = (doc.get("country_code") or "").upper()
        if not country:
            return None
        return GeoLocation(
            host_ip=ip,
            country=country,
            latitude=float(doc.get("latitude") or 0.0),
            longitude=float(doc.get("longitude") or 0.0),
            resolved_at=utc_now(),
        )


def _host_ip(host: str) -> str:
    try:
        ipaddress.ip_address(host)
        return host
    except ValueError:
        pass
    try:
        return socket.gethostbyname(host)
    except OSError as exc:
        raise LocationUnavailable(f"cannot resolve host {host!r}") from exc


def lookup_location(host: str, cache, provider) -> GeoLocation:
    """Place a host, asking the cache before the provider.

    ``cache`` offers ``get_location(host)`` and ``put_location(host,
    GeoLocation)``; a repeat lookup for a cached host never reaches the
    provider.
    """
    cached = cache.get_location(host)
    if cached is not None:
        return cached
    ip = _host_ip(host)
    location = provider.resolve(ip)
    if location is None:
        raise LocationUnavailable(f"no location known for {host!r} ({ip})")
    cache.put_location(host, location)
    return location
