"""Runtime settings, sourced from environment variables.

All knobs live in the process environment (12-factor style); an
optional ``KEY=VALUE`` config file can overlay it for CLI use.  Paths
default to subentries of one data directory so a fresh checkout works
with zero configuration.
"""

from __future__ import annotations

import os
import secrets
from dataclasses import dataclass, field
from typing import Mapping, Optional

DEFAULT_SUBJECT_PREFIX = "[StampTheWeb]"
DEFAULT_POSTS_PER_PAGE = 20
DEFAULT_QUORUM_SIZE = 3
DEFAULT_FETCH_TIMEOUT = 15.0
DEFAULT_COUNTRY = "DE"
AUTH_TOKEN_MAX_AGE = 3600  # seconds a login token stays valid


def load_config_file(path: str) -> dict[str, str]:
    """Read ``KEY=VALUE`` lines; '#' comments and blanks are skipped."""
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _db_path_from_url(value: str) -> str:
    # accepts either a bare path or a sqlite:/// URL
    for prefix in ("sqlite:///", "sqlite://"):
        if value.startswith(prefix):
            return value[len(prefix):]
    return value


@dataclass
class Settings:
    data_dir: str
    secret_key: str
    db_path: str
    snapshot_dir: str
    ledger_path: str
    outbox_path: str
    tsa_key_path: str
    server_url: str = "http://localhost:8000"
    mail_server: Optional[str] = None
    mail_port: int = 587
    mail_use_tls: bool = True
    mail_username: Optional[str] = None
    mail_password: Optional[str] = None
    mail_subject_prefix: str = DEFAULT_SUBJECT_PREFIX
    mail_sender: Optional[str] = None
    admin_email: Optional[str] = None
    posts_per_page: int = DEFAULT_POSTS_PER_PAGE
    anchor_url: Optional[str] = None
    anchor_token: Optional[str] = None
    registry_file: Optional[str] = None
    geo_fixture: Optional[str] = None
    geoip_url: Optional[str] = None
    fetch_timeout: float = DEFAULT_FETCH_TIMEOUT
    quorum_size: int = DEFAULT_QUORUM_SIZE
    default_country: str = DEFAULT_COUNTRY
    environ: Mapping[str, str] = field(default_factory=dict, repr=False)

    @classmethod
    def from_env(
        cls,
        environ: Optional[Mapping[str, str]] = None,
        config_file: Optional[str] = None,
    ) -> "Settings":
        env = dict(os.environ if environ is None else environ)
        if config_file:
            # an explicitly passed file wins over inherited environment
            env.update(load_config_file(config_file))

        data_dir = env.get("STW_DATA_DIR", "./webstamp-data")

        def sub(name: str, default_name: str) -> str:
            return env.get(name) or os.path.join(data_dir, default_name)

        db_path = env.get("DEV_DATABASE_URL") or env.get("DATABASE_URL")
        db_path = _db_path_from_url(db_path) if db_path else os.path.join(data_dir, "store.db")

        return cls(
            data_dir=data_dir,
            secret_key=env.get("SECRET_KEY") or secrets.token_hex(32),
            db_path=db_path,
            snapshot_dir=sub("STW_SNAPSHOT_DIR", "snapshots"),
            ledger_path=sub("STW_LEDGER_PATH", "ledger.tsv"),
            outbox_path=sub("STW_OUTBOX_PATH", "outbox.ndjson"),
            tsa_key_path=sub("STW_TSA_KEY", "tsa_key.json"),
            server_url=env.get("SERVER_URL", "http://localhost:8000"),
            mail_server=env.get("MAIL_SERVER"),
            mail_port=int(env.get("MAIL_PORT", "587")),
            mail_use_tls=env.get("MAIL_USE_TLS", "true").lower() in ("1", "true", "yes"),
            mail_username=env.get("MAIL_USERNAME"),
            mail_password=env.get("MAIL_PASSWORD"),
            mail_subject_prefix=env.get("STW_MAIL_SUBJECT_PREFIX", DEFAULT_SUBJECT_PREFIX),
            mail_sender=env.get("STW_MAIL_SENDER"),
            admin_email=env.get("STW_ADMIN"),
            posts_per_page=int(env.get("STW_POSTS_PER_PAGE", str(DEFAULT_POSTS_PER_PAGE))),
            anchor_url=env.get("STW_ANCHOR_URL"),
            anchor_token=env.get("STW_ANCHOR_TOKEN"),
            registry_file=env.get("STW_PROXY_REGISTRY"),
            geo_fixture=env.get("STW_GEO_FIXTURE"),
            geoip_url=env.get("STW_GEOIP_URL"),
            fetch_timeout=float(env.get("STW_FETCH_TIMEOUT", str(DEFAULT_FETCH_TIMEOUT))),
            quorum_size=int(env.get("STW_PROXY_QUORUM", str(DEFAULT_QUORUM_SIZE))),
            default_country=env.get("STW_DEFAULT_COUNTRY", DEFAULT_COUNTRY).upper(),
            environ=env,
        )
