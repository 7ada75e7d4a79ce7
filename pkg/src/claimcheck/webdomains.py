"""Registrable-domain extraction for evidence URLs.

Evidence filtering and source-exclusion policies operate at site granularity,
so hosts are reduced to their registrable domain (``sub.news.example.co.uk``
-> ``example.co.uk``). A compact embedded list of common multi-part public
suffixes keeps this offline and dependency-free; it is not the full public
suffix list, but covers the suffixes that show up in news/search results.
"""
from __future__ import annotations

import ipaddress
from urllib.parse import urlsplit

# Common second-level public suffixes. One entry per suffix, no leading dot.
_MULTI_PART_SUFFIXES = frozenset({
    "ac.uk", "co.uk", "gov.uk", "ltd.uk", "me.uk", "net.uk", "org.uk", "plc.uk",
    "com.au", "net.au", "org.au", "edu.au", "gov.au", "id.au",
    "co.jp", "ne.jp", "or.jp", "ac.jp", "go.jp",
    "co.in", "net.in", "org.in", "gen.in", "firm.in",
    "co.nz", "net.nz", "org.nz", "govt.nz",
    "com.br", "net.br", "org.br", "gov.br",
    "com.mx", "org.mx", "gob.mx",
    "com.cn", "net.cn", "org.cn", "gov.cn",
    "com.tr", "org.tr", "gov.tr",
    "com.sg", "org.sg", "gov.sg",
    "com.hk", "org.hk", "gov.hk",
    "co.kr", "or.kr", "go.kr",
    "co.za", "org.za", "gov.za",
    "com.ar", "com.co", "com.eg", "com.my", "com.ng", "com.pk", "com.ph",
    "com.sa", "com.tw", "com.ua", "com.vn",
})


def registrable_domain(url_or_host: str) -> str:
    """Return the lowercase registrable domain of a URL or bare host.

    Accepts full URLs, scheme-less hosts, and hosts with ports. IP
    addresses and single-label hosts are returned as-is (lowercased).
    Idempotent: ``registrable_domain(registrable_domain(u)) ==
    registrable_domain(u)``.
    """
    raw = url_or_host.strip()
    if not raw:
        return ""
    if "//" in raw:
        host = urlsplit(raw).hostname or ""
    else:
        # Bare host, possibly with port or trailing path.
        host = raw.split("/", 1)[0].rsplit("@", 1)[-1]
        if host.count(":") == 1:  # host:port (bracketed IPv6 handled below)
            host = host.split(":", 1)[0]
    host = host.strip("[]").rstrip(".").lower()
    if not host:
        return ""
    try:
        ipaddress.ip_address(host)
        return host
    except ValueError:
        pass
    labels = host.split(".")
    if len(labels) <= 2:
        return host
    if ".".join(labels[-2:]) in _MULTI_PART_SUFFIXES:
        return ".".join(labels[-3:])
    return ".".join(labels[-2:])
