import random
from datetime import timedelta

import pytest

from priveshield.catalog import ProfileCatalog, ProfileKind
from priveshield.errors import ProfileNotFoundError, ScopeViolationError
from priveshield.store import (
    CookieRecord,
    StoragePartition,
    activate,
    flush,
    get_cookies,
    set_cookie,
    switch,
    wipe,
)

from conftest import T0, at


def fresh_catalog():
    catalog = ProfileCatalog.bootstrap(T0, category_labels=[])
    p1 = catalog.create_profile(ProfileKind.REGULAR, "nike.example", T0)
    p2 = catalog.create_profile(ProfileKind.REGULAR, "cnn.example", T0)
    return catalog, p1, p2


def test_first_party_cookie_flagged():
    catalog, p1, _ = fresh_catalog()
    ctx = activate(catalog, p1)
    set_cookie(ctx, "nike.example", CookieRecord("sid", "1", domain=".nike.example"))
    (cookie,) = get_cookies(ctx, "https://nike.example/", "nike.example")
    assert cookie.third_party is False
    assert cookie.set_by == "nike.example"


def test_third_party_cookie_flagged():
    catalog, p1, _ = fresh_catalog()
    ctx = activate(catalog, p1)
    set_cookie(
        ctx,
        "nike.example",
        CookieRecord("uid", "x", domain=".dsp.example"),
        setter_host="dsp.example",
    )
    (cookie,) = get_cookies(ctx, "https://dsp.example/pixel", "nike.example")
    assert cookie.third_party is True
    assert cookie.set_by == "nike.example"


def test_cross_domain_set_is_scope_violation():
    catalog, p1, _ = fresh_catalog()
    ctx = activate(catalog, p1)
    with pytest.raises(ScopeViolationError):
        set_cookie(ctx, "nike.example", CookieRecord("sid", "1", domain=".cnn.example"))


def test_subdomain_setter_may_use_parent_scope():
    catalog, p1, _ = fresh_catalog()
    ctx = activate(catalog, p1)
    set_cookie(
        ctx,
        "nike.example",
        CookieRecord("sid", "1", domain=".nike.example"),
        setter_host="shop.nike.example",
    )
    assert get_cookies(ctx, "https://shop.nike.example/", "nike.example")


def test_get_cookies_filters_expired():
    catalog, p1, _ = fresh_catalog()
    ctx = activate(catalog, p1)
    set_cookie(
        ctx,
        "nike.example",
        CookieRecord("old", "1", domain=".nike.example", expires=at(10)),
    )
    set_cookie(
        ctx,
        "nike.example",
        CookieRecord("new", "1", domain=".nike.example", expires=at(1000)),
    )
    names = {c.name for c in get_cookies(ctx, "https://nike.example/", "nike.example", now=at(10))}
    assert names == {"new"}


def test_get_cookies_respects_path():
    catalog, p1, _ = fresh_catalog()
    ctx = activate(catalog, p1)
    set_cookie(ctx, "nike.example", CookieRecord("a", "1", domain=".nike.example", path="/shop"))
    set_cookie(ctx, "nike.example", CookieRecord("b", "1", domain=".nike.example", path="/"))
    names = {c.name for c in get_cookies(ctx, "https://nike.example/shop/cart", "nike.example")}
    assert names == {"a", "b"}
    names = {c.name for c in get_cookies(ctx, "https://nike.example/other", "nike.example")}
    assert names == {"b"}


def test_overwrite_keyed_by_name_domain_path():
    catalog, p1, _ = fresh_catalog()
    ctx = activate(catalog, p1)
    set_cookie(ctx, "nike.example", CookieRecord("sid", "old", domain=".nike.example"))
    set_cookie(ctx, "nike.example", CookieRecord("sid", "new", domain=".nike.example"))
    (cookie,) = get_cookies(ctx, "https://nike.example/", "nike.example")
    assert cookie.value == "new"


def test_switch_isolates_and_restores():
    catalog, p1, p2 = fresh_catalog()
    ctx = activate(catalog, p1)
    set_cookie(ctx, "nike.example", CookieRecord("sid", "1", domain=".nike.example"))
    ctx = switch(ctx, p2, catalog)
    assert get_cookies(ctx, "https://nike.example/", "nike.example") == []
    ctx = switch(ctx, p1, catalog)
    (cookie,) = get_cookies(ctx, "https://nike.example/", "nike.example")
    assert cookie.value == "1"


def test_self_switch_is_noop():
    catalog, p1, _ = fresh_catalog()
    ctx = activate(catalog, p1)
    set_cookie(ctx, "nike.example", CookieRecord("sid", "1", domain=".nike.example"))
    same = switch(ctx, p1, catalog)
    assert same is ctx
    assert len(same.live_partition.cookies) == 1


def test_switch_unknown_target():
    catalog, p1, _ = fresh_catalog()
    ctx = activate(catalog, p1)
    with pytest.raises(ProfileNotFoundError):
        switch(ctx, "p-9999", catalog)


def test_switch_backs_up_mid_session_writes():
    catalog, p1, p2 = fresh_catalog()
    ctx = activate(catalog, p1)
    set_cookie(ctx, "nike.example", CookieRecord("sid", "1", domain=".nike.example"))
    switch(ctx, p2, catalog)
    stored = catalog.get(p1).partition
    assert ("sid", "nike.example", "/") in stored.cookies


def test_wipe():
    catalog, p1, _ = fresh_catalog()
    ctx = activate(catalog, p1)
    set_cookie(ctx, "nike.example", CookieRecord("sid", "1", domain=".nike.example"))
    flush(ctx, catalog)
    wipe(catalog, p1)
    assert catalog.get(p1).partition.is_empty()
    ctx = activate(catalog, p1)
    assert get_cookies(ctx, "https://nike.example/", "nike.example") == []
    with pytest.raises(ProfileNotFoundError):
        wipe(catalog, "p-9999")


def test_partition_dump_sorted_and_round_trips():
    part = StoragePartition()
    for name, domain in [("b", ".z.example"), ("a", ".a.example"), ("c", ".a.example")]:
        record = CookieRecord(name, "v", domain=domain, set_by="a.example")
        part.cookies[record.key] = record
    part.local_storage[("a.example", "k")] = "v"
    part.cache_marker.add("a.example")
    dumped = part.to_dict()
    keys = [(c["domain"], c["path"], c["name"]) for c in dumped["cookies"]]
    assert keys == sorted(keys)
    assert StoragePartition.from_dict(dumped).to_dict() == dumped


# -- reference-model oracle ---------------------------------------------------


def _ref_domain_match(cookie_domain: str, host: str) -> bool:
    dom = cookie_domain.lstrip(".").lower()
    return host == dom or host.endswith("." + dom)


class ReferenceJars:
    """Plain per-profile cookie maps, written independently of the store."""

    def __init__(self, profile_ids, active):
        self.jars = {pid: {} for pid in profile_ids}
        self.active = active

    def set(self, name, domain, value):
        self.jars[self.active][(name, domain.lstrip("."))] = value

    def visible(self, request_host):
        return sorted(
            (name, dom, value)
            for (name, dom), value in self.jars[self.active].items()
            if _ref_domain_match(dom, request_host)
        )


def run_trace(seed: int, steps: int) -> None:
    rng = random.Random(seed)
    catalog = ProfileCatalog.bootstrap(T0, category_labels=[])
    hosts = [f"site{i}.example" for i in range(6)]
    trackers = [f"track{i}.example" for i in range(4)]
    pids = [catalog.create_profile(ProfileKind.REGULAR, h, T0) for h in hosts]
    ctx = activate(catalog, pids[0])
    ref = ReferenceJars(pids, pids[0])

    for _ in range(steps):
        op = rng.random()
        if op < 0.45:
            doc = rng.choice(hosts)
            if rng.random() < 0.5:
                domain, setter = f".{doc}", None
            else:
                tracker = rng.choice(trackers)
                domain, setter = f".{tracker}", tracker
            name = f"c{rng.randrange(4)}"
            value = f"v{rng.randrange(1000)}"
            set_cookie(ctx, doc, CookieRecord(name, value, domain=domain), setter_host=setter)
            ref.set(name, domain, value)
        elif op < 0.8:
            target = rng.choice(hosts + trackers)
            got = sorted(
                (c.name, c.key[1], c.value)
                for c in get_cookies(ctx, f"https://{target}/", rng.choice(hosts))
            )
            assert got == ref.visible(target), f"leak at seed={seed}"
        else:
            target = rng.choice(pids)
            ctx = switch(ctx, target, catalog)
            ref.active = target

    flush(ctx, catalog)
    for pid in pids:
        stored = sorted(
            (c.name, c.key[1], c.value) for c in catalog.get(pid).partition.cookies.values()
        )
        expected = sorted(
            (name, dom, value) for (name, dom), value in ref.jars[pid].items()
        )
        assert stored == expected


def test_thousand_step_trace_matches_reference_model():
    run_trace(seed=1234, steps=1000)


def test_conservation_across_switches():
    rng = random.Random(99)
    catalog = ProfileCatalog.bootstrap(T0, category_labels=[])
    pids = [catalog.create_profile(ProfileKind.REGULAR, f"s{i}.example", T0) for i in range(4)]
    ctx = activate(catalog, pids[0])
    written = set()
    for i in range(300):
        if rng.random() < 0.5:
            host = f"s{rng.randrange(4)}.example"
            name = f"c{i}"
            set_cookie(ctx, host, CookieRecord(name, "v", domain=f".{host}"))
            written.add((name, host))
        else:
            ctx = switch(ctx, rng.choice(pids), catalog)
    flush(ctx, catalog)
    everywhere = {
        (c.name, c.key[1])
        for pid in pids
        for c in catalog.get(pid).partition.cookies.values()
    }
    assert written <= everywhere
