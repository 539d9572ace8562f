import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from priveshield.catalog import ProfileCatalog, ProfileKind, RESOLUTION_ORDER
from priveshield.errors import (
    CannotDeleteDefaultError,
    CatalogFormatError,
    DuplicateProfileError,
    ProfileNotFoundError,
)
from priveshield.store import CookieRecord

from conftest import T0

CATEGORIES = ["news", "streaming", "encyclopedia"]


def make_catalog() -> ProfileCatalog:
    return ProfileCatalog.bootstrap(T0, category_labels=CATEGORIES)


def test_bootstrap_contains_default_and_categories():
    catalog = ProfileCatalog.bootstrap(T0)
    kinds = [p.kind for p in catalog.profiles.values()]
    assert kinds.count(ProfileKind.DEFAULT) == 1
    assert kinds.count(ProfileKind.CATEGORY) == 10


def test_create_regular_naming():
    catalog = make_catalog()
    pid = catalog.create_profile(ProfileKind.REGULAR, "Nike.Example", T0)
    profile = catalog.get(pid)
    assert profile.name == "Regular-nike.example"
    assert profile.member_hosts == {"nike.example"}


def test_create_duplicate_rejected():
    catalog = make_catalog()
    catalog.create_profile(ProfileKind.REGULAR, "nike.example", T0)
    with pytest.raises(DuplicateProfileError):
        catalog.create_profile(ProfileKind.REGULAR, "nike.example", T0)


def test_same_host_different_kinds_allowed():
    catalog = make_catalog()
    catalog.create_profile(ProfileKind.REGULAR, "nike.example", T0)
    catalog.create_profile(ProfileKind.SESSION, "nike.example", T0)
    assert catalog.find(ProfileKind.REGULAR, "nike.example") is not None
    assert catalog.find(ProfileKind.SESSION, "nike.example") is not None


def test_manual_profile_multiple_hosts_and_host_exclusivity():
    catalog = make_catalog()
    catalog.create_manual("work", ["mail.example", "docs.example"], T0)
    assert catalog.by_name("work").member_hosts == {"mail.example", "docs.example"}
    with pytest.raises(DuplicateProfileError):
        catalog.create_manual("other", ["docs.example"], T0)


def test_delete_profile_unresolves_host():
    catalog = make_catalog()
    pid = catalog.create_profile(ProfileKind.REGULAR, "nike.example", T0)
    assert catalog.resolve("nike.example") == pid
    catalog.delete_profile(pid)
    assert catalog.resolve("nike.example") == catalog.default_profile.id


def test_delete_default_refused():
    catalog = make_catalog()
    with pytest.raises(CannotDeleteDefaultError):
        catalog.delete_profile(catalog.default_profile.id)


def test_delete_unknown_id():
    catalog = make_catalog()
    with pytest.raises(ProfileNotFoundError):
        catalog.delete_profile("p-9999")


def test_resolve_priority_manual_over_regular():
    catalog = make_catalog()
    catalog.create_profile(ProfileKind.REGULAR, "nike.example", T0)
    manual = catalog.create_manual("mine", ["nike.example"], T0)
    assert catalog.resolve("nike.example") == manual


def test_resolve_priority_regular_over_session():
    catalog = make_catalog()
    catalog.create_profile(ProfileKind.SESSION, "nike.example", T0)
    regular = catalog.create_profile(ProfileKind.REGULAR, "nike.example", T0)
    assert catalog.resolve("nike.example") == regular


def test_resolve_category_hint_and_membership():
    catalog = make_catalog()
    pid = catalog.resolve("somepaper.example", category_hint="News")
    assert catalog.get(pid).name == "Category-news"
    # remembered: later resolves without a hint stay in the category profile
    assert catalog.resolve("somepaper.example") == pid


def test_resolve_unknown_host_falls_back_to_default():
    catalog = make_catalog()
    assert catalog.resolve("nowhere.example") == catalog.default_profile.id
    assert catalog.resolve("nowhere.example", category_hint="no-such-category") == (
        catalog.default_profile.id
    )


def test_temporary_mode_returns_fresh_profiles():
    catalog = make_catalog()
    catalog.temporary_mode = True
    a = catalog.resolve("nike.example", now=T0)
    b = catalog.resolve("nike.example", now=T0)
    assert a != b
    assert catalog.get(a).kind is ProfileKind.TEMPORARY


def test_save_load_round_trip(tmp_path):
    catalog = make_catalog()
    pid = catalog.create_profile(ProfileKind.REGULAR, "nike.example", T0)
    record = CookieRecord("sid", "1", domain=".nike.example", set_by="nike.example")
    catalog.get(pid).partition.cookies[record.key] = record
    catalog.create_profile(ProfileKind.TEMPORARY, "t1", T0)
    path = tmp_path / "catalog.json"
    catalog.save(path)
    loaded = ProfileCatalog.load(path)
    assert loaded.to_dict() == catalog.to_dict()
    assert all(p.kind is not ProfileKind.TEMPORARY for p in loaded.profiles.values())


def test_save_load_profile_count_by_construction(tmp_path):
    catalog = ProfileCatalog.bootstrap(T0)  # Default + 10 categories
    catalog.create_profile(ProfileKind.REGULAR, "nike.example", T0)
    path = tmp_path / "catalog.json"
    catalog.save(path)
    assert len(ProfileCatalog.load(path).profiles) == 12


def test_load_truncated_file_reports_offset(tmp_path):
    catalog = make_catalog()
    path = tmp_path / "catalog.json"
    catalog.save(path)
    text = path.read_text()
    path.write_text(text[: len(text) // 2])
    with pytest.raises(CatalogFormatError) as err:
        ProfileCatalog.load(path)
    assert err.value.offset > 0


def test_load_rejects_wrong_schema(tmp_path):
    path = tmp_path / "catalog.json"
    path.write_text(json.dumps({"version": 7}))
    with pytest.raises(CatalogFormatError):
        ProfileCatalog.load(path)


# -- properties ---------------------------------------------------------------

KIND_BITS = st.lists(
    st.booleans(), min_size=len(RESOLUTION_ORDER), max_size=len(RESOLUTION_ORDER)
)


@given(membership=KIND_BITS, hint=st.sampled_from([None, "news", "bogus"]))
@settings(max_examples=200, deadline=None)
def test_resolution_hierarchy_totality(membership, hint):
    """resolve() always answers, picking the highest-priority member kind."""
    catalog = make_catalog()
    host = "host.example"
    member_kinds = []
    for kind, member in zip(RESOLUTION_ORDER, membership):
        if not member:
            continue
        member_kinds.append(kind)
        if kind is ProfileKind.MANUAL:
            catalog.create_manual("m", [host], T0)
        elif kind is ProfileKind.CATEGORY:
            catalog.category_profile("news").member_hosts.add(host)
        else:
            catalog.create_profile(kind, host, T0)
    resolved = catalog.get(catalog.resolve(host, category_hint=hint))
    if member_kinds:
        assert resolved.kind is member_kinds[0]
    elif hint == "news":
        assert resolved.name == "Category-news"
    else:
        assert resolved.kind is ProfileKind.DEFAULT


def test_name_uniqueness_under_random_mutation():
    rng = random.Random(42)
    catalog = make_catalog()
    hosts = [f"h{i}.example" for i in range(10)]
    for _ in range(600):
        kind = rng.choice(list(RESOLUTION_ORDER[1:4]))
        host = rng.choice(hosts)
        if rng.random() < 0.65:
            try:
                catalog.create_profile(kind, host, T0)
            except DuplicateProfileError:
                pass
        else:
            existing = catalog.find(kind, host)
            if existing is not None:
                catalog.delete_profile(existing.id)
        names = [p.name for p in catalog.profiles.values()]
        assert len(names) == len(set(names))
