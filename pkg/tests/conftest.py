from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from priveshield.tracksim import World

T0 = datetime(2024, 6, 3, 8, 0, 0, tzinfo=timezone.utc)


def at(seconds: float) -> datetime:
    return T0 + timedelta(seconds=seconds)


SMALL_WORLD = {
    "version": 1,
    "sites": [
        {
            "host": "shopa.example",
            "kind": "ecommerce",
            "category": "running_shoes",
            "embedded": ["dsp-one.example"],
        },
        {
            "host": "shopb.example",
            "kind": "ecommerce",
            "category": "jewelry",
            "embedded": ["dsp-two.example"],
        },
        {"host": "pub.example", "kind": "publisher", "embedded": ["ssp-x.example"]},
    ],
    "ssps": [
        {
            "host": "ssp-x.example",
            "partners": [
                {"dsp": "dsp-one.example", "buyer_id": "b1"},
                {"dsp": "dsp-two.example", "buyer_id": "b2"},
            ],
        }
    ],
    "dsps": [{"host": "dsp-one.example"}, {"host": "dsp-two.example"}],
}


@pytest.fixture
def small_world() -> World:
    return World.from_dict(SMALL_WORLD)
