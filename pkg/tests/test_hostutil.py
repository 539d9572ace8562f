from priveshield.hostutil import (
    domain_match,
    host_of_url,
    normalize_host,
    path_match,
    registrable_domain,
    same_registrable_domain,
)


def test_normalize_strips_www_case_and_trailing_dot():
    assert normalize_host("WWW.Nike.Example.") == "nike.example"
    assert normalize_host("shop.nike.example") == "shop.nike.example"


def test_host_of_url():
    assert host_of_url("https://www.nike.example/shoes?x=1") == "nike.example"


def test_registrable_domain_two_labels():
    assert registrable_domain("shop.nike.example") == "nike.example"
    assert registrable_domain("nike.example") == "nike.example"
    assert registrable_domain("a.b.c.nike.example") == "nike.example"


def test_registrable_domain_multi_label_suffix():
    assert registrable_domain("news.bbc.co.uk") == "bbc.co.uk"


def test_same_registrable_domain():
    assert same_registrable_domain("shop.nike.example", "nike.example")
    assert not same_registrable_domain("nike.example", "cnn.example")


def test_domain_match_suffix_rules():
    assert domain_match(".nike.example", "nike.example")
    assert domain_match(".nike.example", "shop.nike.example")
    assert domain_match("nike.example", "nike.example")
    assert not domain_match(".nike.example", "cnn.example")
    assert not domain_match(".shop.nike.example", "nike.example")
    assert not domain_match(".ike.example", "nike.example")  # no partial labels


def test_path_match_segment_boundaries():
    assert path_match("/", "/anything")
    assert path_match("/shop", "/shop")
    assert path_match("/shop", "/shop/cart")
    assert path_match("/shop/", "/shop/cart")
    assert not path_match("/shop", "/shopping")
    assert not path_match("/shop/cart", "/shop")
