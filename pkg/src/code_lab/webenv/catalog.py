"""The 40 web design primitives.

Templates follow the primitive table of the gMiniWoB benchmark. That table
marks 24 rows active while the benchmark text counts 26 active primitives;
``inpgroup`` (a free-text input) and ``cart`` (which carries a promo-code
box) are treated as active to reach 26.
"""
from __future__ import annotations

from dataclasses import dataclass

TEMPLATES = ("input", "multi-selection", "selection", "button", "link", "label", "navbar",
             "carousel", "deck", "cart", "media", "footer")

SKIP = "SKIP"


class CatalogError(KeyError):
    """Unknown primitive name."""


@dataclass(frozen=True)
class PrimitiveSpec:
    name: str
    template: str
    active: bool
    field_key: str | None = None
    label: str = ""

    def __post_init__(self):
        if self.template not in TEMPLATES:
            raise ValueError(f"unknown template {self.template!r}")
        if self.active != (self.field_key is not None):
            raise ValueError(f"{self.name}: active primitives carry a field key, passive ones do not")


def _a(name, template, label, key=None):
    return PrimitiveSpec(name, template, True, key or name, label)


def _p(name, template, label):
    return PrimitiveSpec(name, template, False, None, label)


_CATALOG = (
    _a("addressline1", "input", "Address"),
    _a("addressline2", "input", "Address line 2"),
    _a("cabin", "multi-selection", "Cabin"),
    _a("captcha", "input", "Enter captcha"),
    _p("carousel", "carousel", "Featured items"),
    _a("cart", "cart", "Promo code", "promocode"),
    _a("cc", "multi-selection", "Card type"),
    _a("cccvv", "input", "CVV"),
    _a("ccexpdate", "input", "Expiration date"),
    _a("ccnumber", "input", "Card number"),
    _a("city", "input", "City"),
    _p("dealmedia", "media", "Deal of the day"),
    _p("deck", "deck", "Products"),
    _a("departureairport", "input", "From"),
    _a("departuredate", "input", "Depart"),
    _a("destinationairport", "input", "To"),
    _a("destinationdate", "input", "Return"),
    _a("firstname", "input", "First name"),
    _a("flighttype", "multi-selection", "Trip type"),
    _p("footer", "footer", "Contact us"),
    _p("forgotpassword", "link", "Forgot password?"),
    _p("forgotusername", "link", "Forgot username?"),
    _a("fullname", "input", "Name on card"),
    _p("header", "label", "Welcome"),
    _p("header_login", "label", "Sign in"),
    _p("header_select_items", "label", "Select items"),
    _a("inpgroup", "input", "Search", "search"),
    _a("lastname", "input", "Last name"),
    _p("navbar", "navbar", "Menu"),
    _p("next_checkout", "button", "Checkout"),
    _p("next_login", "button", "Continue"),
    _p("next_login_page", "button", "Login"),
    _a("numberofpeople", "multi-selection", "Passengers"),
    _a("password", "input", "Password"),
    _a("rememberme", "selection", "Remember me"),
    _a("state", "input", "State"),
    _a("stayloggedin", "selection", "Stay logged in"),
    _p("submit", "button", "Submit"),
    _a("username", "input", "Username"),
    _a("zipcode", "input", "Zip code"),
)

_BY_NAME = {spec.name: spec for spec in _CATALOG}

# the small catalog used for scaled-down curriculum runs
RESTRICTED = ("username", "password", "rememberme", "stayloggedin", "captcha",
              "header_login", "forgotpassword", "next_login")


def catalog(names=None):
    """All primitive specs in canonical order, or the subset named in ``names`` (in that order)."""
    if names is None:
        return list(_CATALOG)
    return [lookup(n) for n in names]


def lookup(name):
    try:
        return _BY_NAME[name]
    except KeyError:
        raise CatalogError(f"unknown primitive {name!r}") from None


# small per-key vocabularies for instruction values
VALUES = {
    "username": ["jdoe", "amy91", "kbrown", "lucas_t", "mia.r"],
    "password": ["hunter2", "s3cret!", "pa55word", "qwerty7", "blue#sky"],
    "captcha": ["x7kq2", "m3pz9", "r8tw1", "b4nc6", "h2vd5"],
    "rememberme": ["checked"],
    "stayloggedin": ["checked"],
    "firstname": ["Alice", "Bob", "Carmen", "Deepak", "Elena"],
    "lastname": ["Smith", "Garcia", "Nguyen", "Okafor", "Rossi"],
    "fullname": ["Alice Smith", "Bob Garcia", "Carmen Nguyen", "Deepak Okafor", "Elena Rossi"],
    "addressline1": ["12 Oak St", "400 Pine Ave", "7 Elm Rd", "88 Lake Dr", "3 Hill Ct"],
    "addressline2": ["Apt 4", "Suite 210", "Unit B", "Floor 3", "Box 17"],
    "city": ["Springfield", "Riverton", "Fairview", "Lakeside", "Greenville"],
    "state": ["CA", "NY", "TX", "WA", "IL"],
    "zipcode": ["94043", "10001", "73301", "98101", "60601"],
    "cc": ["visa", "mastercard", "amex", "discover"],
    "ccnumber": ["4111111111111111", "5500000000000004", "340000000000009", "6011000000000004"],
    "ccexpdate": ["01/27", "06/28", "11/26", "09/29"],
    "cccvv": ["123", "456", "789", "321"],
    "departureairport": ["SFO", "JFK", "LAX", "ORD", "SEA"],
    "destinationairport": ["BOS", "MIA", "DEN", "ATL", "AUS"],
    "departuredate": ["2024-03-02", "2024-05-17", "2024-07-09", "2024-10-21"],
    "destinationdate": ["2024-03-09", "2024-05-24", "2024-07-16", "2024-10-28"],
    "flighttype": ["oneway", "roundtrip"],
    "cabin": ["economy", "premium", "business", "first"],
    "numberofpeople": ["1", "2", "3", "4"],
    "promocode": ["SAVE10", "FREESHIP", "WELCOME5"],
    "search": ["shoes", "laptop", "coffee", "lamp"],
}
