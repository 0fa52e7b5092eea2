from __future__ import annotations

import random
from decimal import Decimal

import pytest

from measqc.errors import NumberError
from measqc.numbers import normalize_number

from .oracles import pow10_decimal


def test_paper_value():
    assert normalize_number("798") == Decimal(798)


def test_zero():
    assert normalize_number("0") == Decimal(0)


@pytest.mark.parametrize(
    "token,expected",
    [
        ("1,234", Decimal(1234)),
        ("1,234.5", Decimal("1234.5")),
        ("-3.5", Decimal("-3.5")),
        ("+42", Decimal(42)),
        (".5", Decimal("0.5")),
        ("1.2e3", Decimal(1200)),
        ("2E-2", Decimal("0.02")),
        ("−7", Decimal(-7)),
    ],
)
def test_plain_forms(token, expected):
    assert normalize_number(token) == expected


def test_power_of_ten_against_big_decimal_oracle():
    cases = [("1.2", 3), ("7", -2), ("3.25", 5), ("-4.1", 2), ("12", 0)]
    for mantissa, exponent in cases:
        token = f"{mantissa}×10^{exponent}"
        assert normalize_number(token) == pow10_decimal(mantissa, exponent)
    assert normalize_number("1.2×10^3") == Decimal(1200)
    assert normalize_number("1.2×10³") == Decimal(1200)
    assert normalize_number("5x10**2") == Decimal(500)


def test_random_pow10_oracle():
    rng = random.Random(20240811)
    for _ in range(200):
        mantissa = f"{rng.randint(1, 999)}.{rng.randint(0, 99):02d}"
        exponent = rng.randint(-6, 6)
        token = f"{mantissa}×10^{exponent}"
        assert normalize_number(token) == pow10_decimal(mantissa, exponent)


@pytest.mark.parametrize(
    "token,expected",
    [
        ("five", 5),
        ("twelve", 12),
        ("twenty-five", 25),
        ("ninety nine", 99),
        ("three hundred", 300),
        ("one hundred and seven", 107),
        ("two hundred forty-two", 242),
    ],
)
def test_number_words(token, expected):
    assert normalize_number(token) == Decimal(expected)


@pytest.mark.parametrize(
    "token",
    ["", "   ", "abc", "Fig.", "1.2.3", "e", "hundred and", "five three", "1,23"],
)
def test_unreadable(token):
    with pytest.raises(NumberError):
        normalize_number(token)
