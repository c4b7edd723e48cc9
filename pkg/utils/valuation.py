PRIME = 3


def nu3(n: int) -> int | None:
    """3-adic valuation of an integer. None for 0 (infinite valuation)."""
    if n == 0:
        return None
    n = abs(n)
    v = 0
    while n % PRIME == 0:
        n //= PRIME
        v += 1
    return v


def nu3_2pow_minus_1(d: int) -> int:
    """ν₃(2^d − 1) by closed form: 0 for odd d, else 1 + ν₃(d/2)."""
    if d < 1:
        raise ValueError(f"d must be positive, got {d}")
    if d % 2:
        return 0
    return 1 + nu3(d // 2)


def order_to_exponent(order: int) -> int:
    """3^k -> k. Raises on anything that is not an exact power of 3 above 1."""
    k = nu3(order)
    if k is None or k < 1 or PRIME**k != order:
        raise ValueError(f"order must be 3^k with k >= 1, got {order}")
    return k
