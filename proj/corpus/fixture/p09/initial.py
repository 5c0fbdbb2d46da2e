def total_price(prices):
    """Sum prices with a base fee."""
    base = sum(prices)
    return base + undefined_name
