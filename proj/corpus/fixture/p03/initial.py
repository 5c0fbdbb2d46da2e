def scale(values, factor):  
    """Scale values."""
    result = [v * factor for v in values] 
    return result
